"""nu-support vector regression with an RBF kernel.

The dual solved here is the nu-SVR problem in the LIBSVM scaling

    min_{a, a*}  1/2 (a - a*)' K (a - a*) - y' (a - a*)
    s.t.         sum(a - a*) = 0,   sum(a + a*) = C nu n,   0 <= a, a* <= C

so every dual coefficient is bounded by ``C``.  This is the per-sample
normalized textbook form (box ``C' / n``, sum ``C' nu``) with ``C' = C n``,
which keeps the usual LIBSVM ``(C, gamma)`` grids meaningful; the normalized
form itself is available as ``box="normalized"``.  It is solved with a
sequential two-variable (SMO) method using second-order working-set
selection over maximal violating pairs; the tube half-width epsilon falls
out as the multiplier of the ``C nu n`` constraint.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from numba import njit
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.exceptions import ConvergenceWarning, NotFittedError
from sklearn.model_selection import KFold

from ._validation import check_matrix, check_targets

MODEL_FORMAT = "pbsiqa-nu-svr"
MODEL_VERSION = 1
_TAU = 1e-12


class DegenerateFitWarning(UserWarning):
    """Training data admits only a constant predictor."""


def rbf_kernel(x, z, gamma):
    """``exp(-gamma * ||x - z||^2)`` for two vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64).ravel()
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {z.shape[0]}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return float(np.exp(-gamma * np.sum((x - z) ** 2)))


def rbf_matrix(A, B, gamma):
    """Kernel matrix between the rows of ``A`` and ``B``."""
    return np.exp(-gamma * cdist(np.atleast_2d(A), np.atleast_2d(B), "sqeuclidean"))


class UnitScaler(TransformerMixin, BaseEstimator):
    """Affine per-column map of the training range onto [0, 1].

    Values outside the training range are clamped; a constant training
    column maps everything to 0.5.
    """

    def fit(self, X, y=None):
        X = check_matrix(X)
        if X.shape[0] == 0:
            raise ValueError("cannot fit scaling on empty data")
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "data_min_"):
            raise NotFittedError("UnitScaler is not fitted")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        span = self.data_max_ - self.data_min_
        flat = span == 0
        out = (X - self.data_min_) / np.where(flat, 1.0, span)
        out[:, flat] = 0.5
        return np.clip(out, 0.0, 1.0)

    def to_dict(self):
        return {"min": self.data_min_.tolist(), "max": self.data_max_.tolist()}

    @classmethod
    def from_dict(cls, d):
        s = cls()
        s.data_min_ = np.asarray(d["min"], dtype=np.float64)
        s.data_max_ = np.asarray(d["max"], dtype=np.float64)
        s.n_features_in_ = s.data_min_.shape[0]
        return s


# --------------------------------------------------------------------------
# solver

@njit(cache=True)
def _kernel_row(i, X, gamma, slots, slot_of, owner, stamp, clock):
    s = slot_of[i]
    if s < 0:
        s = 0
        for t in range(1, stamp.shape[0]):
            if stamp[t] < stamp[s]:
                s = t
        if owner[s] >= 0:
            slot_of[owner[s]] = -1
        owner[s] = i
        slot_of[i] = s
        n, d = X.shape
        for j in range(n):
            acc = 0.0
            for k in range(d):
                diff = X[i, k] - X[j, k]
                acc += diff * diff
            slots[s, j] = math.exp(-gamma * acc)
    stamp[s] = clock
    return slots[s]


@njit(cache=True)
def _gradient(X, y, gamma, beta, g, slots, slot_of, owner, stamp, clock):
    """Recompute ``g = K (alpha - alpha*) - y`` from scratch."""
    n = y.shape[0]
    for t in range(n):
        g[t] = -y[t]
    for i in range(n):
        c = beta[i] - beta[n + i]
        if c != 0.0:
            clock += 1
            row = _kernel_row(i, X, gamma, slots, slot_of, owner, stamp, clock)
            for t in range(n):
                g[t] += row[t] * c
    return clock


@njit(cache=True)
def _violators(beta, g, box, act, n_act, n):
    """Per-class maximal violators and gaps over the active variables.

    Variable ``t < n`` is alpha_t with gradient ``g[t]``; ``t >= n`` is
    alpha*_(t-n) with gradient ``-g[t-n]``.
    """
    gmaxp, gmaxp2, gmaxn, gmaxn2 = -np.inf, -np.inf, -np.inf, -np.inf
    ip, iN = -1, -1
    for k in range(n_act):
        t = act[k]
        b = beta[t]
        if t < n:
            gt = g[t]
            if b < box and -gt >= gmaxp:
                gmaxp = -gt
                ip = t
            if b > 0.0 and gt >= gmaxp2:
                gmaxp2 = gt
        else:
            gt = g[t - n]
            if b > 0.0 and -gt >= gmaxn:
                gmaxn = -gt
                iN = t
            if b < box and gt >= gmaxn2:
                gmaxn2 = gt
    return gmaxp, gmaxp2, gmaxn, gmaxn2, ip, iN


@njit(cache=True)
def _shrink(beta, g, box, act, n_act, n, gmaxp, gmaxp2, gmaxn, gmaxn2):
    """Drop bound variables that cannot join a violating pair; returns the new count."""
    k = 0
    for q in range(n_act):
        t = act[q]
        b = beta[t]
        keep = True
        if t < n:
            gt = g[t]
            if b >= box:
                keep = gt >= -gmaxp
            elif b <= 0.0:
                keep = gt <= gmaxp2
        else:
            gt = g[t - n]
            if b >= box:
                keep = gt <= gmaxn2
            elif b <= 0.0:
                keep = gt >= -gmaxn
        if keep:
            act[k] = t
            k += 1
    return k


@njit(cache=True)
def _smo(X, y, gamma, box, half_total, tol, max_iter, n_slots, beta0, shrinking):
    n = X.shape[0]
    m = 2 * n
    if beta0.shape[0] == m:
        beta = beta0.copy()
    else:
        beta = np.zeros(m)
        for c in range(2):
            rest = half_total
            for i in range(n):
                v = min(rest, box)
                beta[c * n + i] = v
                rest -= v

    slots = np.empty((n_slots, n))
    slot_of = -np.ones(n, dtype=np.int64)
    owner = -np.ones(n_slots, dtype=np.int64)
    stamp = -np.ones(n_slots, dtype=np.int64)

    # g = K (alpha - alpha*) - y is the alpha gradient; the alpha* gradient is -g
    g = np.empty(n)
    clock = _gradient(X, y, gamma, beta, g, slots, slot_of, owner, stamp, 0)
    act = np.arange(m)
    n_act = m
    # rows whose gradient entry is kept current: every row with an active variable
    live = np.arange(n)
    n_live = n
    period = min(n, 1000)
    countdown = period
    unshrunk = False

    it = 0
    converged = False
    while it < max_iter:
        gmaxp, gmaxp2, gmaxn, gmaxn2, ip, iN = _violators(beta, g, box, act, n_act, n)
        gap = max(gmaxp + gmaxp2, gmaxn + gmaxn2)
        if shrinking:
            if n_act < m and (gap < tol or (not unshrunk and gap <= 10 * tol)):
                # restore every variable before trusting a small gap
                unshrunk = True
                clock = _gradient(X, y, gamma, beta, g, slots, slot_of, owner, stamp, clock)
                n_act = m
                n_live = n
                for t in range(m):
                    act[t] = t
                for r in range(n):
                    live[r] = r
                gmaxp, gmaxp2, gmaxn, gmaxn2, ip, iN = _violators(beta, g, box, act, n_act, n)
                gap = max(gmaxp + gmaxp2, gmaxn + gmaxn2)
            countdown -= 1
            if countdown == 0:
                countdown = period
                if gap >= tol:
                    n_act = _shrink(beta, g, box, act, n_act, n, gmaxp, gmaxp2, gmaxn, gmaxn2)
                    seen = np.zeros(n, dtype=np.bool_)
                    for q in range(n_act):
                        seen[act[q] % n] = True
                    n_live = 0
                    for r in range(n):
                        if seen[r]:
                            live[n_live] = r
                            n_live += 1
        if gap < tol:
            converged = True
            break

        # second-order choice of j against each class's maximal violator;
        # the gain diff^2 / quad is compared as a fraction to avoid dividing
        best_num, best_den, best_j = -1.0, 1.0, -1
        rowp = slots[0]
        rown = slots[0]
        if ip >= 0:
            clock += 1
            rowp = _kernel_row(ip, X, gamma, slots, slot_of, owner, stamp, clock)
        if iN >= 0:
            clock += 1
            rown = _kernel_row(iN - n, X, gamma, slots, slot_of, owner, stamp, clock)
        for q in range(n_act):
            t = act[q]
            b = beta[t]
            if t < n:
                if ip >= 0 and b > 0.0:
                    diff = gmaxp + g[t]
                    if diff > 0:
                        quad = 2.0 - 2.0 * rowp[t]
                        if quad <= 0:
                            quad = _TAU
                        num = diff * diff
                        if num * best_den >= best_num * quad:
                            best_num, best_den, best_j = num, quad, t
            elif iN >= 0 and b < box:
                diff = gmaxn + g[t - n]
                if diff > 0:
                    quad = 2.0 - 2.0 * rown[t - n]
                    if quad <= 0:
                        quad = _TAU
                    num = diff * diff
                    if num * best_den >= best_num * quad:
                        best_num, best_den, best_j = num, quad, t
        if best_j < 0:
            converged = True
            break
        j = best_j
        i = ip if j < n else iN
        ri, rj = i % n, j % n
        # refresh row i so fetching row j cannot evict it
        clock += 1
        ki = _kernel_row(ri, X, gamma, slots, slot_of, owner, stamp, clock)
        clock += 1
        kj = _kernel_row(rj, X, gamma, slots, slot_of, owner, stamp, clock)
        # both indices sit in the same class, so Q_ij = K_ij
        quad = 2.0 - 2.0 * ki[rj]
        if quad <= 0:
            quad = _TAU
        if j < n:
            gi, gj = g[ri], g[rj]
        else:
            gi, gj = -g[ri], -g[rj]
        old_i, old_j = beta[i], beta[j]
        delta = (gi - gj) / quad
        total = old_i + old_j
        bi = old_i - delta
        bj = old_j + delta
        if total > box:
            if bi > box:
                bi = box
                bj = total - box
        else:
            if bj < 0:
                bj = 0.0
                bi = total
        if total > box:
            if bj > box:
                bj = box
                bi = total - box
        else:
            if bi < 0:
                bi = 0.0
                bj = total
        beta[i], beta[j] = bi, bj
        di, dj = bi - old_i, bj - old_j
        if j >= n:
            di, dj = -di, -dj
        for q in range(n_live):
            r = live[q]
            g[r] += ki[r] * di + kj[r] * dj
        it += 1
    if n_act < m:
        clock = _gradient(X, y, gamma, beta, g, slots, slot_of, owner, stamp, clock)
    grad = np.empty(m)
    for t in range(n):
        grad[t] = g[t]
        grad[n + t] = -g[t]
    return beta, grad, it, converged


def _bias_and_epsilon(beta, grad, box, n):
    """Offset ``b`` and tube width from the free variables of each class."""
    rs = []
    for cls in (slice(0, n), slice(n, 2 * n)):
        b, g = beta[cls], grad[cls]
        free = (b > 0) & (b < box)
        at_upper, at_lower = b >= box, b <= 0
        if free.any():
            r = g[free].mean()
        else:
            ub = g[at_lower].min() if at_lower.any() else np.inf
            lb = g[at_upper].max() if at_upper.any() else -np.inf
            r = (ub + lb) / 2
        rs.append(r)
    r1, r2 = rs
    rho = (r1 - r2) / 2
    return -rho, -(r1 + r2) / 2


def kkt_violation(X, y, alpha, alpha_star, box, nu, gamma):
    """Maximal KKT violation of a nu-SVR dual point, recomputed from scratch.

    ``X`` must already be in the solver's (scaled) coordinates and ``box``
    is the per-coefficient upper bound.  Returns the
    larger of the two per-class gaps ``max_up(-G) - min_low(-G)``; a value
    below the solver tolerance certifies approximate optimality.
    """
    X = check_matrix(X)
    y = check_targets(y, X.shape[0])
    box = float(box)
    coef = np.asarray(alpha) - np.asarray(alpha_star)
    kc = rbf_matrix(X, X, gamma) @ coef
    worst = 0.0
    for b, g in ((np.asarray(alpha), kc - y), (np.asarray(alpha_star), y - kc)):
        up = b < box * (1 - 1e-12)
        low = b > box * 1e-12
        worst = max(worst, _class_gap(b, g, box, up, low))
    return worst


def _class_gap(b, g, box, up, low):
    if not up.any() or not low.any():
        return 0.0
    return max(0.0, float(np.max(-g[up]) + np.max(g[low])))


def dual_objective(K, y, coef):
    """Objective ``1/2 c'Kc - y'c`` of the nu-SVR dual for coefficients ``c``."""
    coef = np.asarray(coef, dtype=np.float64)
    return float(0.5 * coef @ K @ coef - np.asarray(y) @ coef)


class NuSVR(RegressorMixin, BaseEstimator):
    """nu-SVR regressor with an RBF kernel and built-in [0, 1] feature scaling.

    Parameters
    ----------
    C : float
        Regularization strength.
    box : {"libsvm", "normalized"}
        ``"libsvm"`` bounds each dual coefficient by ``C`` with
        ``sum(a + a*) = C nu n``; ``"normalized"`` bounds it by ``C / n`` with
        ``sum(a + a*) = C nu``, which makes the fit invariant to duplicating
        every training row.
    nu : float
        In (0, 1); lower-bounds the fraction of support vectors.
    gamma : float
        RBF width parameter.
    tol : float
        Stop when the maximal KKT violation drops below this.
    max_kernel_evals : int
        Budget of kernel evaluations.  Each iteration is charged the three
        kernel columns it reads (the maximal violator of each class and the
        partner of the chosen one), ``3 n`` evaluations whether or not they
        were cached, so the cap does not depend on the cache size.
        Exhausting it raises a :class:`~sklearn.exceptions.ConvergenceWarning`.
    cache_size : float
        Kernel row cache in MB, least-recently-used eviction.
    shrinking : bool
        Temporarily drop bound variables that cannot join a violating pair.
        The full gradient is rebuilt before convergence is declared, so the
        stopping test always covers every variable.

    Attributes
    ----------
    scaler_ : UnitScaler
    support_vectors_ : ndarray
        Scaled training rows with nonzero coefficient.
    dual_coef_ : ndarray
        ``alpha - alpha*`` for the support vectors.
    intercept_ : float
    epsilon_ : float
        Tube half-width found by the solver.
    alpha_, alpha_star_ : ndarray
        Full dual solution over the training set.
    """

    def __init__(self, C=1.0, nu=0.5, gamma=1.0, tol=1e-3, max_kernel_evals=10 ** 7, cache_size=256,
                 shrinking=True, box="libsvm"):
        self.C = C
        self.box = box
        self.nu = nu
        self.gamma = gamma
        self.tol = tol
        self.max_kernel_evals = max_kernel_evals
        self.cache_size = cache_size
        self.shrinking = shrinking

    def _check_params(self):
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not 0 < self.nu < 1:
            raise ValueError(f"nu must lie in (0, 1), got {self.nu}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.box not in ("libsvm", "normalized"):
            raise ValueError(f"box must be 'libsvm' or 'normalized', got {self.box!r}")

    def fit(self, X, y, init=None):
        """Solve the dual on ``(X, y)``.

        ``init`` may be a :class:`NuSVR` already fitted on the same rows
        with another ``C``; its solution, rescaled to this ``C``, is a
        feasible starting point and usually saves most iterations along a
        grid of increasing ``C``.
        """
        self._check_params()
        X = check_matrix(X)
        y = check_targets(y, X.shape[0])
        n = X.shape[0]
        if n < 2:
            raise ValueError("nu-SVR needs at least 2 training rows")
        self.scaler_ = UnitScaler().fit(X)
        Z = self.scaler_.transform(X)
        self.n_features_in_ = X.shape[1]
        box = float(self.C) if self.box == "libsvm" else float(self.C) / n
        self.box_ = box
        if np.all(Z == Z[0]):
            if np.ptp(y) > 0:
                warnings.warn("all training rows are identical; fitting the constant mean predictor",
                              DegenerateFitWarning, stacklevel=2)
            self.alpha_ = np.zeros(n)
            self.alpha_star_ = np.zeros(n)
            self.support_ = np.zeros(0, dtype=np.int64)
            self.support_vectors_ = np.zeros((0, X.shape[1]))
            self.dual_coef_ = np.zeros(0)
            self.intercept_ = float(np.mean(y))
            self.epsilon_ = float(np.max(np.abs(y - self.intercept_)))
            self.n_iter_, self.converged_ = 0, True
            self.fit_X_, self.fit_y_ = Z, y
            return self
        n_slots = int(min(n, max(2, self.cache_size * 2 ** 20 // (8 * n))))
        max_iter = max(1, int(self.max_kernel_evals) // (3 * n))
        beta0 = np.zeros(0)
        if init is not None and getattr(init, "alpha_", np.zeros(0)).shape[0] == n and init.nu == self.nu:
            beta0 = np.concatenate([init.alpha_, init.alpha_star_]) * (box / init.box_)
        beta, grad, it, ok = _smo(np.ascontiguousarray(Z), y, float(self.gamma), box,
                                  box * self.nu * n / 2.0, float(self.tol), max_iter, n_slots,
                                  beta0, bool(self.shrinking))
        if not ok:
            warnings.warn(f"nu-SVR did not converge within {it} iterations "
                          f"(C={self.C}, gamma={self.gamma})", ConvergenceWarning, stacklevel=2)
        self.alpha_, self.alpha_star_ = beta[:n].copy(), beta[n:].copy()
        coef = self.alpha_ - self.alpha_star_
        self.support_ = np.flatnonzero(coef != 0)
        self.support_vectors_ = Z[self.support_]
        self.dual_coef_ = coef[self.support_]
        self.intercept_, self.epsilon_ = (float(v) for v in _bias_and_epsilon(beta, grad, box, n))
        self.n_iter_, self.converged_ = int(it), bool(ok)
        self.fit_X_, self.fit_y_ = Z, y
        return self

    def _decision(self, Z):
        if self.support_vectors_.shape[0] == 0:
            return np.full(Z.shape[0], self.intercept_)
        return rbf_matrix(Z, self.support_vectors_, self.gamma) @ self.dual_coef_ + self.intercept_

    def predict(self, X):
        if not hasattr(self, "intercept_"):
            raise NotFittedError("NuSVR is not fitted")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self._decision(self.scaler_.transform(X))

    def kkt_violation(self):
        """Recompute the KKT gap of the stored solution on the training data."""
        return kkt_violation(self.fit_X_, self.fit_y_, self.alpha_, self.alpha_star_,
                             self.box_, self.nu, self.gamma)

    # serialization -----------------------------------------------------

    def to_dict(self):
        if not hasattr(self, "intercept_"):
            raise NotFittedError("NuSVR is not fitted")
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kernel": "rbf",
            "gamma": float(self.gamma),
            "nu": float(self.nu),
            "C": float(self.C),
            "box": self.box,
            "scaling": self.scaler_.to_dict(),
            "support_vectors": self.support_vectors_.tolist(),
            "dual_coef": self.dual_coef_.tolist(),
            "bias": self.intercept_,
            "epsilon": self.epsilon_,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT or d.get("kernel") != "rbf":
            raise ValueError("not a pbsiqa nu-SVR model document")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')}")
        m = cls(C=d["C"], nu=d["nu"], gamma=d["gamma"], box=d.get("box", "libsvm"))
        m.scaler_ = UnitScaler.from_dict(d["scaling"])
        m.n_features_in_ = m.scaler_.n_features_in_
        sv = np.asarray(d["support_vectors"], dtype=np.float64)
        m.support_vectors_ = sv.reshape(-1, m.n_features_in_)
        m.dual_coef_ = np.asarray(d["dual_coef"], dtype=np.float64)
        m.intercept_ = float(d["bias"])
        m.epsilon_ = float(d.get("epsilon", 0.0))
        return m

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# --------------------------------------------------------------------------
# model selection

def _pow2(lo, hi, step=2):
    return tuple(2.0 ** e for e in range(lo, hi + 1, step))


@dataclass(frozen=True)
class GridSearchSpec:
    """Exhaustive ``(C, gamma)`` grid scored by k-fold cross-validated MSE."""

    C_grid: tuple = field(default_factory=lambda: _pow2(-5, 15))
    gamma_grid: tuple = field(default_factory=lambda: _pow2(-15, 3))
    folds: int = 5

    def __post_init__(self):
        if not self.C_grid or not self.gamma_grid:
            raise ValueError("grids must be non-empty")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")


def _gamma_path(X, y, splits, C_grid, gamma, nu, tol):
    """Pooled CV MSE for every C at one gamma, warm-starting along increasing C."""
    sq = np.zeros(len(C_grid))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        warnings.simplefilter("ignore", DegenerateFitWarning)
        for tr, te in splits:
            prev = None
            for k, C in enumerate(C_grid):
                m = NuSVR(C=C, nu=nu, gamma=gamma, tol=tol).fit(X[tr], y[tr], init=prev)
                sq[k] += float(np.sum((m.predict(X[te]) - y[te]) ** 2))
                prev = m
    return sq / len(y)


def grid_search(X, y, spec=None, seed=0, nu=0.5, tol=1e-3, n_jobs=None):
    """Pick ``(C, gamma)`` minimizing k-fold CV MSE.

    Fold assignment is shuffled with ``seed``.  Ties go to the smaller C,
    then the smaller gamma.

    Returns
    -------
    C, gamma, cv_mse : float
    table : list of (C, gamma, cv_mse)
    """
    spec = spec or GridSearchSpec()
    X = check_matrix(X)
    y = check_targets(y, X.shape[0])
    if X.shape[0] < spec.folds:
        raise ValueError(f"{X.shape[0]} samples cannot fill {spec.folds} folds")
    splits = list(KFold(spec.folds, shuffle=True, random_state=seed).split(X))
    Cs, gammas = sorted(spec.C_grid), sorted(spec.gamma_grid)
    paths = Parallel(n_jobs=n_jobs)(
        delayed(_gamma_path)(X, y, splits, Cs, g, nu, tol) for g in gammas)
    # rows ordered by (C, gamma) so the first minimum is the tie-break winner
    table = [(C, g, float(paths[j][i])) for i, C in enumerate(Cs) for j, g in enumerate(gammas)]
    best = min(range(len(table)), key=lambda k: (table[k][2], k))
    C, g, s = table[best]
    return C, g, s, table


class NuSVRCV(RegressorMixin, BaseEstimator):
    """:class:`NuSVR` whose ``(C, gamma)`` come from :func:`grid_search`.

    After the search the final model is refit on all the training rows.
    """

    def __init__(self, nu=0.5, grid=None, random_state=0, tol=1e-3, n_jobs=None):
        self.nu = nu
        self.grid = grid
        self.random_state = random_state
        self.tol = tol
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X = check_matrix(X)
        y = check_targets(y, X.shape[0])
        grid = self.grid or GridSearchSpec()
        if X.shape[0] < grid.folds:
            grid = GridSearchSpec(grid.C_grid, grid.gamma_grid, max(2, X.shape[0]))
        C, g, mse, table = grid_search(X, y, grid, self.random_state, self.nu, self.tol, self.n_jobs)
        self.best_params_ = {"C": C, "gamma": g}
        self.best_score_ = mse
        self.cv_results_ = table
        self.best_estimator_ = NuSVR(C=C, nu=self.nu, gamma=g, tol=self.tol).fit(X, y)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "best_estimator_"):
            raise NotFittedError("NuSVRCV is not fitted")
        return self.best_estimator_.predict(X)
