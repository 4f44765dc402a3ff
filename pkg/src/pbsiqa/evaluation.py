"""Prediction accuracy: logistic remapping, PCC, SROCC and RMSE.

Predictions are mapped onto the MOS scale with the monotone logistic

    f(s) = (b1 - b2) / (1 + exp(-(s - b3) / |b4|)) + b2

before PCC and RMSE are taken.  SROCC is computed on the raw predictions;
a strictly monotone map leaves its magnitude unchanged.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import rankdata

from ._validation import warn_degenerate

UNDEFINED = float("nan")
NM_MAXITER = 2000


def _pair(a, b, min_len=3):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < min_len:
        raise ValueError(f"need at least {min_len} values, got {a.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("inputs must be finite")
    return a, b


def pcc(a, b):
    """Pearson correlation; NaN when either input is constant."""
    a, b = _pair(a, b)
    da, db = a - a.mean(), b - b.mean()
    na, nb = math.sqrt(np.dot(da, da)), math.sqrt(np.dot(db, db))
    if na == 0 or nb == 0:
        return UNDEFINED
    return float(np.clip(np.dot(da, db) / (na * nb), -1.0, 1.0))


def srocc(a, b):
    """Spearman rank correlation with average ranks for ties."""
    a, b = _pair(a, b)
    return pcc(rankdata(a), rankdata(b))


def rmse(a, b):
    a, b = _pair(a, b)
    return float(math.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class LogisticParams:
    """Fitted remapping.

    ``kind`` is ``"logistic"`` for the four-parameter curve, ``"affine"``
    when the straight line ``slope * s + intercept`` fitted better, and
    ``"identity"`` when the predictions were constant and nothing could
    be fitted.
    """

    beta1: float
    beta2: float
    beta3: float
    beta4: float
    kind: str = "logistic"
    slope: float = 1.0
    intercept: float = 0.0
    mse: float = UNDEFINED

    def __call__(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.kind == "affine":
            return self.slope * s + self.intercept
        if self.kind == "identity":
            return s.copy()
        return _logistic(s, self.beta1, self.beta2, self.beta3, abs(self.beta4))

    @property
    def fallback(self):
        return self.kind != "logistic"


def _logistic(s, b1, b2, b3, b4):
    z = np.clip(-(s - b3) / b4, -700.0, 700.0)
    return (b1 - b2) / (1.0 + np.exp(z)) + b2


def _affine(pred, mos):
    a, b = np.polyfit(pred, mos, 1)
    return float(a), float(b), float(np.mean((a * pred + b - mos) ** 2))


def logistic_fit(pred, mos):
    """Fit the logistic remap by multi-start Nelder-Mead least squares.

    Starts from ``(max mos, min mos, median pred, std pred)`` and the same
    point with the asymptotes swapped, each followed by a restart from its
    own optimum.  The best affine line is fitted as well and returned
    instead whenever its MSE is lower, so the remap never does worse than a
    linear one.

    Raises
    ------
    ValueError
        Fewer than five points, or non-finite input.
    """
    pred, mos = _pair(pred, mos, 5)
    if np.ptp(pred) == 0:
        warn_degenerate("logistic fit: predictions are constant; using the identity map")
        return LogisticParams(1.0, 0.0, 0.0, 1.0, kind="identity",
                              mse=float(np.mean((pred - mos) ** 2)))

    # fit in standardized coordinates, map the parameters back afterwards
    mp, sp = pred.mean(), pred.std()
    mm, sm = mos.mean(), mos.std() or 1.0
    s, t = (pred - mp) / sp, (mos - mm) / sm

    def loss(p):
        return float(np.mean((_logistic(s, p[0], p[1], p[2], math.exp(p[3])) - t) ** 2))

    hi, lo = t.max(), t.min()
    starts = [np.array([hi, lo, np.median(s), 0.0]), np.array([lo, hi, np.median(s), 0.0])]
    opts = {"maxiter": NM_MAXITER, "maxfev": 4 * NM_MAXITER, "xatol": 1e-12, "fatol": 1e-16}
    best = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for x0 in starts:
            for _ in range(2):
                r = minimize(loss, x0, method="Nelder-Mead", options=opts)
                x0 = r.x
                if best is None or r.fun < best.fun:
                    best = r
    b1, b2, b3, lb4 = best.x
    params = LogisticParams(mm + sm * b1, mm + sm * b2, mp + sp * b3, sp * math.exp(lb4),
                            mse=float(best.fun) * sm * sm)
    params = LogisticParams(params.beta1, params.beta2, params.beta3, params.beta4,
                            mse=float(np.mean((params(pred) - mos) ** 2)))
    a, b, affine_mse = _affine(pred, mos)
    if affine_mse < params.mse:
        return LogisticParams(params.beta1, params.beta2, params.beta3, params.beta4,
                              kind="affine", slope=a, intercept=b, mse=affine_mse)
    return params


@dataclass(frozen=True)
class EvalReport:
    """Accuracy of a prediction set against MOS."""

    pcc: float
    srocc: float
    rmse: float
    logistic: LogisticParams
    n: int
    skipped: int = 0

    def rows(self):
        lp = self.logistic
        return [("pcc", self.pcc), ("srocc", self.srocc), ("rmse", self.rmse),
                ("beta1", lp.beta1), ("beta2", lp.beta2), ("beta3", lp.beta3), ("beta4", lp.beta4),
                ("remap", lp.kind), ("n", self.n), ("skipped", self.skipped)]

    def to_csv(self, path=None):
        """``metric,value`` CSV; written to ``path`` if given, returned as text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("metric", "value"))
        for k, v in self.rows():
            w.writerow((k, repr(float(v)) if isinstance(v, float) else v))
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    def table(self, label="ParaBoost"):
        """Fixed-width table with one row: method, PCC, SROCC, RMSE."""
        head = f"{'Method':<16}{'PCC':>10}{'SROCC':>10}{'RMSE':>10}"
        row = f"{label:<16}{self.pcc:>10.4f}{self.srocc:>10.4f}{self.rmse:>10.4f}"
        foot = f"n={self.n} skipped={self.skipped} remap={self.logistic.kind}"
        return "\n".join([head, "-" * len(head), row, foot])


def evaluate(pred, mos, skipped=0):
    """Logistic remap, then PCC/RMSE on remapped and SROCC on raw predictions.

    With three or four points the logistic fit is underdetermined and the
    affine remap is used.

    Raises
    ------
    ValueError
        Fewer than three points or mismatched lengths.
    """
    pred, mos = _pair(pred, mos, 3)
    if pred.size < 5:
        if np.ptp(pred) == 0:
            lp = LogisticParams(1.0, 0.0, 0.0, 1.0, kind="identity")
        else:
            a, b, m = _affine(pred, mos)
            lp = LogisticParams(1.0, 0.0, 0.0, 1.0, kind="affine", slope=a, intercept=b, mse=m)
    else:
        lp = logistic_fit(pred, mos)
    remapped = lp(pred)
    return EvalReport(pcc(remapped, mos), srocc(pred, mos), rmse(remapped, mos), lp,
                      int(pred.size), int(skipped))


def performance_gain(current, previous):
    """Relative change in percent; NaN when ``previous`` is zero or undefined."""
    if previous == 0 or not math.isfinite(previous) or not math.isfinite(current):
        return UNDEFINED
    return (current - previous) / previous * 100.0
