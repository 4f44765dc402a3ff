"""Phase congruency and gradient magnitude similarity.

Phase congruency follows Kovesi's log-Gabor formulation with the noise
compensation used by FSIM; constants default to the FSIM values.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .._validation import as_luma, check_pair, warn_degenerate

PC_MIN_SIZE = 32
T_PC = 0.85
T_GM = 160.0

SCHARR_X = np.array([[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]]) / 16.0


def _freq_axis(n):
    if n % 2:
        return np.arange(-(n - 1) / 2, (n - 1) / 2 + 1) / (n - 1)
    return np.arange(-n / 2, n / 2) / n


@lru_cache(maxsize=16)
def log_gabor_bank(shape, scales=4, orientations=4, min_wavelength=6.0, mult=2.0,
                   sigma_on_f=0.55, d_theta_on_sigma=1.2):
    """Frequency-domain log-Gabor filters, DC at index ``(0, 0)``.

    Returns
    -------
    ndarray, shape (orientations, scales, rows, cols)
    """
    rows, cols = shape
    x, y = np.meshgrid(_freq_axis(cols), _freq_axis(rows))
    radius = np.fft.ifftshift(np.sqrt(x ** 2 + y ** 2))
    theta = np.fft.ifftshift(np.arctan2(-y, x))
    radius[0, 0] = 1.0
    lowpass = np.fft.ifftshift(1.0 / (1.0 + (np.sqrt(x ** 2 + y ** 2) / 0.45) ** 30))
    radial = []
    for s in range(scales):
        fo = 1.0 / (min_wavelength * mult ** s)
        lg = np.exp(-(np.log(radius / fo) ** 2) / (2 * math.log(sigma_on_f) ** 2)) * lowpass
        lg[0, 0] = 0.0
        radial.append(lg)
    theta_sigma = math.pi / orientations / d_theta_on_sigma
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    bank = np.empty((orientations, scales, rows, cols))
    for o in range(orientations):
        ang = o * math.pi / orientations
        ds = sin_t * math.cos(ang) - cos_t * math.sin(ang)
        dc = cos_t * math.cos(ang) + sin_t * math.sin(ang)
        spread = np.exp(-np.arctan2(ds, dc) ** 2 / (2 * theta_sigma ** 2))
        for s in range(scales):
            bank[o, s] = radial[s] * spread
    bank.setflags(write=False)
    return bank


def phase_congruency(image, scales=4, orientations=4, min_wavelength=6.0, mult=2.0,
                     sigma_on_f=0.55, d_theta_on_sigma=1.2, k=2.0, cut_off_rescale=1.7):
    """Phase congruency map of a gray image, values in [0, 1]."""
    img = as_luma(image)
    rows, cols = img.shape
    bank = log_gabor_bank((rows, cols), scales, orientations, min_wavelength, mult,
                          sigma_on_f, d_theta_on_sigma)
    eo = np.fft.ifft2(np.fft.fft2(img)[None, None] * bank)
    amp = np.abs(eo)
    spatial = np.real(np.fft.ifft2(bank)) * math.sqrt(rows * cols)
    eps = 1e-4

    energy_all = np.zeros((rows, cols))
    an_all = np.zeros((rows, cols))
    for o in range(orientations):
        e, od = eo[o].real, eo[o].imag
        sum_e, sum_o = e.sum(axis=0), od.sum(axis=0)
        x_energy = np.sqrt(sum_e ** 2 + sum_o ** 2) + eps
        mean_e, mean_o = sum_e / x_energy, sum_o / x_energy
        energy = np.sum(e * mean_e + od * mean_o - np.abs(e * mean_o - od * mean_e), axis=0)

        em_n = np.sum(bank[o, 0] ** 2)
        median_e2n = np.median(amp[o, 0] ** 2)
        noise_power = -median_e2n / math.log(0.5) / em_n
        f = spatial[o]
        sum_an2 = np.sum(f ** 2)
        sum_aiaj = sum(np.sum(f[i] * f[j]) for i in range(scales) for j in range(i + 1, scales))
        noise_e2 = 2 * noise_power * sum_an2 + 4 * noise_power * sum_aiaj
        tau = math.sqrt(max(noise_e2, 0.0) / 2)
        t = (tau * math.sqrt(math.pi / 2) + k * math.sqrt((2 - math.pi / 2) * tau ** 2)) / cut_off_rescale

        energy_all += np.maximum(energy - t, 0.0)
        an_all += amp[o].sum(axis=0)
    out = np.zeros((rows, cols))
    np.divide(energy_all, an_all, out=out, where=an_all > 0)
    return out


def phase_congruency_feature(ref, dist, t=T_PC, **pc_kwargs):
    """PC similarity pooled with ``max(PC_ref, PC_dist)`` weights.

    Raises
    ------
    ValueError
        For images smaller than 32x32 in either dimension.
    """
    a, b = check_pair(ref, dist, (PC_MIN_SIZE, PC_MIN_SIZE))
    pa = phase_congruency(a, **pc_kwargs)
    pb = phase_congruency(b, **pc_kwargs)
    w = np.maximum(pa, pb)
    total = w.sum()
    if total == 0:
        warn_degenerate("pc: both phase congruency maps are zero")
        return 1.0
    s = (2 * pa * pb + t) / (pa * pa + pb * pb + t)
    return float(np.sum(s * w) / total)


def gradient_map(image):
    """Scharr gradient magnitude with replicated borders."""
    img = as_luma(image)
    gx = ndimage.correlate(img, SCHARR_X, mode="nearest")
    gy = ndimage.correlate(img, SCHARR_X.T, mode="nearest")
    return np.sqrt(gx ** 2 + gy ** 2)


def gradient_magnitude_feature(ref, dist, t=T_GM):
    """Mean gradient-magnitude similarity."""
    a, b = check_pair(ref, dist, (3, 3))
    ga, gb = gradient_map(a), gradient_map(b)
    return float(np.mean((2 * ga * gb + t) / (ga * ga + gb * gb + t)))
