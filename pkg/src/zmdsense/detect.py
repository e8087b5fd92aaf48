"""Zero measurement detection (ZMD) of vacant sub-channels.

A measurement judged zero certifies every sub-channel it touches as vacant.
Three ways to judge a measurement zero are provided: an exact-zero test for
noiseless data, the likelihood-ratio test, and the ``|y| < c'`` threshold
rule that the LRT collapses to at high SNR.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, special

from . import analysis
from .errors import DegenerateChannel, IndeterminateRatio, UnreachableTarget
from .graphs import DegreeDistribution, SensingGraph
from .operator import MeasurementVector

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelParams:
    alpha: float
    sigma_s: float = 1.0
    sigma_n: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha} outside [0, 1]")
        if self.sigma_s <= 0:
            raise ValueError("sigma_s must be positive")
        if self.sigma_n < 0:
            raise ValueError("sigma_n must be non-negative")

    @classmethod
    def from_snr_db(cls, alpha: float, snr_db: float, sigma_s: float = 1.0) -> "ChannelParams":
        """SNR_dB = 10 log10(sigma_s^2 / sigma_n^2)."""
        return cls(alpha, sigma_s, sigma_s * 10.0 ** (-snr_db / 20.0))

    @property
    def snr_db(self) -> float:
        if self.sigma_n == 0:
            return math.inf
        return 10.0 * math.log10(self.sigma_s ** 2 / self.sigma_n ** 2)


@dataclass(frozen=True, eq=False)
class DetectionReport:
    zero_mask: np.ndarray     # (M,) measurements judged zero
    vacant_mask: np.ndarray   # (L,) sub-channels flagged vacant
    threshold_used: Optional[float] = None

    @property
    def zero_measurements(self) -> np.ndarray:
        return np.flatnonzero(self.zero_mask)

    @property
    def vacant_channels(self) -> np.ndarray:
        return np.flatnonzero(self.vacant_mask)

    def same_as(self, other: "DetectionReport") -> bool:
        return (np.array_equal(self.zero_mask, other.zero_mask)
                and np.array_equal(self.vacant_mask, other.vacant_mask))


def zmd_rule(g: SensingGraph, zero_mask: np.ndarray, threshold: Optional[float] = None) -> DetectionReport:
    """Flag every neighbour of a zero measurement as vacant."""
    zero_mask = np.asarray(zero_mask, dtype=bool)
    vacant = np.zeros(g.L, dtype=bool)
    vacant[g.edge_v[zero_mask[g.edge_m]]] = True
    return DetectionReport(zero_mask, vacant, threshold)


def _values(y) -> np.ndarray:
    return y.y if isinstance(y, MeasurementVector) else np.asarray(y, dtype=float)


def default_eps(g: SensingGraph, sigma_s: float = 1.0, B: int = 1) -> float:
    return 1e-12 * sigma_s * math.sqrt(B) * max(int(g.meas_degrees.max(initial=1)), 1)


def detect_noiseless(y, g: SensingGraph, eps: Optional[float] = None, *,
                     sigma_s: float = 1.0, B: int = 1) -> DetectionReport:
    if eps is None:
        eps = default_eps(g, sigma_s, B)
    return zmd_rule(g, np.abs(_values(y)) <= eps)


def detect_threshold(y, g: SensingGraph, c_prime: float) -> DetectionReport:
    if c_prime < 0:
        raise ValueError("c_prime must be non-negative")
    return zmd_rule(g, np.abs(_values(y)) < c_prime, c_prime)


def hypothesis_prior(i: int, d: int, alpha: float) -> float:
    """Prior of H_i: exactly i of the d neighbours of a measurement are occupied."""
    if not 0 <= i <= d:
        raise ValueError("need 0 <= i <= d")
    return float(special.comb(d, i, exact=True) * alpha ** i * (1.0 - alpha) ** (d - i))


def _check_lrt(d: int, p: ChannelParams):
    if p.sigma_n <= 0:
        raise DegenerateChannel("likelihood ratio needs sigma_n > 0")
    if p.alpha <= 0 or p.alpha >= 1:
        raise DegenerateChannel("likelihood ratio needs 0 < alpha < 1")
    if d < 1:
        raise ValueError("degree must be >= 1")


def log_likelihood_ratio(y_m, d: int, p: ChannelParams):
    """log of P(y | not H_0) / P(y | H_0), evaluated with log-sum-exp over H_1..H_d."""
    _check_lrt(d, p)
    y2 = np.asarray(y_m, dtype=float) ** 2
    i = np.arange(1, d + 1)
    var_i = 4.0 * i * p.sigma_s ** 2 + p.sigma_n ** 2
    log_w = (special.gammaln(d + 1) - special.gammaln(i + 1) - special.gammaln(d - i + 1)
             + i * math.log(p.alpha) + (d - i) * math.log1p(-p.alpha))
    log_terms = (log_w + 0.5 * np.log(p.sigma_n ** 2 / var_i)
                 + (2.0 * i * p.sigma_s ** 2 / (var_i * p.sigma_n ** 2)) * y2[..., None])
    log_norm = math.log(-math.expm1(d * math.log1p(-p.alpha)))
    out = special.logsumexp(log_terms, axis=-1) - log_norm
    return float(out) if np.ndim(out) == 0 else out


def likelihood_ratio(y_m, d: int, p: ChannelParams):
    with np.errstate(over="ignore"):   # +inf is the right answer far out in the tails
        return np.exp(log_likelihood_ratio(y_m, d, p))


def lrt_to_threshold(c: float, d: int, p: ChannelParams) -> float:
    """The c' with Lambda(c') = c, so that Lambda(y) < c  <=>  |y| < c'."""
    _check_lrt(d, p)
    if c <= 0:
        return 0.0
    if math.isinf(c):
        return math.inf
    target = math.log(c)
    f0 = log_likelihood_ratio(0.0, d, p)
    if target <= f0:
        return 0.0
    # log Lambda grows like a * y^2 for large |y|; bracket in y^2
    hi = p.sigma_n ** 2
    while log_likelihood_ratio(math.sqrt(hi), d, p) < target:
        hi *= 4.0
    t = optimize.brentq(lambda t: log_likelihood_ratio(math.sqrt(t), d, p) - target,
                        0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.sqrt(t)


def detect_lrt(y, g: SensingGraph, c: float, p: ChannelParams) -> DetectionReport:
    """Accept H_0 (zero measurement) where Lambda(y_m) < c, using each node's own degree."""
    vals = _values(y)
    deg = g.meas_degrees
    zero = np.zeros(g.M, dtype=bool)
    zero[deg == 0] = True
    if c > 0:
        log_c = math.log(c) if not math.isinf(c) else math.inf
        for d in np.unique(deg[deg > 0]):
            sel = deg == d
            zero[sel] = log_likelihood_ratio(vals[sel], int(d), p) < log_c
    return zmd_rule(g, zero)


def _calibrate(pwzd, p: ChannelParams, target: float) -> float:
    if not 0.0 < target:
        raise ValueError("target P_WZD must be positive")
    if target >= p.alpha:
        return math.inf
    scale = math.sqrt(p.sigma_n ** 2 + p.sigma_s ** 2)
    grid = scale * np.logspace(-8, 3, 221)

    def f(c):
        try:
            return pwzd(c)
        except IndeterminateRatio:
            return 0.0

    vals = np.array([f(c) for c in grid])
    ok = np.flatnonzero(vals <= target)
    if ok.size == 0:
        raise UnreachableTarget(
            f"P_WZD >= {vals.min():.6g} > target {target} for every threshold")
    monotone = bool(np.all(np.diff(vals) >= -1e-12))
    if not monotone:
        log.warning("P_WZD(c') is not monotone on the bracket; using grid search + refinement")
    k = int(ok[-1])
    if k == grid.size - 1:
        return float(grid[-1])
    lo, hi = grid[k], grid[k + 1]
    f_lo, f_hi = vals[k], vals[k + 1]
    for _ in range(200):
        if f_hi - f_lo <= 1e-6 and hi - lo <= 1e-9 * hi:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm <= target:
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
    return float(lo)


def calibrate_threshold(d_M: int, d_V: int, p: ChannelParams, target_pwzd: float) -> float:
    """Largest c' whose analytic P_WZD on a (d_V, d_M)-regular graph stays within the target."""
    def pwzd(c):
        pd_ = analysis.p_d(c, p.sigma_n)
        pfa = analysis.p_fa(c, p.alpha, d_M, p.sigma_s, p.sigma_n)
        return analysis.pwzd_regular_noisy(p.alpha, d_M, d_V, pd_, pfa)
    return _calibrate(pwzd, p, target_pwzd)


def calibrate_threshold_irregular(dist: DegreeDistribution, p: ChannelParams, target_pwzd: float) -> float:
    def pwzd(c):
        pd_ = analysis.p_d(c, p.sigma_n)
        pfa = analysis.p_fa_irregular(c, p.alpha, dist.rho, p.sigma_s, p.sigma_n)
        return analysis.pwzd_irregular_noisy(p.alpha, dist, pd_, pfa)
    return _calibrate(pwzd, p, target_pwzd)
