"""Closed-form performance predictors for zero measurement detection (ZMD).

Notation: ``alpha`` is the occupancy probability of a sub-channel,
``d_M``/``d_V`` are measurement/sub-channel degrees of a biregular graph, and
irregular graphs are described by a node-perspective
:class:`~zmdsense.graphs.DegreeDistribution`.

* P_ZD  -- fraction of vacant sub-channels that get flagged vacant.
* P_WZD -- fraction of flagged sub-channels that are in fact occupied.
* P_D   -- probability a zero (noise-only) measurement passes ``|y| < c'``.
* P_FA  -- probability a non-zero measurement passes ``|y| < c'``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .errors import DegenerateChannel, IndeterminateRatio
from .graphs import DegreeDistribution


def erf(x):
    """Error function, (2/sqrt(pi)) * integral_0^x exp(-t^2) dt."""
    out = special.erf(x)
    return float(out) if np.ndim(out) == 0 else out


def binomial_weights(d: int, alpha: float) -> np.ndarray:
    """P(exactly i of d neighbours occupied), i = 0..d."""
    i = np.arange(d + 1)
    return special.comb(d, i) * alpha ** i * (1.0 - alpha) ** (d - i)


def _one_minus_pow(x, n):
    """1 - (1 - x)**n without cancellation for small x."""
    if np.all(np.asarray(n) == 0):
        return np.zeros_like(np.asarray(x, dtype=float))   # (1 - x)**0 = 1, even at x = 1
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.expm1(n * np.log1p(-x))
    return np.where(np.asarray(n) == 0, 0.0, out)


def p_zero_measurement(alpha: float, d_M: int) -> float:
    """Probability that a degree-d_M measurement has only vacant neighbours."""
    return (1.0 - alpha) ** d_M


def pzd_regular_noiseless(alpha: float, d_M: int, d_V: int) -> float:
    # p0 = P(an edge from a vacant VN lands on a zero MN) = (1-alpha)^(d_M-1)
    p0 = (1.0 - alpha) ** (d_M - 1)
    return float(1.0 - (1.0 - p0) ** d_V)


def edge_zero_probability(alpha: float, rho: dict) -> float:
    """Edge-perspective chance that the MN at the far end of a vacant VN's edge is zero."""
    num = sum(j * r * (1.0 - alpha) ** (j - 1) for j, r in rho.items() if j > 0)
    den = sum(j * r for j, r in rho.items())
    if den == 0:
        return 0.0
    return num / den


def pzd_irregular_noiseless(alpha: float, dist: DegreeDistribution) -> float:
    p0 = edge_zero_probability(alpha, dist.rho)
    return float(1.0 - sum(lam * (1.0 - p0) ** i for i, lam in dist.lam.items()))


def p_d(c_prime, sigma_n: float):
    """P(|n| < c') for n ~ N(0, sigma_n^2).  With sigma_n = 0 the limit (1 for c' > 0) is returned."""
    c = np.asarray(c_prime, dtype=float)
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    if sigma_n == 0:
        out = np.where(c > 0, 1.0, 0.0)
    else:
        out = special.erf(c / math.sqrt(2.0 * sigma_n ** 2))
    return float(out) if out.ndim == 0 else out


def p_fa(c_prime, alpha: float, d_M: int, sigma_s: float, sigma_n: float):
    """P(|y| < c' | at least one of the d_M neighbours is occupied).

    Under H_i (i occupied neighbours, unit-norm blocks) y ~ N(0, 4 i sigma_s^2 + sigma_n^2).
    """
    if alpha <= 0.0 or d_M < 1:
        raise DegenerateChannel("no non-zero measurement is possible (alpha = 0 or d_M = 0)")
    c = np.asarray(c_prime, dtype=float)
    w = binomial_weights(d_M, alpha)[1:]
    i = np.arange(1, d_M + 1)
    sd = np.sqrt(2.0 * (4.0 * i * sigma_s ** 2 + sigma_n ** 2))
    terms = special.erf(c[..., None] / sd)
    out = np.clip((terms * w).sum(axis=-1) / _one_minus_pow(alpha, d_M), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def p_fa_irregular(c_prime, alpha: float, rho: dict, sigma_s: float, sigma_n: float):
    """P_FA averaged over the non-zero measurements of an irregular ensemble."""
    if alpha <= 0.0:
        raise DegenerateChannel("alpha = 0: no non-zero measurement is possible")
    num, den = 0.0, 0.0
    for j, r in rho.items():
        if j < 1 or r == 0:
            continue
        w = r * _one_minus_pow(alpha, j)
        num = num + w * np.asarray(p_fa(c_prime, alpha, j, sigma_s, sigma_n))
        den += w
    if den == 0:
        raise DegenerateChannel("no measurement node has positive degree")
    out = np.clip(np.asarray(num / den), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _check_prob(**kw):
    for k, v in kw.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{k}={v} is not a probability")


def pwzd_regular_noisy(alpha: float, d_M: int, d_V: int, p_d: float, p_fa: float) -> float:
    _check_prob(alpha=alpha, p_d=p_d, p_fa=p_fa)
    pz = (1.0 - alpha) ** d_M
    flag = pz * p_d + (1.0 - pz) * p_fa
    den = _one_minus_pow(flag, d_V)
    if den <= 0.0:
        raise IndeterminateRatio("no sub-channel is ever flagged (denominator is zero)")
    return float(alpha * _one_minus_pow(p_fa, d_V) / den)


def pzd_regular_noisy(alpha: float, d_M: int, d_V: int, p_d: float, p_fa: float) -> float:
    _check_prob(alpha=alpha, p_d=p_d, p_fa=p_fa)
    p0 = (1.0 - alpha) ** (d_M - 1)
    return float(_one_minus_pow(p0 * p_d + (1.0 - p0) * p_fa, d_V))


def pwzd_irregular_noisy(alpha: float, dist: DegreeDistribution, p_d: float, p_fa: float) -> float:
    _check_prob(alpha=alpha, p_d=p_d, p_fa=p_fa)
    pz = sum(r * (1.0 - alpha) ** j for j, r in dist.rho.items())
    flag = p_fa + (p_d - p_fa) * pz
    # 1 - sum_i lam_i (1 - x)^i == sum_i lam_i (1 - (1 - x)^i)
    num = alpha * sum(lam * _one_minus_pow(p_fa, i) for i, lam in dist.lam.items())
    den = sum(lam * _one_minus_pow(flag, i) for i, lam in dist.lam.items())
    if den <= 0.0:
        raise IndeterminateRatio("no sub-channel is ever flagged (denominator is zero)")
    return float(num / den)


def pzd_irregular_noisy(alpha: float, dist: DegreeDistribution, p_d: float, p_fa: float) -> float:
    _check_prob(alpha=alpha, p_d=p_d, p_fa=p_fa)
    p0 = edge_zero_probability(alpha, dist.rho)
    flag = p_fa + (p_d - p_fa) * p0
    return float(sum(lam * _one_minus_pow(flag, i) for i, lam in dist.lam.items()))


def edge_flag_probabilities(c_prime: float, alpha: float, d_M: int, sigma_s: float,
                            sigma_n: float) -> tuple[float, float]:
    """P(far-end measurement flagged) for an edge leaving a vacant / an occupied sub-channel.

    Conditions on the sub-channel's own state, so the number of occupied
    co-neighbours is Binomial(d_M - 1, alpha).  Diagnostic counterpart of the
    unconditional P_FA used by the closed forms above.
    """
    w = binomial_weights(d_M - 1, alpha)
    j = np.arange(d_M)
    # |y| < c' with y ~ N(0, var) has probability p_d(c', sqrt(var))
    e_vac = np.array([p_d(c_prime, math.sqrt(4.0 * k * sigma_s ** 2 + sigma_n ** 2)) for k in j])
    e_occ = np.array([p_d(c_prime, math.sqrt(4.0 * (k + 1) * sigma_s ** 2 + sigma_n ** 2)) for k in j])
    return float(w @ e_vac), float(w @ e_occ)


def predict_edge_conditioned(alpha: float, d_M: int, d_V: int, c_prime: float,
                             sigma_s: float = 1.0, sigma_n: float = 0.0) -> tuple[float, float]:
    """(P_ZD, P_WZD) on a locally tree-like regular graph using edge-conditioned flag rates."""
    q_vac, q_occ = edge_flag_probabilities(c_prime, alpha, d_M, sigma_s, sigma_n)
    hit_vac = _one_minus_pow(q_vac, d_V)
    hit_occ = _one_minus_pow(q_occ, d_V)
    den = alpha * hit_occ + (1.0 - alpha) * hit_vac
    if den <= 0:
        raise IndeterminateRatio("no sub-channel is ever flagged")
    return float(hit_vac), float(alpha * hit_occ / den)


@dataclass(frozen=True)
class AnalyticalPrediction:
    p_zd: float
    p_wzd: Optional[float]
    p_fa: Optional[float]
    p_d: float
    alpha: float
    dist: DegreeDistribution
    sigma_s: float = 1.0
    sigma_n: float = 0.0
    c_prime: Optional[float] = None
    notes: tuple = field(default_factory=tuple)


def predict(alpha: float, dist: DegreeDistribution, sigma_s: float = 1.0, sigma_n: float = 0.0,
            c_prime: Optional[float] = None) -> AnalyticalPrediction:
    """All four probabilities for one operating point.

    ``c_prime=None`` means the noiseless exact-zero rule (P_D = 1, P_FA = 0).
    Undefined quantities are returned as ``None`` with an explanatory note.
    """
    notes = []
    regular = len(dist.lam) == 1 and len(dist.rho) == 1
    if c_prime is None:
        pd_, pfa = 1.0, 0.0
    else:
        pd_ = p_d(c_prime, sigma_n)
        try:
            if regular:
                pfa = p_fa(c_prime, alpha, next(iter(dist.rho)), sigma_s, sigma_n)
            else:
                pfa = p_fa_irregular(c_prime, alpha, dist.rho, sigma_s, sigma_n)
        except DegenerateChannel as exc:
            pfa = None
            notes.append(f"p_fa undefined: {exc}")
    pfa_used = 0.0 if pfa is None else pfa
    if regular:
        (d_V,), (d_M,) = dist.lam, dist.rho
        pzd = pzd_regular_noisy(alpha, d_M, d_V, pd_, pfa_used)
    else:
        pzd = pzd_irregular_noisy(alpha, dist, pd_, pfa_used)
    try:
        if regular:
            pwzd = pwzd_regular_noisy(alpha, d_M, d_V, pd_, pfa_used)
        else:
            pwzd = pwzd_irregular_noisy(alpha, dist, pd_, pfa_used)
    except IndeterminateRatio as exc:
        pwzd = None
        notes.append(f"p_wzd undefined: {exc}")
    return AnalyticalPrediction(pzd, pwzd, pfa, pd_, alpha, dist, sigma_s, sigma_n, c_prime, tuple(notes))
