"""Seeded Monte Carlo harness and figure presets.

Each trial draws a fresh graph, occupancy pattern, spectrum, sensing matrix
and noise vector from its own RNG streams, all derived from
``(seed, trial_index)``.  Results therefore do not depend on how trials are
scheduled across worker processes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import analysis
from .detect import (
    ChannelParams,
    calibrate_threshold,
    calibrate_threshold_irregular,
    detect_lrt,
    detect_noiseless,
    detect_threshold,
    lrt_to_threshold,
)
from .errors import UnknownPreset, UnreachableTarget
from .graphs import (
    DegreeDistribution,
    SensingGraph,
    build_irregular_graph,
    build_one_to_one_graph,
    build_regular_graph,
)
from .operator import build_sensing_matrix, measure
from .spectrum import sample_occupancy, sample_spectrum

Z95 = 1.959963984540054

CSV_COLUMNS = [
    "axis_name", "axis_value", "L", "M", "B", "alpha", "d_M", "d_V", "sigma_s", "sigma_n",
    "c_prime", "p_zd_analytic", "p_zd_mc", "p_zd_ci", "p_wzd_analytic", "p_wzd_mc", "p_wzd_ci",
    "p_d_analytic", "p_d_mc", "p_fa_analytic", "p_fa_mc", "trials", "undefined_pwzd_trials", "seed",
]

GRAPH_KINDS = ("regular", "irregular", "one_to_one")
DETECTOR_MODES = ("noiseless", "lrt", "threshold", "calibrated")

# stream slots spawned from each trial's SeedSequence
_GRAPH, _OCC, _SPEC, _OP, _NOISE = range(5)


def _int_keys(d):
    return None if d is None else {int(k): float(v) for k, v in d.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    L: int = 1000
    M: int = 500
    B: int = 1
    graph: str = "regular"
    d_M: Optional[int] = 2
    lam: Optional[dict] = None
    rho: Optional[dict] = None
    alpha: float = 0.25
    sigma_s: float = 1.0
    sigma_n: float = 0.0
    detector: str = "noiseless"   # noiseless | lrt:<c> | threshold:<c'> | calibrated:<target P_WZD>
    trials: int = 1000
    seed: int = 0
    fixed_graph: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lam", _int_keys(self.lam))
        object.__setattr__(self, "rho", _int_keys(self.rho))
        self.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        snr = d.pop("snr_db", None)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        if snr is not None:
            cfg = replace(cfg, sigma_n=snr_to_sigma_n(snr, cfg.sigma_s))
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        if self.graph not in GRAPH_KINDS:
            raise ValueError(f"graph must be one of {GRAPH_KINDS}")
        if self.L < 1 or self.M < 1 or self.B < 1:
            raise ValueError("L, M, B must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.sigma_s <= 0 or self.sigma_n < 0:
            raise ValueError("need sigma_s > 0 and sigma_n >= 0")
        mode, _ = self.detector_mode
        if mode not in DETECTOR_MODES:
            raise ValueError(f"detector mode must be one of {DETECTOR_MODES}")
        if self.graph == "regular":
            if self.d_M is None or (self.M * self.d_M) % self.L:
                raise ValueError(f"regular graph needs L | M*d_M (L={self.L}, M={self.M}, d_M={self.d_M})")
        elif self.graph == "irregular":
            if self.lam is None or self.rho is None:
                raise ValueError("irregular graph needs lam and rho")
            v, m = self.distribution.node_counts(self.L, self.M)
            if sum(d * c for d, c in v.items()) != sum(d * c for d, c in m.items()):
                raise ValueError("degree distribution is not realizable for (L, M)")
        elif self.M > self.L:
            raise ValueError("one_to_one graph needs M <= L")

    @property
    def detector_mode(self) -> tuple[str, Optional[float]]:
        mode, _, val = self.detector.partition(":")
        return mode, (float(val) if val else None)

    @property
    def d_V(self) -> Optional[int]:
        if self.graph == "regular":
            return self.M * self.d_M // self.L
        return None

    @property
    def distribution(self) -> DegreeDistribution:
        if self.graph == "regular":
            return DegreeDistribution.regular(self.d_V, self.d_M)
        if self.graph == "one_to_one":
            lam = {1: self.M / self.L}
            if self.M < self.L:
                lam[0] = 1.0 - self.M / self.L
            return DegreeDistribution(lam, {1: 1.0})
        return DegreeDistribution(self.lam, self.rho)

    @property
    def params(self) -> ChannelParams:
        return ChannelParams(self.alpha, self.sigma_s, self.sigma_n)


def snr_to_sigma_n(snr_db: float, sigma_s: float = 1.0) -> float:
    """SNR_dB = 10 log10(sigma_s^2 / sigma_n^2)."""
    return sigma_s * 10.0 ** (-snr_db / 20.0)


def build_graph(cfg: ExperimentConfig, rng) -> SensingGraph:
    if cfg.graph == "regular":
        return build_regular_graph(cfg.L, cfg.M, cfg.d_M, rng)
    if cfg.graph == "one_to_one":
        return build_one_to_one_graph(cfg.L, cfg.M, rng)
    return build_irregular_graph(cfg.L, cfg.M, cfg.distribution, rng)


@dataclass
class TrialMetrics:
    L: int
    M: int
    zero_blocks: int     # truly vacant sub-channels
    detected: int        # sub-channels flagged vacant
    correct: int         # flagged and vacant
    wrong: int           # flagged but occupied
    mz_c: int            # zero measurements judged zero
    mz_w: int            # non-zero measurements judged zero
    mnz_c: int           # non-zero measurements judged non-zero
    mnz_w: int           # zero measurements judged non-zero

    @staticmethod
    def _ratio(a, b):
        return a / b if b else math.nan

    @property
    def p_zd(self):
        return self._ratio(self.correct, self.zero_blocks)

    @property
    def p_wzd(self):
        return self._ratio(self.wrong, self.detected)

    @property
    def p_d(self):
        return self._ratio(self.mz_c, self.mz_c + self.mnz_w)

    @property
    def p_fa(self):
        return self._ratio(self.mz_w, self.mz_w + self.mnz_c)


@dataclass(frozen=True)
class _Plan:
    """Per-point quantities resolved once before the trials run."""
    c_prime: Optional[float]
    graph: Optional[SensingGraph] = None
    unreachable: bool = False


def _trial_streams(seed: int, trial_index: int):
    ss = np.random.SeedSequence(seed, spawn_key=(trial_index,))
    return [np.random.default_rng(s) for s in ss.spawn(5)]


def fixed_graph_for(cfg: ExperimentConfig) -> SensingGraph:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(2 ** 32 - 1,))
    return build_graph(cfg, np.random.default_rng(ss))


def resolve_plan(cfg: ExperimentConfig, graph: Optional[SensingGraph] = None) -> _Plan:
    mode, val = cfg.detector_mode
    if graph is None and cfg.fixed_graph:
        graph = fixed_graph_for(cfg)
    if mode == "threshold":
        return _Plan(val, graph)
    if mode == "calibrated":
        try:
            if cfg.graph == "regular":
                c = calibrate_threshold(cfg.d_M, cfg.d_V, cfg.params, val)
            else:
                c = calibrate_threshold_irregular(cfg.distribution, cfg.params, val)
        except UnreachableTarget:
            # no admissible threshold: nothing is flagged
            return _Plan(0.0, graph, unreachable=True)
        return _Plan(c, graph)
    if mode == "lrt" and cfg.graph == "regular":
        return _Plan(lrt_to_threshold(val, cfg.d_M, cfg.params), graph)
    return _Plan(None, graph)


def _run_trial(cfg: ExperimentConfig, trial_index: int, plan: _Plan) -> TrialMetrics:
    rngs = _trial_streams(cfg.seed, trial_index)
    g = plan.graph if plan.graph is not None else build_graph(cfg, rngs[_GRAPH])
    occ = sample_occupancy(cfg.L, cfg.alpha, rngs[_OCC])
    s = sample_spectrum(occ, cfg.B, cfg.sigma_s, rngs[_SPEC])
    A = build_sensing_matrix(g, cfg.B, rngs[_OP])
    y = measure(A, s, cfg.sigma_n, rngs[_NOISE])

    mode, val = cfg.detector_mode
    if mode == "noiseless":
        rep = detect_noiseless(y, g, sigma_s=cfg.sigma_s, B=cfg.B)
    elif mode == "lrt":
        rep = detect_lrt(y, g, val, cfg.params)
    else:
        rep = detect_threshold(y, g, plan.c_prime)

    truly_zero = np.bincount(g.edge_m, weights=occ[g.edge_v], minlength=g.M) == 0
    z = rep.zero_mask
    vac = rep.vacant_mask
    return TrialMetrics(
        L=cfg.L, M=cfg.M,
        zero_blocks=int((~occ).sum()),
        detected=int(vac.sum()),
        correct=int((vac & ~occ).sum()),
        wrong=int((vac & occ).sum()),
        mz_c=int((z & truly_zero).sum()),
        mz_w=int((z & ~truly_zero).sum()),
        mnz_c=int((~z & ~truly_zero).sum()),
        mnz_w=int((~z & truly_zero).sum()),
    )


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialMetrics:
    return _run_trial(cfg, trial_index, resolve_plan(cfg))


def _run_chunk(args):
    cfg, plan, indices = args
    return [_run_trial(cfg, i, plan) for i in indices]


def run_trials(cfg: ExperimentConfig, jobs: int = 1, plan: Optional[_Plan] = None) -> list[TrialMetrics]:
    plan = plan or resolve_plan(cfg)
    idx = list(range(cfg.trials))
    if jobs <= 1 or cfg.trials < 2:
        return _run_chunk((cfg, plan, idx))
    chunks = [idx[k::jobs] for k in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        parts = list(ex.map(_run_chunk, [(cfg, plan, c) for c in chunks]))
    out = [None] * cfg.trials
    for c, res in zip(chunks, parts):
        for i, m in zip(c, res):
            out[i] = m
    return out


def mean_ci(values) -> tuple[float, float, int]:
    """Mean of the defined (non-NaN) values and the normal-approximation 95% half-width."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    n = v.size
    if n == 0:
        return math.nan, math.nan, 0
    if n == 1:
        return float(v[0]), math.nan, 1
    return float(v.mean()), float(Z95 * v.std(ddof=1) / math.sqrt(n)), n


@dataclass
class PointResult:
    cfg: ExperimentConfig
    c_prime: Optional[float]
    analytic: Optional[analysis.AnalyticalPrediction]
    mc: dict = field(default_factory=dict)    # name -> (mean, ci)
    undefined_pwzd: int = 0
    unreachable: bool = False

    def mean(self, name):
        return self.mc[name][0]

    def ci(self, name):
        return self.mc[name][1]


def analytic_for(cfg: ExperimentConfig, c_prime: Optional[float]) -> Optional[analysis.AnalyticalPrediction]:
    mode, _ = cfg.detector_mode
    if mode == "lrt" and cfg.graph != "regular":
        return None
    if mode == "noiseless" and cfg.sigma_n > 0:
        # exact-zero test on noisy data flags nothing
        return analysis.predict(cfg.alpha, cfg.distribution, cfg.sigma_s, cfg.sigma_n, 0.0)
    return analysis.predict(cfg.alpha, cfg.distribution, cfg.sigma_s, cfg.sigma_n, c_prime)


def run_point(cfg: ExperimentConfig, jobs: int = 1, graph: Optional[SensingGraph] = None) -> PointResult:
    plan = resolve_plan(cfg, graph)
    trials = run_trials(cfg, jobs, plan)
    mc = {}
    for name in ("p_zd", "p_wzd", "p_d", "p_fa"):
        m, ci, _ = mean_ci([getattr(t, name) for t in trials])
        mc[name] = (m, ci)
    undefined = sum(1 for t in trials if t.detected == 0)
    return PointResult(cfg, plan.c_prime, analytic_for(cfg, plan.c_prime), mc, undefined, plan.unreachable)


def with_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "c_prime":
        return replace(cfg, detector=f"threshold:{value!r}")
    if axis == "lrt_c":
        return replace(cfg, detector=f"lrt:{value!r}")
    if axis == "target_pwzd":
        return replace(cfg, detector=f"calibrated:{value!r}")
    if axis == "snr_db":
        return replace(cfg, sigma_n=snr_to_sigma_n(value, cfg.sigma_s))
    if axis in ("L", "M", "B", "d_M", "trials", "seed"):
        value = int(value)
    if axis not in cfg.__dataclass_fields__:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return replace(cfg, **{axis: value})


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _degree_cols(cfg: ExperimentConfig):
    if cfg.graph == "regular":
        return cfg.d_M, cfg.d_V
    dist = cfg.distribution
    return round(dist.rho_mean, 12), round(dist.lam_mean, 12)


def to_row(axis_name: str, axis_value, res: PointResult) -> dict:
    cfg, a = res.cfg, res.analytic
    d_M, d_V = _degree_cols(cfg)
    row = {
        "axis_name": axis_name,
        "axis_value": _fmt(axis_value),
        "L": _fmt(cfg.L), "M": _fmt(cfg.M), "B": _fmt(cfg.B),
        "alpha": _fmt(cfg.alpha), "d_M": _fmt(d_M), "d_V": _fmt(d_V),
        "sigma_s": _fmt(cfg.sigma_s), "sigma_n": _fmt(cfg.sigma_n),
        "c_prime": _fmt(res.c_prime),
        "p_zd_analytic": _fmt(a.p_zd if a else None),
        "p_zd_mc": _fmt(res.mean("p_zd")), "p_zd_ci": _fmt(res.ci("p_zd")),
        "p_wzd_analytic": _fmt(a.p_wzd if a else None),
        "p_wzd_mc": _fmt(res.mean("p_wzd")), "p_wzd_ci": _fmt(res.ci("p_wzd")),
        "p_d_analytic": _fmt(a.p_d if a else None),
        "p_d_mc": _fmt(res.mean("p_d")),
        "p_fa_analytic": _fmt(a.p_fa if a else None),
        "p_fa_mc": _fmt(res.mean("p_fa")),
        "trials": _fmt(cfg.trials),
        "undefined_pwzd_trials": _fmt(res.undefined_pwzd),
        "seed": _fmt(cfg.seed),
    }
    return row


def run_sweep(cfg: ExperimentConfig, axis: str, values, jobs: int = 1,
              graph: Optional[SensingGraph] = None) -> list[tuple[dict, PointResult]]:
    out = []
    for v in values:
        res = run_point(with_axis(cfg, axis, v), jobs=jobs, graph=graph)
        out.append((to_row(axis, v, res), res))
    return out


def write_csv(rows, fh=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


# --- figure presets -------------------------------------------------------

FIG2_ALPHAS = (0.05, 0.1, 0.2, 0.3)
FIG2_DM = (2, 4, 6, 8, 10, 12)
FIG3_M = (5, 10, 20, 25, 50, 100, 125, 250, 500)
FIG4_CPRIME = tuple(round(0.01 * k, 2) for k in range(1, 31))
FIG5_ALPHAS = tuple(round(0.05 * k, 2) for k in range(1, 13))
FIG5_SNR_DB = (10.0, 15.0, 20.0, 25.0)
FIG5_TARGET = 0.02


def fig3_ensembles(L: int, M: int) -> dict[str, ExperimentConfig]:
    """The three ZMD ensembles compared at (L, M); d_M = 4 uses a two-degree VN mix when 4M/L is fractional."""
    base = ExperimentConfig(L=L, M=M, graph="one_to_one", d_M=None, alpha=0.25)
    out = {}
    if L % M == 0:
        out["dV=1"] = replace(base, graph="regular", d_M=L // M)
    else:
        mean = L / M
        lo = int(math.floor(mean))
        out["dV=1"] = replace(base, graph="irregular", d_M=None, lam={1: 1.0},
                              rho={lo: (lo + 1 - mean), lo + 1: mean - lo})
    if (4 * M) % L == 0:
        out["dM=4"] = replace(base, graph="regular", d_M=4)
    else:
        mean = 4 * M / L
        lo = int(math.floor(mean))
        out["dM=4"] = replace(base, graph="irregular", d_M=None,
                              lam={lo: lo + 1 - mean, lo + 1: mean - lo}, rho={4: 1.0})
    out["1to1"] = base
    return out


def preset_points(name: str) -> list[tuple[str, float, ExperimentConfig]]:
    """(axis_name, axis_value, config) for every point of a figure preset (trials/seed left at defaults)."""
    pts = []
    if name == "fig2":
        for a in FIG2_ALPHAS:
            for d in FIG2_DM:
                pts.append(("d_M", d, ExperimentConfig(L=1000, M=500, d_M=d, alpha=a)))
    elif name == "fig3-zmd":
        for label in ("dV=1", "dM=4", "1to1"):
            for M in FIG3_M:
                pts.append((f"M[{label}]", M, fig3_ensembles(500, M)[label]))
    elif name == "fig4":
        base = ExperimentConfig(L=1000, M=500, d_M=2, alpha=0.25, sigma_n=snr_to_sigma_n(25.0))
        for c in FIG4_CPRIME:
            pts.append(("c_prime", c, with_axis(base, "c_prime", c)))
    elif name == "fig5":
        base = ExperimentConfig(L=1000, M=500, d_M=2)
        for a in FIG5_ALPHAS:
            pts.append(("alpha", a, replace(base, alpha=a)))
        for snr in FIG5_SNR_DB:
            for a in FIG5_ALPHAS:
                pts.append(("alpha", a, replace(base, alpha=a, sigma_n=snr_to_sigma_n(snr),
                                                detector=f"calibrated:{FIG5_TARGET!r}")))
    else:
        raise UnknownPreset(name)
    return pts


PRESETS = ("fig2", "fig3-zmd", "fig4", "fig5")


def reproduce_figure(name: str, trials: Optional[int] = None, seed: int = 0, jobs: int = 1,
                     out=None) -> list[tuple[dict, PointResult]]:
    """Run a figure preset; if ``out`` is a path, write the CSV there."""
    results = []
    for axis_name, value, cfg in preset_points(name):
        cfg = replace(cfg, seed=seed, trials=trials or cfg.trials)
        res = run_point(cfg, jobs=jobs)
        results.append((to_row(axis_name, value, res), res))
    if out is not None:
        with open(out, "w", newline="") as fh:
            write_csv([r for r, _ in results], fh)
    return results


def argmax_by_alpha(rows: list[dict], column: str = "p_zd_mc") -> dict[float, int]:
    """For fig2-style rows: the d_M maximizing ``column`` at each alpha (first maximizer on ties)."""
    best = {}
    for r in rows:
        a, d, v = float(r["alpha"]), int(r["d_M"]), float(r[column])
        if a not in best or v > best[a][1]:
            best[a] = (d, v)
    return {a: d for a, (d, _) in sorted(best.items())}
