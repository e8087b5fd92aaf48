"""Bipartite sensing graphs between sub-channels and measurements.

Variable nodes (VNs) are the ``L`` sub-channels and measurement nodes (MNs)
are the ``M`` AIC branches.  An edge ``(v, m)`` means block ``v`` of row ``m``
of the sensing matrix is non-zero.

Random graphs use the configuration model: node degrees are fixed first,
degree stubs are matched uniformly at random, and any parallel edges are
removed by degree-preserving stub swaps.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InfeasibleGraph,
    NonIntegralDegree,
    UnrealizableDistribution,
)

RETRY_BUDGET = 1000


@dataclass(frozen=True, eq=False)
class SensingGraph:
    """Immutable bipartite graph stored as an edge list sorted by (m, v)."""

    L: int
    M: int
    edge_v: np.ndarray
    edge_m: np.ndarray
    _m_ptr: np.ndarray = field(init=False, repr=False)
    _v_order: np.ndarray = field(init=False, repr=False)
    _v_ptr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ev = np.asarray(self.edge_v, dtype=np.int64)
        em = np.asarray(self.edge_m, dtype=np.int64)
        if ev.shape != em.shape or ev.ndim != 1:
            raise ValueError("edge arrays must be 1-d and of equal length")
        if self.L < 1 or self.M < 1:
            raise ValueError("L and M must be positive")
        if ev.size and (ev.min() < 0 or ev.max() >= self.L):
            raise ValueError("variable index out of range")
        if em.size and (em.min() < 0 or em.max() >= self.M):
            raise ValueError("measurement index out of range")
        order = np.lexsort((ev, em))
        ev, em = ev[order], em[order]
        keys = em * self.L + ev
        if keys.size > 1 and np.any(keys[1:] == keys[:-1]):
            raise ValueError("parallel edges are not allowed")
        ev.setflags(write=False)
        em.setflags(write=False)
        m_ptr = np.zeros(self.M + 1, dtype=np.int64)
        np.cumsum(np.bincount(em, minlength=self.M), out=m_ptr[1:])
        v_order = np.argsort(ev, kind="stable")
        v_ptr = np.zeros(self.L + 1, dtype=np.int64)
        np.cumsum(np.bincount(ev, minlength=self.L), out=v_ptr[1:])
        object.__setattr__(self, "edge_v", ev)
        object.__setattr__(self, "edge_m", em)
        object.__setattr__(self, "_m_ptr", m_ptr)
        object.__setattr__(self, "_v_order", v_order)
        object.__setattr__(self, "_v_ptr", v_ptr)

    @property
    def num_edges(self) -> int:
        return int(self.edge_v.size)

    @property
    def var_degrees(self) -> np.ndarray:
        return np.diff(self._v_ptr)

    @property
    def meas_degrees(self) -> np.ndarray:
        return np.diff(self._m_ptr)

    def neighbors_of_measurement(self, m: int) -> np.ndarray:
        """V(m), sorted."""
        return self.edge_v[self._m_ptr[m]:self._m_ptr[m + 1]]

    def neighbors_of_variable(self, v: int) -> np.ndarray:
        """M(v), sorted."""
        idx = self._v_order[self._v_ptr[v]:self._v_ptr[v + 1]]
        return self.edge_m[idx]

    def adjacency(self) -> list[list[int]]:
        return [self.neighbors_of_measurement(m).tolist() for m in range(self.M)]

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.edge_v.tolist(), self.edge_m.tolist()))

    def __eq__(self, other):
        if not isinstance(other, SensingGraph):
            return NotImplemented
        return (self.L == other.L and self.M == other.M
                and np.array_equal(self.edge_v, other.edge_v)
                and np.array_equal(self.edge_m, other.edge_m))

    def check(self):
        """Assert the structural invariants; cheap enough to call after every build."""
        assert self.var_degrees.sum() == self.meas_degrees.sum() == self.num_edges
        assert len(self.edge_set()) == self.num_edges
        for m in range(self.M):
            for v in self.neighbors_of_measurement(m):
                assert m in self.neighbors_of_variable(int(v))

    # plain-text adjacency format: header "L M", then "m: v1 v2 ..." per MN
    def to_text(self) -> str:
        lines = [f"{self.L} {self.M}"]
        for m in range(self.M):
            vs = " ".join(str(v) for v in self.neighbors_of_measurement(m))
            lines.append(f"{m}: {vs}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SensingGraph":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty graph file")
        L, M = (int(t) for t in lines[0].split())
        ev, em = [], []
        for ln in lines[1:]:
            head, _, rest = ln.partition(":")
            m = int(head)
            for tok in rest.split():
                ev.append(int(tok))
                em.append(m)
        return cls(L, M, np.array(ev, dtype=np.int64), np.array(em, dtype=np.int64))

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "SensingGraph":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class DegreeDistribution:
    """Node-perspective degree fractions: ``lam[i]`` of VNs and ``rho[i]`` of MNs have degree i."""

    lam: dict
    rho: dict

    def __post_init__(self):
        for name, dist in (("lam", self.lam), ("rho", self.rho)):
            if not dist:
                raise ValueError(f"{name} is empty")
            for deg, frac in dist.items():
                if int(deg) != deg or deg < 0:
                    raise ValueError(f"{name}: degree {deg!r} is not a non-negative integer")
                if frac < 0:
                    raise ValueError(f"{name}: negative fraction for degree {deg}")
            if abs(sum(dist.values()) - 1.0) > 1e-9:
                raise ValueError(f"{name} fractions sum to {sum(dist.values())}, not 1")
        object.__setattr__(self, "lam", {int(k): float(v) for k, v in sorted(self.lam.items())})
        object.__setattr__(self, "rho", {int(k): float(v) for k, v in sorted(self.rho.items())})

    @property
    def lam_mean(self) -> float:
        return sum(i * f for i, f in self.lam.items())

    @property
    def rho_mean(self) -> float:
        return sum(i * f for i, f in self.rho.items())

    @classmethod
    def regular(cls, d_V: int, d_M: int) -> "DegreeDistribution":
        return cls({d_V: 1.0}, {d_M: 1.0})

    def is_consistent(self, L: int, M: int, rtol: float = 1e-6) -> bool:
        """Edge-count balance: mean VN degree times L equals mean MN degree times M."""
        a, b = self.lam_mean * L, self.rho_mean * M
        return math.isclose(a, b, rel_tol=rtol, abs_tol=1e-12)

    def node_counts(self, L: int, M: int) -> tuple[dict, dict]:
        """Integer node counts per degree after largest-remainder rounding."""
        return largest_remainder(self.lam, L), largest_remainder(self.rho, M)

    def allclose(self, other: "DegreeDistribution", atol: float) -> bool:
        def close(a, b):
            keys = set(a) | set(b)
            return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= atol for k in keys)
        return close(self.lam, other.lam) and close(self.rho, other.rho)


def largest_remainder(fracs: dict, n: int) -> dict:
    """Apportion ``n`` items by fraction; leftovers go to the largest remainders (ties: lower degree)."""
    degs = sorted(fracs)
    raw = [fracs[d] * n for d in degs]
    counts = [math.floor(r + 1e-9) for r in raw]
    short = n - sum(counts)
    by_rem = sorted(range(len(degs)), key=lambda k: (-(raw[k] - counts[k]), degs[k]))
    for k in by_rem[:max(short, 0)]:
        counts[k] += 1
    return {d: c for d, c in zip(degs, counts) if c > 0}


def _gale_ryser(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether degree sequences ``a`` (VNs) and ``b`` (MNs) admit a simple bipartite graph."""
    if a.sum() != b.sum():
        return False
    if a.size == 0 or a.max(initial=0) == 0:
        return True
    a = np.sort(a)[::-1]
    ks = np.arange(1, a.size + 1)
    lhs = np.cumsum(a)
    rhs = np.minimum(b[None, :], ks[:, None]).sum(axis=1)
    return bool(np.all(lhs <= rhs))


def _repair_parallel(ev, em, L, rng, max_swaps):
    """Remove parallel edges by swapping VN endpoints between edge pairs. Edits ``ev`` in place."""
    keys = em * L + ev
    uniq, counts = np.unique(keys, return_counts=True)
    if np.all(counts == 1):
        return True
    count = Counter(keys.tolist())
    seen = set()
    excess = []
    for i, k in enumerate(keys.tolist()):
        if k in seen:
            excess.append(i)
        seen.add(k)
    E = ev.size
    swaps = 0
    while excess:
        if swaps > max_swaps:
            return False
        swaps += 1
        e = excess[-1]
        ke = int(em[e]) * L + int(ev[e])
        if count[ke] <= 1:
            excess.pop()
            continue
        f = int(rng.integers(E))
        new_e = int(em[e]) * L + int(ev[f])
        new_f = int(em[f]) * L + int(ev[e])
        if new_e == new_f or count.get(new_e, 0) or count.get(new_f, 0):
            continue
        kf = int(em[f]) * L + int(ev[f])
        count[ke] -= 1
        count[kf] -= 1
        count[new_e] = 1
        count[new_f] = 1
        ev[e], ev[f] = ev[f], ev[e]
        excess.pop()
    return True


def _configuration_model(v_deg, m_deg, L, M, rng, retries=RETRY_BUDGET):
    v_deg = np.asarray(v_deg, dtype=np.int64)
    m_deg = np.asarray(m_deg, dtype=np.int64)
    if v_deg.sum() != m_deg.sum():
        raise UnrealizableDistribution("VN and MN stub totals differ")
    if not _gale_ryser(v_deg, m_deg):
        raise InfeasibleGraph("degree sequences admit no graph without parallel edges")
    v_stubs = np.repeat(np.arange(L, dtype=np.int64), v_deg)
    m_stubs = np.repeat(np.arange(M, dtype=np.int64), m_deg)
    E = v_stubs.size
    for _ in range(retries):
        ev = rng.permutation(v_stubs)
        if _repair_parallel(ev, m_stubs, L, rng, max_swaps=20 * E + 100):
            return SensingGraph(L, M, ev, m_stubs)
    raise InfeasibleGraph(f"no simple graph found after {retries} attempts")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def build_regular_graph(L: int, M: int, d_M: int, seed=None) -> SensingGraph:
    """(d_V, d_M)-biregular graph with d_V = M*d_M/L."""
    if L < 1 or M < 1 or d_M < 1:
        raise ValueError("L, M and d_M must be positive")
    if (M * d_M) % L:
        raise NonIntegralDegree(f"M*d_M = {M * d_M} is not divisible by L = {L}")
    d_V = M * d_M // L
    if d_M > L or d_V > M:
        raise InfeasibleGraph(f"degrees (d_V={d_V}, d_M={d_M}) exceed node counts (L={L}, M={M})")
    return _configuration_model(np.full(L, d_V), np.full(M, d_M), L, M, _rng(seed))


def build_irregular_graph(L: int, M: int, dist: DegreeDistribution, seed=None) -> SensingGraph:
    """Graph whose node-degree histograms equal the largest-remainder rounding of ``dist``."""
    rng = _rng(seed)
    v_counts, m_counts = dist.node_counts(L, M)
    v_deg = np.repeat(list(v_counts), list(v_counts.values()))
    m_deg = np.repeat(list(m_counts), list(m_counts.values()))
    if v_deg.sum() != m_deg.sum():
        raise UnrealizableDistribution(
            f"rounded stub totals differ: {int(v_deg.sum())} VN stubs vs {int(m_deg.sum())} MN stubs")
    if v_deg.max(initial=0) > M or m_deg.max(initial=0) > L:
        raise InfeasibleGraph("a node degree exceeds the opposite side's size")
    return _configuration_model(rng.permutation(v_deg), rng.permutation(m_deg), L, M, rng)


def build_one_to_one_graph(L: int, M: int, seed=None) -> SensingGraph:
    """Matching of M measurements onto a uniformly random subset of M sub-channels."""
    if M > L:
        raise InfeasibleGraph(f"one-to-one graph needs M <= L (got M={M}, L={L})")
    ev = _rng(seed).choice(L, size=M, replace=False)
    return SensingGraph(L, M, ev, np.arange(M))


def degree_distribution_of(g: SensingGraph) -> DegreeDistribution:
    vd = Counter(g.var_degrees.tolist())
    md = Counter(g.meas_degrees.tolist())
    return DegreeDistribution({d: c / g.L for d, c in vd.items()},
                              {d: c / g.M for d, c in md.items()})
