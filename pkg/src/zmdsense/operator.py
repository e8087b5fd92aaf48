"""Block-sparse sensing operator of the AIC and its time-domain realization."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch
from .graphs import SensingGraph
from .spectrum import SpectrumRealization, forward_transform, inverse_transform, mirror


@dataclass(frozen=True, eq=False)
class BlockSensingMatrix:
    """Non-zero blocks of the positive-frequency sensing matrix, one per graph edge.

    ``blocks[e]`` is the length-B row block for edge ``(graph.edge_v[e], graph.edge_m[e])``.
    """

    graph: SensingGraph
    blocks: np.ndarray  # (E, B) complex

    @property
    def B(self) -> int:
        return int(self.blocks.shape[1])

    @property
    def N(self) -> int:
        return 2 * self.graph.L * self.B

    def block(self, m: int, l: int) -> Optional[np.ndarray]:
        g = self.graph
        lo, hi = g._m_ptr[m], g._m_ptr[m + 1]
        k = np.searchsorted(g.edge_v[lo:hi], l)
        if k < hi - lo and g.edge_v[lo + k] == l:
            return self.blocks[lo + k]
        return None

    def positive_rows(self) -> np.ndarray:
        """Dense (M, N/2) complex matrix of positive-frequency rows."""
        g, B = self.graph, self.B
        theta = np.zeros((g.M, g.L, B), dtype=complex)
        theta[g.edge_m, g.edge_v] = self.blocks
        return theta.reshape(g.M, g.L * B)


@dataclass(frozen=True, eq=False)
class MeasurementVector:
    y: np.ndarray
    sigma_n: float = 0.0
    seed: Optional[int] = None

    def __len__(self):
        return int(self.y.size)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def build_sensing_matrix(g: SensingGraph, B: int, seed=None) -> BlockSensingMatrix:
    """Complex Gaussian edge blocks scaled to unit L2 norm."""
    if B < 1:
        raise ValueError("block length B must be >= 1")
    z = _rng(seed).standard_normal((g.num_edges, B, 2))
    blocks = z[..., 0] + 1j * z[..., 1]
    norms = np.linalg.norm(blocks, axis=1, keepdims=True)
    return BlockSensingMatrix(g, blocks / norms)


def noise_free(A: BlockSensingMatrix, s: SpectrumRealization) -> np.ndarray:
    """y_m = 2 Re(sum over neighbours l of <Theta_m^(l), u^(l)>), bilinear inner product."""
    g = A.graph
    if A.B != s.B or g.L != s.L:
        raise DimensionMismatch(f"operator is (L={g.L}, B={A.B}) but spectrum is (L={s.L}, B={s.B})")
    per_edge = 2.0 * np.einsum("eb,eb->e", A.blocks, s.blocks[g.edge_v]).real
    return np.bincount(g.edge_m, weights=per_edge, minlength=g.M)


def measure(A: BlockSensingMatrix, s: SpectrumRealization, sigma_n: float = 0.0,
            seed=None) -> MeasurementVector:
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    y = noise_free(A, s)
    if sigma_n > 0:
        y = y + _rng(seed).normal(0.0, sigma_n, size=y.size)
    return MeasurementVector(y, float(sigma_n), seed if isinstance(seed, (int, np.integer)) else None)


def time_domain_rows_complex(A: BlockSensingMatrix, N: int) -> np.ndarray:
    """Sampling waveforms before discarding the (numerically zero) imaginary part."""
    if N != A.N:
        raise DimensionMismatch(f"N={N} but operator needs N = 2*L*B = {A.N}")
    full = mirror(A.positive_rows())
    # Theta_m = conj(F Phi_m)  =>  Phi_m = F^{-1} conj(Theta_m)
    return inverse_transform(np.conj(full))


def synth_time_domain_rows(A: BlockSensingMatrix, N: int) -> np.ndarray:
    """Real (M, N) measurement matrix Phi whose rows have the operator's block spectrum."""
    return time_domain_rows_complex(A, N).real


def verify_block_support(phi: np.ndarray, g: SensingGraph, tol: float = 1e-10) -> tuple[bool, float]:
    """Check each row's spectrum lives on its graph blocks and their mirrors.

    Leakage of a row is its spectral energy outside the designated bins divided
    by its total energy.  Returns (max leakage < tol, max leakage).
    """
    phi = np.asarray(phi)
    M, N = phi.shape
    if M != g.M or N % (2 * g.L):
        raise DimensionMismatch(f"Phi is {phi.shape}, graph has M={g.M}, L={g.L}")
    B = N // (2 * g.L)
    spec = np.abs(forward_transform(phi)) ** 2
    on = np.zeros((g.M, g.L), dtype=bool)
    on[g.edge_m, g.edge_v] = True
    mask = np.repeat(on, B, axis=1)
    mask = np.concatenate([mask, mask[:, ::-1]], axis=1)
    total = spec.sum(axis=1)
    off = np.where(mask, 0.0, spec).sum(axis=1)
    leak = np.divide(off, total, out=np.zeros_like(off), where=total > 0)
    worst = float(leak.max(initial=0.0))
    return worst < tol, worst


def dump_operator(A: BlockSensingMatrix, phi_path, theta_path):
    """Write Phi (real) and the positive rows of Theta (re,im pairs) as row-major CSV."""
    phi = synth_time_domain_rows(A, A.N)
    with open(phi_path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in phi:
            w.writerow([repr(float(v)) for v in row])
    theta = A.positive_rows()
    with open(theta_path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in theta:
            out = []
            for z in row:
                out += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(out)
