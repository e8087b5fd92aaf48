"""Block-sparse wideband spectrum realizations.

The positive-frequency half of the spectrum is split into ``L`` sub-channels
of ``B`` bins each; every sub-channel is independently occupied with
probability ``alpha``.

Full length-``N`` spectra (``N = 2*L*B``) use a half-bin-shifted unitary DFT:
bin ``k`` sits at normalized frequency ``(k + 1/2)/N``, so bins ``k`` and
``N-1-k`` are mirror images and no bin is self-conjugate.  Bins ``0..N/2-1``
are the positive half.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidProbability

# (rng, shape, sigma_s) -> complex array
CoefficientSampler = Callable[[np.random.Generator, tuple, float], np.ndarray]


def complex_gaussian(rng: np.random.Generator, shape, sigma_s: float) -> np.ndarray:
    """Real and imaginary parts i.i.d. N(0, sigma_s^2)."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return sigma_s * (z[..., 0] + 1j * z[..., 1])


@dataclass(frozen=True, eq=False)
class SpectrumRealization:
    occupancy: np.ndarray   # (L,) bool
    blocks: np.ndarray      # (L, B) complex; vacant rows are exactly zero
    sigma_s: float

    @property
    def L(self) -> int:
        return int(self.occupancy.size)

    @property
    def B(self) -> int:
        return int(self.blocks.shape[1])

    @property
    def N(self) -> int:
        return 2 * self.L * self.B

    def positive_half(self) -> np.ndarray:
        return self.blocks.reshape(-1)

    def __add__(self, other: "SpectrumRealization") -> "SpectrumRealization":
        return SpectrumRealization(self.occupancy | other.occupancy,
                                   self.blocks + other.blocks, self.sigma_s)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_occupancy(L: int, alpha: float, seed=None) -> np.ndarray:
    if not 0.0 <= alpha <= 1.0:
        raise InvalidProbability(f"alpha={alpha} outside [0, 1]")
    return _rng(seed).random(L) < alpha


def occupancy_string(occ) -> str:
    return "".join("1" if o else "0" for o in np.asarray(occ, dtype=bool))


def sample_spectrum(occ, B: int, sigma_s: float = 1.0, seed=None,
                    sampler: Optional[CoefficientSampler] = None) -> SpectrumRealization:
    """Fill occupied blocks with continuous random coefficients; vacant blocks stay zero.

    Only the occupied blocks are drawn, so the stream consumed depends on the
    occupancy pattern.
    """
    if B < 1:
        raise ValueError("block length B must be >= 1")
    if sigma_s <= 0:
        raise ValueError("sigma_s must be positive")
    occ = np.asarray(occ, dtype=bool)
    sampler = sampler or complex_gaussian
    blocks = np.zeros((occ.size, B), dtype=complex)
    k = int(occ.sum())
    if k:
        blocks[occ] = sampler(_rng(seed), (k, B), sigma_s)
    return SpectrumRealization(occ.copy(), blocks, float(sigma_s))


def _twiddle(N: int) -> np.ndarray:
    return np.exp(-1j * np.pi * np.arange(N) / N)


def forward_transform(r: np.ndarray) -> np.ndarray:
    """Unitary half-bin-shifted DFT along the last axis (time -> frequency)."""
    r = np.asarray(r)
    N = r.shape[-1]
    return np.fft.fft(r * _twiddle(N), axis=-1) / np.sqrt(N)


def inverse_transform(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`forward_transform`."""
    x = np.asarray(x)
    N = x.shape[-1]
    return np.fft.ifft(x, axis=-1) * np.sqrt(N) * np.conj(_twiddle(N))


def mirror(positive: np.ndarray) -> np.ndarray:
    """Extend positive-half bins to a conjugate-symmetric full spectrum (last axis)."""
    return np.concatenate([positive, np.conj(positive[..., ::-1])], axis=-1)


def assemble_full_spectrum(s: SpectrumRealization) -> np.ndarray:
    return mirror(s.positive_half())


def time_signal(s: SpectrumRealization) -> np.ndarray:
    """Real time-domain signal r with forward_transform(r) == assemble_full_spectrum(s)."""
    r = inverse_transform(assemble_full_spectrum(s))
    return r.real
