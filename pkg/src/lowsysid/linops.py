"""Hankel operator algebra, impulse-response assembly and the scalar mode kernels.

Block indices are 1-based in the docstrings (``K_1 .. K_{2L+1}``) and 0-based
in arrays: ``blocks[t - 1]`` holds ``K_t``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

_HANKEL_TOL = 1e-12


@dataclass(frozen=True)
class MarkovSequence:
    """The ``2L+1`` Markov blocks ``K_t``, stored as an array ``(2L+1, n_y, n_u)``."""

    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.array(self.blocks, dtype=float)
        if blocks.ndim != 3:
            raise ValueError(f"blocks must be 3-D (2L+1, n_y, n_u), got shape {blocks.shape}")
        if blocks.shape[0] % 2 != 1:
            raise ValueError(f"need an odd number (2L+1) of blocks, got {blocks.shape[0]}")
        if not np.all(np.isfinite(blocks)):
            raise ValueError("Markov blocks must be finite")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def l(self) -> int:
        return (self.blocks.shape[0] - 1) // 2

    @property
    def n_y(self) -> int:
        return self.blocks.shape[1]

    @property
    def n_u(self) -> int:
        return self.blocks.shape[2]

    def flat(self) -> np.ndarray:
        """``[K_1 K_2 ... K_{2L+1}]`` as an ``n_y x (2L+1) n_u`` matrix."""
        return flat_blocks(self.blocks)

    @classmethod
    def from_flat(cls, flat: np.ndarray, n_u: int) -> "MarkovSequence":
        return cls(unflat_blocks(flat, n_u))

    @classmethod
    def zeros(cls, l: int, n_y: int, n_u: int) -> "MarkovSequence":
        return cls(np.zeros((2 * l + 1, n_y, n_u)))


@dataclass(frozen=True)
class HankelMatrix:
    data: np.ndarray
    l: int
    n_y: int
    n_u: int


@dataclass(frozen=True)
class ImpulseResponse:
    data: np.ndarray
    l: int
    n_y: int
    n_u: int


def flat_blocks(blocks: np.ndarray) -> np.ndarray:
    nb, ny, nu = blocks.shape
    return blocks.transpose(1, 0, 2).reshape(ny, nb * nu)


def unflat_blocks(flat: np.ndarray, n_u: int) -> np.ndarray:
    ny, width = flat.shape
    if width % n_u:
        raise ValueError(f"width {width} not divisible by n_u={n_u}")
    return flat.reshape(ny, width // n_u, n_u).transpose(1, 0, 2)


def gamma(a: float, l: int) -> float:
    """``sum_{t=0}^{L} a^{2t}`` by direct summation (no division, safe at ``|a| = 1``)."""
    if l < 0:
        raise ValueError("horizon must be non-negative")
    a2 = float(a) * float(a)
    total, term = 0.0, 1.0
    for _ in range(l + 1):
        total += term
        term *= a2
    return total


def gamma_grad(a: float, l: int) -> float:
    """Derivative of :func:`gamma`, ``sum_{t=1}^{L} 2t a^{2t-1}``."""
    a = float(a)
    total, term = 0.0, a  # a^{2t-1} at t = 1
    for t in range(1, l + 1):
        total += 2.0 * t * term
        term *= a * a
    return total


def shift_power_matrix(a: float, l: int) -> np.ndarray:
    """``P(a)`` of size ``2(L+1)``: entry ``(i, j) = a^{i-j-1}`` below the diagonal."""
    n = 2 * (l + 1)
    out = np.zeros((n, n))
    a = float(a)
    power = 1.0
    for lag in range(1, n):
        idx = np.arange(lag, n)
        out[idx, idx - lag] = power
        power *= a
    return out


def hankel_blocks(blocks: np.ndarray) -> np.ndarray:
    """Array-level Hankel map: ``(2L+1, n_y, n_u)`` -> ``((L+1) n_y, (L+1) n_u)``."""
    nb, ny, nu = blocks.shape
    p = (nb + 1) // 2
    idx = np.arange(p)[:, None] + np.arange(p)[None, :]
    return blocks[idx].transpose(0, 2, 1, 3).reshape(p * ny, p * nu)


def _split(m: np.ndarray, n_y: int, n_u: int) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    rows, cols = m.shape
    if rows % n_y or cols % n_u:
        raise ValueError(f"matrix {m.shape} does not split into {n_y}x{n_u} blocks")
    p, q = rows // n_y, cols // n_u
    if p != q:
        raise ValueError(f"expected a square (L+1)x(L+1) block grid, got {p}x{q}")
    return m.reshape(p, n_y, q, n_u)


def antidiagonal_counts(l: int) -> np.ndarray:
    """Number of blocks on each anti-diagonal of an ``(L+1) x (L+1)`` grid."""
    t = np.arange(2 * l + 1)
    return np.minimum(t + 1, 2 * l + 1 - t).astype(float)


def adjoint_sum_blocks(m: np.ndarray, n_y: int, n_u: int) -> np.ndarray:
    return kernels.antidiag_sum(np.ascontiguousarray(_split(m, n_y, n_u)))


def extract_blocks(m: np.ndarray, n_y: int, n_u: int) -> np.ndarray:
    """Anti-diagonal averages of a block matrix, ``(2L+1, n_y, n_u)``.

    Each average is taken around an anchor block (first block row, then last
    block column) as ``anchor + mean(block - anchor)``, so a block-Hankel
    input is returned bit for bit.
    """
    grid = _split(m, n_y, n_u).transpose(0, 2, 1, 3)
    p = grid.shape[0]
    anchor = np.concatenate([grid[0, :], grid[1:, -1]])
    dev = np.asarray(m, dtype=float) - hankel_blocks(anchor)
    sums = adjoint_sum_blocks(dev, n_y, n_u)
    return anchor + sums / antidiagonal_counts(p - 1)[:, None, None]


def extract_adjoint_blocks(blocks: np.ndarray) -> np.ndarray:
    """Frobenius adjoint of :func:`extract_blocks`: ``hankel(K_t / m_t)``."""
    l = (blocks.shape[0] - 1) // 2
    return hankel_blocks(blocks / antidiagonal_counts(l)[:, None, None])


def hankel_map(k: MarkovSequence) -> HankelMatrix:
    """Block ``(i, j)`` of the result is ``K_{i+j-1}``."""
    return HankelMatrix(hankel_blocks(k.blocks), k.l, k.n_y, k.n_u)


def hankel_extract(m, n_y: int | None = None, n_u: int | None = None) -> MarkovSequence:
    """Left inverse of :func:`hankel_map` by anti-diagonal averaging.

    On Hankel-structured input this is plain block selection, and
    ``hankel_map(hankel_extract(M))`` is the orthogonal projection of ``M``
    onto Hankel structure.
    """
    if isinstance(m, HankelMatrix):
        n_y, n_u, m = m.n_y, m.n_u, m.data
    if n_y is None or n_u is None:
        raise ValueError("block dimensions required for a raw matrix")
    return MarkovSequence(extract_blocks(m, n_y, n_u))


def hankel_adjoint_sum(m, n_y: int | None = None, n_u: int | None = None) -> MarkovSequence:
    """True Frobenius adjoint of :func:`hankel_map` (anti-diagonal sums)."""
    if isinstance(m, HankelMatrix):
        n_y, n_u, m = m.n_y, m.n_u, m.data
    if n_y is None or n_u is None:
        raise ValueError("block dimensions required for a raw matrix")
    return MarkovSequence(adjoint_sum_blocks(m, n_y, n_u))


def is_hankel(m: np.ndarray, n_y: int, n_u: int, tol: float = _HANKEL_TOL) -> bool:
    proj = hankel_blocks(extract_blocks(m, n_y, n_u))
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    return bool(np.max(np.abs(proj - m), initial=0.0) <= tol * scale)


def toeplitz_blocks(blocks: np.ndarray, d: np.ndarray | None = None) -> np.ndarray:
    """Block lower-triangular Toeplitz ``2(L+1) x 2(L+1)`` grid of ``D, K_1, ..., K_{2L+1}``."""
    nb, ny, nu = blocks.shape
    n = nb + 1
    diag = np.zeros((1, ny, nu)) if d is None else np.asarray(d, dtype=float)[None]
    padded = np.concatenate([diag, blocks, np.zeros((1, ny, nu))])
    lag = np.arange(n)[:, None] - np.arange(n)[None, :]
    lag = np.where(lag < 0, n, lag)  # index n is the zero block
    return padded[lag].transpose(0, 2, 1, 3).reshape(n * ny, n * nu)


def markov_blocks(a: np.ndarray, b: np.ndarray, c: np.ndarray, count: int) -> np.ndarray:
    """``C A^{t-1} B`` for ``t = 1..count`` by repeated multiplication."""
    out = np.empty((count, c.shape[0], b.shape[1]))
    akb = np.array(b, dtype=float)
    for t in range(count):
        out[t] = c @ akb
        akb = a @ akb
    return out


def impulse_response(sys, l: int) -> ImpulseResponse:
    """Impulse-response matrix over ``2(L+1)`` steps: ``0`` above, ``D`` on, ``C A^{i-j-1} B`` below the diagonal."""
    blocks = markov_blocks(sys.a, sys.b, sys.c, 2 * l + 1)
    return ImpulseResponse(toeplitz_blocks(blocks, sys.d), l, sys.n_y, sys.n_u)


def impulse_from_markov(k: MarkovSequence) -> ImpulseResponse:
    """Strictly lower block-Toeplitz impulse response (``D = 0``) built from ``K``."""
    return ImpulseResponse(toeplitz_blocks(k.blocks), k.l, k.n_y, k.n_u)
