"""Principal sections of the Gram matrix W = int P(x)^T P(x) dmu(x).

Entries follow from the moments through the five-term recurrence implied
by X^T W = W X: the first column is the moment vector (p_0 = 1) and every
later column comes from the two before it. Dense, banded and (for the
Chebyshev-T basis) Toeplitz-plus-Hankel representations are provided.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sfft

from . import _kernels
from .errors import DimensionMismatch, InsufficientMoments, InvalidFamily, MomentsNotBandLimited, NonFiniteEntry
from .families import Family, Kind, TridiagonalSection, multiplication_matrix
from .moments import MomentVector

__all__ = [
    "Storage",
    "GramSection",
    "gram_from_moments",
    "gram_banded_from_moments",
    "gram_downward_fill",
    "chebyshev_gram",
    "chebyshev_gram_columns",
    "ChebyshevGramOperator",
    "tph_matvec",
    "drop_tolerance",
    "LAGUERRE_STABLE_SIZE",
]

# beyond this size the Laguerre fill in double precision is not trustworthy
LAGUERRE_STABLE_SIZE = 32


class Storage(enum.Enum):
    DENSE = "dense"
    BANDED = "banded"
    TOEPLITZ_PLUS_HANKEL = "toeplitz-plus-hankel"


@dataclass(frozen=True, eq=False)
class GramSection:
    """An n x n section of a Gram matrix.

    ``data`` is the full symmetric array (dense storage), the lower band
    ``ab[i, j] = W[j+i, j]`` (banded storage) or ``None`` (Toeplitz-plus-
    Hankel, entries derived from ``moments``).
    """

    n: int
    storage: Storage
    family: Family
    moments: MomentVector
    data: np.ndarray | None = field(default=None, repr=False)

    @property
    def bandwidth(self) -> int:
        if self.storage is Storage.BANDED:
            return self.data.shape[0] - 1
        return self.n - 1

    def dense(self) -> np.ndarray:
        if self.storage is Storage.DENSE:
            return self.data
        if self.storage is Storage.BANDED:
            W = np.zeros((self.n, self.n))
            for i in range(self.data.shape[0]):
                idx = np.arange(self.n - i)
                W[idx + i, idx] = self.data[i, : self.n - i]
                W[idx, idx + i] = self.data[i, : self.n - i]
            return W
        return chebyshev_gram(self.moments, self.n)

    def column(self, j: int) -> np.ndarray:
        if self.storage is Storage.DENSE:
            return np.array(self.data[:, j])
        if self.storage is Storage.TOEPLITZ_PLUS_HANKEL:
            return chebyshev_gram_columns(self.moments, self.n, [j])[:, 0]
        out = np.zeros(self.n)
        b = self.bandwidth
        lo, hi = max(0, j - b), min(self.n, j + b + 1)
        for m in range(lo, hi):
            out[m] = self.data[m - j, j] if m >= j else self.data[j - m, m]
        return out

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.storage is Storage.DENSE:
            return self.data @ v
        if self.storage is Storage.TOEPLITZ_PLUS_HANKEL:
            return ChebyshevGramOperator(self.moments).matvec(v, (0, self.n), (0, self.n))
        return self.dense() @ v


def drop_tolerance(mu: np.ndarray) -> float:
    """Moments below this magnitude count as zero: 1e-15 * max |mu|."""
    return 1e-15 * float(np.max(np.abs(mu))) if len(mu) else 0.0


def _values(moments) -> np.ndarray:
    return np.asarray(moments.values if isinstance(moments, MomentVector) else moments, dtype=float)


def _section(family: Family, X: TridiagonalSection | None, size: int) -> TridiagonalSection:
    if X is None:
        return multiplication_matrix(family, max(size, 2))
    if X.n < size:
        raise DimensionMismatch(f"multiplication section of size {X.n} given, {size} needed")
    return X


def _warn_unbounded(family: Family, n: int):
    if family.kind is Kind.LAGUERRE and n > LAGUERRE_STABLE_SIZE:
        warnings.warn(
            f"Gram recurrence with an unbounded multiplication matrix is unstable in double precision "
            f"(n = {n} > {LAGUERRE_STABLE_SIZE})",
            RuntimeWarning,
            stacklevel=3,
        )


def gram_from_moments(moments: MomentVector, n: int, X: TridiagonalSection | None = None) -> GramSection:
    """Dense n x n Gram section from the first 2n - 1 moments, O(n^2).

    Only the lower triangle is computed by the recurrence; the upper one is
    its mirror, so the result is exactly symmetric. ``X`` defaults to the
    (2n-1)-section of the family's multiplication matrix.

    Raises
    ------
    InsufficientMoments
        Fewer than 2n - 1 moments.
    NonFiniteEntry
        The recurrence overflowed (unbounded multiplication matrices).
    """
    mu = _values(moments)
    if n < 1:
        raise ValueError("n must be positive")
    if mu.size < 2 * n - 1:
        raise InsufficientMoments(f"a {n} x {n} section needs {2 * n - 1} moments, got {mu.size}")
    _warn_unbounded(moments.family, n)
    W = np.zeros((n, n), order="F")
    if n == 1:
        W[0, 0] = mu[0]
    else:
        Xs = _section(moments.family, X, 2 * n - 1)
        bad = _kernels.gram_fill_dense(mu, Xs.dl, Xs.d, Xs.du, W)
        if bad >= 0:
            m = int(np.flatnonzero(~np.isfinite(W[:, bad]))[0])
            raise NonFiniteEntry(m, bad)
        _mirror_lower(W)
    return GramSection(n, Storage.DENSE, moments.family, moments, W)


def _mirror_lower(W: np.ndarray, block: int = 512):
    """Copy the strict lower triangle onto the upper one, blockwise."""
    n = W.shape[0]
    for s in range(0, n, block):
        e = min(n, s + block)
        W[s:e, e:] = W[e:, s:e].T
        blk = W[s:e, s:e]
        iu = np.triu_indices(e - s, 1)
        blk[iu] = blk.T[iu]


def gram_banded_from_moments(
    moments: MomentVector,
    n: int,
    b: int | None = None,
    X: TridiagonalSection | None = None,
    drop_tol: float | None = None,
) -> GramSection:
    """Banded Gram section for moments vanishing past index b, O(bn).

    ``b`` defaults to the last index with |mu_k| > drop_tol. The band is
    stored as ``ab[i, j] = W[j+i, j]``, 0 <= i <= b.

    Raises
    ------
    MomentsNotBandLimited
        A supplied moment past index b exceeds ``drop_tol`` in magnitude.
    """
    mu = _values(moments)
    tol = drop_tolerance(mu) if drop_tol is None else drop_tol
    significant = np.flatnonzero(np.abs(mu) > tol)
    last = int(significant[-1]) if significant.size else 0
    if b is None:
        b = last
    if last > b:
        raise MomentsNotBandLimited(f"moment {last} exceeds the drop tolerance {tol:.3g} but b = {b}")
    b = min(b, n - 1)
    _warn_unbounded(moments.family, n)
    ab = np.zeros((b + 1, n))
    Xs = _section(moments.family, X, n + b + 2)
    head = np.where(np.abs(mu[: b + 1]) > tol, mu[: b + 1], 0.0)
    bad = _kernels.gram_fill_banded(head, Xs.dl, Xs.d, Xs.du, ab)
    if bad >= 0:
        i = int(np.flatnonzero(~np.isfinite(ab[:, bad]))[0])
        raise NonFiniteEntry(bad + i, bad)
    for i in range(1, b + 1):
        ab[i, n - i :] = 0.0
    return GramSection(n, Storage.BANDED, moments.family, moments, ab)


def gram_downward_fill(last_columns: np.ndarray, X: TridiagonalSection, moments: MomentVector | None = None) -> np.ndarray:
    """Dense section from its two final columns, filling leftward.

    ``last_columns`` is n x 2 holding W[:, n-2] and W[:, n-1]. Column j-1
    comes from the recurrence about column j on rows 0..n-2 and from
    symmetry on row n-1. No producer for accurate final columns is
    supplied; this is the stable direction for unbounded X when such
    columns are available.
    """
    C = np.asarray(last_columns, dtype=float)
    n = C.shape[0]
    if C.shape != (n, 2) or n < 2:
        raise DimensionMismatch("last_columns must be n x 2 with n >= 2")
    if X.n < n:
        raise DimensionMismatch(f"multiplication section of size {X.n} given, {n} needed")
    dl, d, du = X.dl, X.d, X.du
    W = np.zeros((n, n))
    W[:, n - 2 :] = C
    for j in range(n - 2, 0, -1):
        col = W[:, j]
        xt = d[:n] * col
        xt[:-1] += dl[: n - 1] * col[1:]
        xt[1:] += du[: n - 1] * col[:-1]
        new = (xt[: n - 1] - col[: n - 1] * d[j] - W[: n - 1, j + 1] * dl[j]) / du[j - 1]
        W[: n - 1, j - 1] = new
        W[n - 1, j - 1] = W[j - 1, n - 1]
    return W


# -- Chebyshev-T: Toeplitz-plus-Hankel --------------------------------------------


def _require_chebyshev(moments: MomentVector):
    if moments.family.kind is not Kind.CHEBYSHEV_T:
        raise InvalidFamily("the Toeplitz-plus-Hankel form holds in the Chebyshev-T basis only")


def chebyshev_gram(moments: MomentVector, n: int) -> np.ndarray:
    """Dense W[m, k] = (mu_{m+k} + mu_{|m-k|}) / 2."""
    _require_chebyshev(moments)
    mu = _values(moments)
    if mu.size < 2 * n - 1:
        raise InsufficientMoments(f"a {n} x {n} section needs {2 * n - 1} moments, got {mu.size}")
    # strided views keep the peak memory at one n x n array
    hankel = sliding_window_view(mu[: 2 * n - 1], n)
    toeplitz = sliding_window_view(np.concatenate([mu[n - 1 : 0 : -1], mu[:n]]), n)[::-1]
    W = np.add(hankel, toeplitz)
    W *= 0.5
    return W


def chebyshev_gram_columns(moments: MomentVector, n: int, cols) -> np.ndarray:
    """Selected columns of the n x n Chebyshev-T Gram section, n x len(cols)."""
    _require_chebyshev(moments)
    mu = _values(moments)
    cols = np.atleast_1d(np.asarray(cols, dtype=int))
    if mu.size < n + cols.max():
        raise InsufficientMoments(f"columns up to {cols.max()} need {n + cols.max()} moments")
    i = np.arange(n)[:, None]
    return (mu[i + cols[None, :]] + mu[np.abs(i - cols[None, :])]) / 2


class ChebyshevGramOperator:
    """Fast products with contiguous blocks of the Chebyshev-T Gram matrix.

    The Toeplitz part (symbol mu_{|m-k|}/2) and the Hankel part (symbol
    mu_{m+k}/2) of a p x q block are applied as linear convolutions by FFT
    in O((p+q) log(p+q)). Transforms of the symbols are cached per block.
    """

    def __init__(self, moments: MomentVector):
        _require_chebyshev(moments)
        self.moments = moments
        self._mu = _values(moments)
        self._plans: dict[tuple, tuple[int, np.ndarray, np.ndarray]] = {}

    def _plan(self, rows: tuple[int, int], cols: tuple[int, int]):
        key = (rows, cols)
        plan = self._plans.get(key)
        if plan is None:
            (r0, r1), (c0, c1) = rows, cols
            p, q = r1 - r0, c1 - c0
            if r1 + c1 - 1 > self._mu.size:
                raise InsufficientMoments(f"block needs moments up to {r1 + c1 - 2}, have {self._mu.size}")
            nfft = sfft.next_fast_len(p + 2 * q - 2, real=True)
            k = np.arange(r0 - c1 + 1, r1 - c0)
            toe = self._mu[np.abs(k)] / 2
            han = self._mu[r0 + c0 : r1 + c1 - 1] / 2
            plan = (nfft, sfft.rfft(toe, nfft), sfft.rfft(han, nfft))
            self._plans[key] = plan
        return plan

    def matvec(self, v, rows: tuple[int, int], cols: tuple[int, int]) -> np.ndarray:
        """W[r0:r1, c0:c1] @ v for a vector or a q x k matrix v."""
        rows = (int(rows[0]), int(rows[1]))
        cols = (int(cols[0]), int(cols[1]))
        p, q = rows[1] - rows[0], cols[1] - cols[0]
        if p <= 0 or q <= 0 or min(rows[0], cols[0]) < 0:
            raise DimensionMismatch(f"empty or negative block {rows} x {cols}")
        v = np.asarray(v, dtype=float)
        if v.shape[0] != q:
            raise DimensionMismatch(f"block has {q} columns, vector has {v.shape[0]} rows")
        nfft, ft, fh = self._plan(rows, cols)
        shape = (-1,) + (1,) * (v.ndim - 1)
        out = sfft.irfft(ft.reshape(shape) * sfft.rfft(v, nfft, axis=0), nfft, axis=0)[q - 1 : q - 1 + p]
        out += sfft.irfft(fh.reshape(shape) * sfft.rfft(v[::-1], nfft, axis=0), nfft, axis=0)[q - 1 : q - 1 + p]
        return out

    def block(self, rows: tuple[int, int], cols: tuple[int, int]) -> np.ndarray:
        """Dense copy of a block (for leaves and tests)."""
        (r0, r1), (c0, c1) = rows, cols
        i = np.arange(r0, r1)[:, None]
        j = np.arange(c0, c1)[None, :]
        return (self._mu[i + j] + self._mu[np.abs(i - j)]) / 2


def tph_matvec(moments: MomentVector, row_range: tuple[int, int], col_range: tuple[int, int], v) -> np.ndarray:
    """One-off fast product of a Chebyshev-T Gram block with v."""
    return ChebyshevGramOperator(moments).matvec(v, row_range, col_range)
