"""Displacement structure X^T W - W X = G J G^T and fast Cholesky factorization.

For a Gram section W and the matching section X of the multiplication
matrix, the displacement has rank two and lives in the last row and
column. Eliminating one row and column at a time on the generators G and
a tridiagonal-plus-first-row X instead of on W gives W = L L^T in O(n^2)
flops, or O(bn) when W has bandwidth b.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import _kernels
from .errors import DimensionMismatch, IrreducibilityViolated, NotPositiveDefinite
from .families import TridiagonalSection
from .gram import GramSection, Storage

__all__ = [
    "J",
    "GeneratorPair",
    "TriangularFactor",
    "FactorStorage",
    "build_generators",
    "generators_from_columns",
    "generators_from_next_column",
    "displacement_residual",
    "fast_cholesky",
    "fast_cholesky_steps",
    "cholesky_dense_reference",
    "pivot_floor",
]

J = np.array([[0.0, 1.0], [-1.0, 0.0]])
J.setflags(write=False)

PIVOT_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class GeneratorPair:
    """Generators G (n x 2) of X^T W - W X = G J G^T with J = [[0, 1], [-1, 0]]."""

    G: np.ndarray

    def __post_init__(self):
        G = np.array(self.G, dtype=float, order="C")
        if G.ndim != 2 or G.shape[1] != 2:
            raise DimensionMismatch(f"generators must be n x 2, got {G.shape}")
        object.__setattr__(self, "G", G)

    @property
    def J(self) -> np.ndarray:
        return J

    @property
    def n(self) -> int:
        return self.G.shape[0]

    def product(self) -> np.ndarray:
        """Dense G J G^T (skew-symmetric)."""
        return self.G @ J @ self.G.T


class FactorStorage(enum.Enum):
    DENSE = "dense"
    BANDED = "banded"


@dataclass(frozen=True, eq=False)
class TriangularFactor:
    """Lower-triangular Cholesky factor L of W = L L^T.

    The connection coefficients are R = L^T, so that P(x) = Q(x) R.
    Dense storage holds L as an n x n array; banded storage holds the lower
    band ``ab[i, j] = L[j+i, j]``.
    """

    n: int
    storage: FactorStorage
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        diag = self.diagonal()
        if not np.all(diag > 0):
            k = int(np.flatnonzero(~(diag > 0))[0])
            raise NotPositiveDefinite(k, where="factor diagonal")

    @property
    def bandwidth(self) -> int:
        return self.data.shape[0] - 1 if self.storage is FactorStorage.BANDED else self.n - 1

    def diagonal(self) -> np.ndarray:
        if self.storage is FactorStorage.BANDED:
            return np.array(self.data[0])
        return np.array(np.diagonal(self.data))

    def superdiagonal(self) -> np.ndarray:
        """R[k, k+1] = L[k+1, k]."""
        if self.storage is FactorStorage.BANDED:
            return np.array(self.data[1, : self.n - 1]) if self.data.shape[0] > 1 else np.zeros(self.n - 1)
        return np.array(np.diagonal(self.data, -1))

    def dense(self) -> np.ndarray:
        """Dense L."""
        if self.storage is FactorStorage.DENSE:
            return self.data
        L = np.zeros((self.n, self.n))
        for i in range(self.data.shape[0]):
            idx = np.arange(self.n - i)
            L[idx + i, idx] = self.data[i, : self.n - i]
        return L

    def upper(self) -> np.ndarray:
        """Dense R = L^T."""
        return self.dense().T

    def _upper_band(self) -> np.ndarray:
        # LAPACK upper band of R = L^T: ab_u[b + i - j, j] = R[i, j]
        b = self.bandwidth
        ab = np.zeros_like(self.data)
        for i in range(b + 1):
            ab[b - i, i:] = self.data[i, : self.n - i]
        return ab

    def _band_mul(self, v: np.ndarray, transpose: bool) -> np.ndarray:
        out = np.zeros_like(v)
        for i in range(self.data.shape[0]):
            diag = self.data[i, : self.n - i]
            shape = (-1,) + (1,) * (v.ndim - 1)
            if transpose:  # (L^T v)[j] += L[j+i, j] v[j+i]
                out[: self.n - i] += diag.reshape(shape) * v[i:]
            else:  # (L v)[j+i] += L[j+i, j] v[j]
                out[i:] += diag.reshape(shape) * v[: self.n - i]
        return out

    def apply_r(self, v) -> np.ndarray:
        """R v = L^T v (coefficients in P -> coefficients in Q)."""
        v = np.asarray(v, dtype=float)
        if self.storage is FactorStorage.BANDED:
            return self._band_mul(v, transpose=True)
        return self.data.T @ v

    def apply_rt(self, v) -> np.ndarray:
        """R^T v = L v."""
        v = np.asarray(v, dtype=float)
        if self.storage is FactorStorage.BANDED:
            return self._band_mul(v, transpose=False)
        return self.data @ v

    def solve_r(self, v) -> np.ndarray:
        """R^{-1} v."""
        v = np.asarray(v, dtype=float)
        if self.storage is FactorStorage.BANDED:
            return linalg.solve_banded((0, self.bandwidth), self._upper_band(), v)
        return linalg.solve_triangular(self.data, v, lower=True, trans="T", check_finite=False)

    def solve_rt(self, v) -> np.ndarray:
        """R^{-T} v = L^{-1} v."""
        v = np.asarray(v, dtype=float)
        if self.storage is FactorStorage.BANDED:
            return linalg.solve_banded((self.bandwidth, 0), self.data, v)
        return linalg.solve_triangular(self.data, v, lower=True, check_finite=False)


# -- generators -------------------------------------------------------------------


def _xt_times(X: TridiagonalSection, v: np.ndarray, n: int) -> np.ndarray:
    """X_n^T v for the n x n section."""
    out = X.d[:n] * v
    out[:-1] += X.dl[: n - 1] * v[1:]
    out[1:] += X.du[: n - 1] * v[:-1]
    return out


def generators_from_columns(col_before_last, col_last, X: TridiagonalSection) -> GeneratorPair:
    """Generators from the last two columns of an n x n section.

    G = (e_n | W e_{n-1} X[n-1,n] + W e_n X[n,n] - X^T W e_n) in 1-based
    indexing; only the n x n sections of W and X are used.
    """
    a = np.asarray(col_before_last, dtype=float)
    c = np.asarray(col_last, dtype=float)
    n = c.size
    if a.size != n or n < 2:
        raise DimensionMismatch("both columns must have the same length n >= 2")
    if X.n < n:
        raise DimensionMismatch(f"multiplication section of size {X.n} given, {n} needed")
    G = np.zeros((n, 2))
    G[-1, 0] = 1.0
    G[:, 1] = a * X.du[n - 2] + c * X.d[n - 1] - _xt_times(X, c, n)
    return GeneratorPair(G)


def build_generators(W: GramSection | np.ndarray, X: TridiagonalSection) -> GeneratorPair:
    """Generators of the n x n section W from its own last two columns."""
    if isinstance(W, GramSection):
        n = W.n
        return generators_from_columns(W.column(n - 2), W.column(n - 1), X)
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch("W must be square")
    return generators_from_columns(W[:, -2], W[:, -1], X)


def generators_from_next_column(next_column, X: TridiagonalSection) -> GeneratorPair:
    """G = (e_n | -W[:n, n] X[n+1, n]) from the column just outside the section.

    This form needs the (n+1)-th column of W and row of X and is kept as an
    independent check of :func:`build_generators`.
    """
    w = np.asarray(next_column, dtype=float)
    n = w.size
    if X.n < n + 1:
        raise DimensionMismatch(f"multiplication section of size {n + 1} needed")
    G = np.zeros((n, 2))
    G[-1, 0] = 1.0
    G[:, 1] = -w * X.dl[n - 1]
    return GeneratorPair(G)


def displacement_residual(W: GramSection | np.ndarray, X: TridiagonalSection, gen: GeneratorPair) -> float:
    """Frobenius norm of X^T W - W X - G J G^T on the n x n section."""
    W = W.dense() if isinstance(W, GramSection) else np.asarray(W, dtype=float)
    n = W.shape[0]
    Xn = X.section(n).dense()
    return float(np.linalg.norm(Xn.T @ W - W @ Xn - gen.product()))


# -- factorization --------------------------------------------------------------------


def pivot_floor(first_column) -> float:
    """Pivots at or below this value signal loss of positive definiteness."""
    return PIVOT_RTOL * float(np.max(np.abs(first_column)))


def _raise_for(status: int, step: int):
    if status == 1:
        raise NotPositiveDefinite(step, where="fast Cholesky pivot")
    if status == 2:
        raise IrreducibilityViolated(step)


def fast_cholesky(
    first_column,
    X: TridiagonalSection,
    gen: GeneratorPair,
    *,
    bandwidth: int | None = None,
) -> TriangularFactor:
    """Cholesky factor of W from its first column and displacement data.

    Each step takes the pivot column c, recovers the second column from
    gamma W e_2 = (X^T - alpha) c - G J g^T (the second-column problem),
    forms the next Schur complement's first column, replaces the first-row
    correction of X by -gamma l / d and downdates G. With ``bandwidth`` b,
    only a window of b + 2 entries is carried and L is returned in band
    storage.

    Raises
    ------
    NotPositiveDefinite
        A pivot fell to 1e-14 * max|first column| or below.
    IrreducibilityViolated
        A subdiagonal entry of X is zero.
    """
    c0 = np.ascontiguousarray(first_column, dtype=float)
    n = gen.n
    if X.n < n:
        raise DimensionMismatch(f"multiplication section of size {X.n} given, {n} needed")
    G = np.array(gen.G, dtype=float, order="C")
    floor = pivot_floor(c0)
    dl, d, du = (np.ascontiguousarray(a) for a in (X.dl, X.d, X.du))
    if bandwidth is None:
        if c0.size != n:
            raise DimensionMismatch(f"first column has {c0.size} entries, generators {n}")
        L = np.zeros((n, n), order="F")
        status, step = _kernels.fast_cholesky_dense(c0, dl, d, du, G, L, floor)
        _raise_for(status, step)
        return TriangularFactor(n, FactorStorage.DENSE, L)
    b = int(bandwidth)
    head = np.zeros(b + 3)
    head[: min(b + 3, c0.size)] = c0[: b + 3]
    head[b + 1 :] = 0.0
    Lb = np.zeros((b + 1, n), order="F")  # column k of L is contiguous
    status, step = _kernels.fast_cholesky_banded(head, dl, d, du, G, Lb, floor)
    _raise_for(status, step)
    return TriangularFactor(n, FactorStorage.BANDED, Lb)


@dataclass
class EliminationState:
    """Live data after k elimination steps (dense, for checks)."""

    k: int
    L_columns: np.ndarray
    first_column: np.ndarray
    X: np.ndarray
    G: np.ndarray


def fast_cholesky_steps(first_column, X: TridiagonalSection, gen: GeneratorPair, steps: int) -> EliminationState:
    """Run ``steps`` elimination steps with dense numpy arrays.

    Mirrors the compiled kernel step for step but keeps the live X as an
    explicit matrix, so the displacement equation of each Schur complement
    can be checked directly.
    """
    c = np.array(first_column, dtype=float)
    n = c.size
    Xl = X.section(n).dense()
    G = np.array(gen.G, dtype=float)
    cols = np.zeros((n, steps))
    for k in range(steps):
        if c[0] <= 0:
            raise NotPositiveDefinite(k)
        d = np.sqrt(c[0])
        cols[k:, k] = c / d
        if k == n - 1:
            c = c[1:]
            Xl, G = Xl[1:, 1:], G[1:]
            break
        gam = Xl[1, 0]
        if gam == 0:
            raise IrreducibilityViolated(k)
        chat = ((Xl.T - Xl[0, 0] * np.eye(Xl.shape[0])) @ c - G @ J @ G[0]) / gam
        l = c / d
        c = chat[1:] - (c[1] / d) * l[1:]
        Xl = Xl[1:, 1:].copy()
        Xl[0] -= (gam / d) * l[1:]
        G = G[1:] - np.outer(l[1:], G[0]) / d
    return EliminationState(steps, cols, c, Xl, G)


def cholesky_dense_reference(W: GramSection | np.ndarray, *, overwrite: bool = False) -> TriangularFactor:
    """Direct LAPACK Cholesky: O(n^3) dense, O(b^2 n) for banded sections.

    With ``overwrite`` a dense float64 array may be factored in place
    (W is destroyed), which saves a copy of size n^2.
    """
    try:
        if isinstance(W, GramSection) and W.storage is Storage.BANDED:
            Lb = linalg.cholesky_banded(W.data, lower=True, check_finite=False)
            return TriangularFactor(W.n, FactorStorage.BANDED, Lb)
        A = W.dense() if isinstance(W, GramSection) else np.asarray(W, dtype=float)
        L = linalg.cholesky(A, lower=True, overwrite_a=overwrite, check_finite=False)
    except linalg.LinAlgError as exc:
        step = _leading_minor(str(exc))
        raise NotPositiveDefinite(step, where="reference Cholesky") from None
    return TriangularFactor(L.shape[0], FactorStorage.DENSE, L)


def _leading_minor(message: str) -> int:
    digits = [int(t) for t in message.replace(".", " ").split() if t.isdigit()]
    return digits[0] - 1 if digits else -1
