"""Connection coefficients between a classical family P and the modified family Q.

With W = R^T R the Cholesky factorization of the Gram section, the
modified orthonormal polynomials satisfy P(x) = Q(x) R. R also gives the
modified multiplication matrix through R X_P = X_Q R, converts expansion
coefficients between the two bases, and evaluates q_k.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .displacement import (
    FactorStorage,
    TriangularFactor,
    build_generators,
    cholesky_dense_reference,
    fast_cholesky,
    generators_from_columns,
)
from .errors import DimensionMismatch, InsufficientMoments, NotPositiveDefinite
from .families import Family, Kind, TridiagonalSection, evaluate, multiplication_matrix
from .gram import (
    ChebyshevGramOperator,
    GramSection,
    chebyshev_gram_columns,
    drop_tolerance,
    gram_banded_from_moments,
    gram_from_moments,
)
from .hodlr import HodlrCholesky, hodlr_cholesky, hodlr_compress, hodlr_from_dense
from .moments import MomentVector

__all__ = [
    "Backend",
    "ConnectionProblem",
    "ModifiedJacobiSection",
    "select_backend",
    "band_limit",
    "gram_section",
    "connection_coefficients",
    "modified_jacobi",
    "gautschi_residual",
    "convert_to_modified",
    "convert_to_known",
    "synthesize",
    "HODLR_MIN_SIZE",
]

# Chebyshev problems at least this large go to the hierarchical backend
HODLR_MIN_SIZE = 2048

Factor = TriangularFactor | HodlrCholesky


class Backend(enum.Enum):
    DENSE_CHOLESKY = "dense"
    DISPLACEMENT_CHOLESKY = "displacement"
    HODLR_CHOLESKY = "hodlr"


@dataclass(frozen=True, eq=False)
class ConnectionProblem:
    """Family, moments and section size; ``backend=None`` selects automatically.

    ``tol`` and ``seed`` only affect the hierarchical backend.
    """

    family: Family
    moments: MomentVector
    n: int
    backend: Backend | None = None
    tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.moments.family != self.family:
            raise DimensionMismatch(f"moments are for {self.moments.family}, problem is for {self.family}")
        if self.n < 2:
            raise DimensionMismatch("n must be at least 2")
        if band_limit(self.moments) is None and len(self.moments) < 2 * self.n - 1:
            raise InsufficientMoments(f"{2 * self.n - 1} moments needed, {len(self.moments)} given")
        if isinstance(self.backend, str):
            object.__setattr__(self, "backend", Backend(self.backend))


def band_limit(moments: MomentVector) -> int | None:
    """Index of the last moment above the drop tolerance, if the tail is negligible.

    Returns None unless the vector ends with at least as many negligible
    entries as the bandwidth, which is the evidence that the weight is
    (numerically) a polynomial.
    """
    mu = np.asarray(moments.values)
    big = np.flatnonzero(np.abs(mu) > drop_tolerance(mu))
    if big.size == 0:
        return 0
    b = int(big[-1])
    return b if mu.size - 1 - b >= max(b, 1) else None


def select_backend(p: ConnectionProblem) -> Backend:
    if p.backend is not None:
        return p.backend
    if p.family.kind is Kind.CHEBYSHEV_T and p.n >= HODLR_MIN_SIZE:
        return Backend.HODLR_CHOLESKY
    return Backend.DISPLACEMENT_CHOLESKY


def _multiplication(p: ConnectionProblem) -> TridiagonalSection:
    return multiplication_matrix(p.family, 2 * p.n + 2)


def gram_section(p: ConnectionProblem, X: TridiagonalSection | None = None) -> GramSection:
    """Banded section when the moments are band-limited, dense otherwise."""
    X = X or _multiplication(p)
    b = band_limit(p.moments)
    if b is not None and b < p.n - 1:
        return gram_banded_from_moments(p.moments, p.n, X=X)
    return gram_from_moments(_padded(p.moments, 2 * p.n - 1), p.n, X)


def _padded(moments: MomentVector, m: int) -> MomentVector:
    if len(moments) >= m:
        return moments
    vals = np.concatenate([moments.values, np.zeros(m - len(moments))])
    return MomentVector(moments.family, vals, moments.provenance)


def connection_coefficients(p: ConnectionProblem, timings: dict | None = None) -> Factor:
    """Upper-triangular R with W = R^T R and positive diagonal.

    The displacement backend uses the banded fast Cholesky when the
    moments are band-limited. For Chebyshev-T moments it reads the first
    and last two Gram columns from the Toeplitz-plus-Hankel formula and
    never forms W. The hierarchical backend compresses the Gram section
    through fast block products for Chebyshev-T and through dense blocks
    otherwise.

    If ``timings`` is given, the seconds spent assembling the Gram data
    (fill, columns or compression) and factoring are stored under
    ``"fill"`` and ``"factor"``.
    """
    backend = select_backend(p)
    X = _multiplication(p)
    n = p.n
    t0 = time.perf_counter()
    if backend is Backend.DENSE_CHOLESKY:
        W = gram_section(p, X)
        run = lambda: cholesky_dense_reference(W)
    elif backend is Backend.DISPLACEMENT_CHOLESKY:
        b = band_limit(p.moments)
        if b is not None and b < n - 1:
            W = gram_banded_from_moments(p.moments, n, X=X)
            first, gen, bw = W.column(0), build_generators(W, X), W.bandwidth
        elif p.family.kind is Kind.CHEBYSHEV_T:
            cols = chebyshev_gram_columns(_padded(p.moments, 2 * n - 1), n, [0, n - 2, n - 1])
            first, gen, bw = cols[:, 0], generators_from_columns(cols[:, 1], cols[:, 2], X), None
        else:
            W = gram_from_moments(_padded(p.moments, 2 * n - 1), n, X)
            first, gen, bw = W.column(0), build_generators(W, X), None
        run = lambda: fast_cholesky(first, X, gen, bandwidth=bw)
    else:
        if p.family.kind is Kind.CHEBYSHEV_T:
            op = ChebyshevGramOperator(_padded(p.moments, 2 * n - 1))
            H = hodlr_compress(lambda r, c, V: op.matvec(V, r, c), n, p.tol, seed=p.seed, block_dense=op.block)
        else:
            H = hodlr_from_dense(gram_section(p, X).dense(), p.tol, seed=p.seed)
        run = lambda: hodlr_cholesky(H)
    t1 = time.perf_counter()
    R = run()
    t2 = time.perf_counter()
    if timings is not None:
        timings["fill"] = t1 - t0
        timings["factor"] = t2 - t1
    return R


# -- modified multiplication matrix ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModifiedJacobiSection:
    """(n-1) x (n-1) section of X_Q.

    ``dense`` is the full triple product (R X_P) R^{-1}, kept to measure how
    far the computed matrix is from tridiagonal; ``section`` holds the
    tridiagonal part from the diagonal and first superdiagonal of R.
    """

    section: TridiagonalSection
    dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.section.n

    def off_tridiagonal(self) -> float:
        """max |entry outside the tridiagonal band| / max |entry|."""
        if self.dense is None:
            return 0.0
        A = self.dense
        mask = np.abs(np.subtract.outer(np.arange(A.shape[0]), np.arange(A.shape[1]))) > 1
        scale = np.abs(A).max()
        return float(np.abs(A[mask]).max() / scale) if mask.any() and scale else 0.0

    def asymmetry(self) -> float:
        """max |X_Q - X_Q^T| / max |X_Q| (zero in exact arithmetic for orthonormal Q)."""
        if self.dense is not None:
            A = self.dense
            return float(np.abs(A - A.T).max() / np.abs(A).max())
        s = self.section
        return float(np.abs(s.dl - s.du).max() / max(np.abs(s.d).max(), np.abs(s.dl).max()))


def _r_band(R: Factor, n: int) -> tuple[np.ndarray, np.ndarray]:
    return R.diagonal()[:n], R.superdiagonal()[: n - 1]


def modified_jacobi(R: Factor, X_P: TridiagonalSection, *, dense: bool = True) -> ModifiedJacobiSection:
    """The (n-1)-section of X_Q from R X_P = X_Q R.

    Tridiagonal entries use only the diagonal and first superdiagonal of R:
        X_Q[k+1, k] = R[k+1, k+1] X_P[k+1, k] / R[k, k]
        X_Q[k, k]   = X_P[k, k] + (R[k, k+1] X_P[k+1, k] - X_Q[k, k-1] R[k-1, k]) / R[k, k]
    With ``dense`` the full section is also formed by a right triangular
    solve against R (never inverting R explicitly).
    """
    n = R.n
    if X_P.n < n:
        raise DimensionMismatch(f"multiplication section of size {X_P.n} given, {n} needed")
    diag, sup = _r_band(R, n)
    if np.any(diag <= 0):
        raise NotPositiveDefinite(int(np.flatnonzero(diag <= 0)[0]), where="connection coefficients")
    m = n - 1
    beta = diag[1:n] * X_P.dl[: n - 1] / diag[: n - 1]
    alpha = np.empty(m)
    for k in range(m):
        corr = sup[k] * X_P.dl[k]
        if k > 0:
            corr -= beta[k - 1] * sup[k - 1]
        alpha[k] = X_P.d[k] + corr / diag[k]
    off = beta[: m - 1]
    section = TridiagonalSection(off.copy(), alpha, off.copy())
    full = None
    if dense:
        Rd = R.upper()
        # (R X_P)[:m, :m] = R[:m, :n] X_P[:n, :m]
        B = Rd[:m, :n] @ X_P.section(n).dense()[:, :m]
        full = linalg.solve_triangular(Rd[:m, :m], B.T, lower=False, trans="T", check_finite=False).T
    return ModifiedJacobiSection(section, full)


def gautschi_residual(R: Factor, X_P: TridiagonalSection, X_Q: ModifiedJacobiSection) -> float:
    """||R X_P - X_Q R||_F on the common (n-1) section, with the tridiagonal X_Q."""
    n = R.n
    m = n - 1
    Rd = R.upper()
    lhs = Rd[:m, :n] @ X_P.section(n).dense()[:, :m]
    rhs = X_Q.section.dense() @ Rd[:m, :m]
    return float(np.linalg.norm(lhs - rhs))


# -- coefficient transforms ------------------------------------------------------------


def convert_to_modified(R: Factor, p_coeffs) -> np.ndarray:
    """Coefficients in Q of f = P c: R c."""
    return R.apply_r(np.asarray(p_coeffs, dtype=float))


def convert_to_known(R: Factor, q_coeffs) -> np.ndarray:
    """Coefficients in P of f = Q d: R^{-1} d."""
    return R.solve_r(np.asarray(q_coeffs, dtype=float))


def synthesize(R: Factor, family: Family, k: int, x) -> np.ndarray:
    """q_k(x) from Q = P R^{-1}: back-substitute R y = e_k, then sum y_j p_j(x)."""
    if not 0 <= k < R.n:
        raise DimensionMismatch(f"degree {k} outside 0..{R.n - 1}")
    Rk = R.upper()[: k + 1, : k + 1] if not isinstance(R, TriangularFactor) else _leading_upper(R, k + 1)
    e = np.zeros(k + 1)
    e[k] = 1.0
    y = linalg.solve_triangular(Rk, e, lower=False, check_finite=False)
    return evaluate(family, k + 1, x) @ y


def _leading_upper(R: TriangularFactor, m: int) -> np.ndarray:
    if R.storage is FactorStorage.DENSE:
        return R.data[:m, :m].T
    return TriangularFactor(m, FactorStorage.BANDED, R.data[:, :m]).upper()
