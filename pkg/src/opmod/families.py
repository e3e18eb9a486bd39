"""Classical orthogonal polynomial families and their banded operator matrices.

Every family is kept in its classical (DLMF) normalization with ``p_0 = 1``.
Matrices act on the right of the row vector of polynomials, so column ``k``
of a matrix holds the expansion of the image of ``p_k``:

    x P(x) = P(x) X,   d/dx P(x) = P'(x) D,   P(x) = P'(x) R,
    sigma(x) P'(x) = P(x) L.

Here ``P'`` is the derivative family (Chebyshev-T -> Chebyshev-U,
Legendre -> C^(3/2), Chebyshev-U -> C^(2), Jacobi(a, b) -> Jacobi(a+1, b+1),
Laguerre(a) -> Laguerre(a+1)). Derivative families are internal.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidFamily

__all__ = [
    "Kind",
    "Family",
    "TridiagonalSection",
    "BandedSection",
    "multiplication_matrix",
    "mass_matrix",
    "norm_ratios",
    "differentiation_matrix",
    "raising_matrix",
    "weighted_lowering_matrix",
    "evaluate",
    "evaluate_derivative_family",
    "apply_diff_pseudoinverse",
    "apply_diff_adjoint_pseudoinverse",
    "derivative_norm_ratios",
    "polynomial_of_matrix",
]


class Kind(enum.Enum):
    CHEBYSHEV_T = "chebyshev-t"
    CHEBYSHEV_U = "chebyshev-u"
    LEGENDRE = "legendre"
    JACOBI = "jacobi"
    LAGUERRE = "laguerre"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TridiagonalSection:
    """n x n section of a tridiagonal matrix.

    ``dl[k] = X[k+1, k]``, ``d[k] = X[k, k]``, ``du[k] = X[k, k+1]``.
    """

    dl: np.ndarray
    d: np.ndarray
    du: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dl", _frozen(self.dl))
        object.__setattr__(self, "d", _frozen(self.d))
        object.__setattr__(self, "du", _frozen(self.du))
        n = self.d.size
        if self.dl.size != max(n - 1, 0) or self.du.size != max(n - 1, 0):
            raise ValueError("off-diagonals must have length n - 1")

    @property
    def n(self) -> int:
        return self.d.size

    def is_irreducible(self) -> bool:
        return bool(np.all(self.dl != 0) and np.all(self.du != 0))

    def section(self, n: int) -> "TridiagonalSection":
        if n > self.n:
            raise ValueError(f"cannot take a {n}-section of a {self.n}-section")
        return TridiagonalSection(self.dl[: n - 1], self.d[:n], self.du[: n - 1])

    def dense(self) -> np.ndarray:
        return np.diag(self.d) + np.diag(self.dl, -1) + np.diag(self.du, 1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.d * v
        out[:-1] += self.du * v[1:]
        out[1:] += self.dl * v[:-1]
        return out

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """Return X^T v."""
        out = self.d * v
        out[:-1] += self.dl * v[1:]
        out[1:] += self.du * v[:-1]
        return out


@dataclass(frozen=True)
class BandedSection:
    """Square banded section in column-major band storage.

    ``ab[upper_bw + i - j, j] = A[i, j]`` (the LAPACK general band layout
    without the extra pivoting rows).
    """

    ab: np.ndarray
    lower_bw: int
    upper_bw: int

    def __post_init__(self):
        ab = _frozen(self.ab)
        if ab.ndim != 2 or ab.shape[0] != self.lower_bw + self.upper_bw + 1:
            raise ValueError("band storage has the wrong number of rows")
        object.__setattr__(self, "ab", ab)

    @property
    def n(self) -> int:
        return self.ab.shape[1]

    @classmethod
    def from_dense(cls, a: np.ndarray, lower_bw: int, upper_bw: int) -> "BandedSection":
        n = a.shape[0]
        ab = np.zeros((lower_bw + upper_bw + 1, n))
        for j in range(n):
            lo, hi = max(0, j - upper_bw), min(n, j + lower_bw + 1)
            ab[upper_bw + lo - j : upper_bw + hi - j, j] = a[lo:hi, j]
        return cls(ab, lower_bw, upper_bw)

    def entry(self, i: int, j: int) -> float:
        if -self.upper_bw <= i - j <= self.lower_bw:
            return float(self.ab[self.upper_bw + i - j, j])
        return 0.0

    def diagonal(self, offset: int = 0) -> np.ndarray:
        """Diagonal ``A[k, k + offset]``."""
        n = self.n
        if offset >= 0:
            return np.array(self.ab[self.upper_bw - offset, offset:n])
        return np.array(self.ab[self.upper_bw - offset, : n + offset])

    def dense(self) -> np.ndarray:
        n = self.n
        a = np.zeros((n, n))
        for off in range(-self.lower_bw, self.upper_bw + 1):
            if abs(off) < n:
                k = np.arange(n - abs(off))
                if off >= 0:
                    a[k, k + off] = self.diagonal(off)
                else:
                    a[k - off, k] = self.diagonal(off)
        return a

    def tosparse(self):
        from scipy import sparse

        offsets = list(range(-self.lower_bw, self.upper_bw + 1))
        data = [self.diagonal(o) for o in offsets]
        return sparse.diags(data, offsets, shape=(self.n, self.n), format="csr")


def _banded(n: int, diagonals: dict[int, np.ndarray]) -> BandedSection:
    lower = max([-o for o in diagonals if o < 0], default=0)
    upper = max([o for o in diagonals if o > 0], default=0)
    ab = np.zeros((lower + upper + 1, n))
    for off, vals in diagonals.items():
        m = n - abs(off)
        if m <= 0:
            continue
        vals = np.asarray(vals, dtype=float)[:m]
        if off >= 0:
            ab[upper - off, off:] = vals
        else:
            ab[upper - off, :m] = vals
    return BandedSection(ab, lower, upper)


# -- internal bases ---------------------------------------------------------
#
# kind "T": Chebyshev first kind; "C": ultraspherical C^(lam); "P": Jacobi;
# "L": generalized Laguerre.


@dataclass(frozen=True)
class _Basis:
    kind: str
    a: float = 0.0
    b: float = 0.0

    def recurrence(self, n: int):
        """Coefficients of x p_k = A_k p_{k+1} + B_k p_k + C_k p_{k-1}, k < n."""
        k = np.arange(n, dtype=float)
        if self.kind == "T":
            A = np.full(n, 0.5)
            A[0] = 1.0
            return A, np.zeros(n), np.full(n, 0.5)
        if self.kind == "C":
            lam = self.a
            A = (k + 1) / (2 * (k + lam))
            C = (k + 2 * lam - 1) / (2 * (k + lam))
            return A, np.zeros(n), C
        if self.kind == "L":
            return -(k + 1), 2 * k + self.a + 1, -(k + self.a)
        a, b = self.a, self.b
        s = 2 * k + a + b
        with np.errstate(divide="ignore", invalid="ignore"):
            A = 2 * (k + 1) * (k + a + b + 1) / ((s + 1) * (s + 2))
            B = (b * b - a * a) / (s * (s + 2))
            C = 2 * (k + a) * (k + b) / (s * (s + 1))
        if n:
            A[0] = 2 / (a + b + 2)
            B[0] = (b - a) / (a + b + 2)
            C[0] = 0.0
        return A, B, C

    def _norm0(self) -> float:
        if self.kind == "T":
            return np.pi
        if self.kind == "C":
            lam = self.a
            return float(np.exp(
                np.log(np.pi) + (1 - 2 * lam) * np.log(2) + special.gammaln(2 * lam)
                - np.log(lam) - 2 * special.gammaln(lam)
            ))
        if self.kind == "L":
            return float(special.gamma(self.a + 1))
        a, b = self.a, self.b
        return float(np.exp(
            (a + b + 1) * np.log(2) + special.gammaln(a + 1) + special.gammaln(b + 1) - special.gammaln(a + b + 2)
        ))

    def norm_ratios(self, n: int) -> np.ndarray:
        """h_{k+1} / h_k for k = 0..n-2, as rational expressions in k."""
        k = np.arange(max(n - 1, 0), dtype=float)
        if self.kind == "T":
            q = np.ones_like(k)
            q[:1] = 0.5
            return q
        if self.kind == "C":
            lam = self.a
            return (k + 2 * lam) * (k + lam) / ((k + 1) * (k + 1 + lam))
        if self.kind == "L":
            return (k + self.a + 1) / (k + 1)
        a, b = self.a, self.b
        with np.errstate(divide="ignore", invalid="ignore"):
            q = (k + a + 1) * (k + b + 1) * (2 * k + a + b + 1) / ((2 * k + a + b + 3) * (k + a + b + 1) * (k + 1))
        if q.size:
            q[0] = (a + 1) * (b + 1) / (a + b + 3)
        return q

    def derivative_norm_ratios(self, n: int) -> np.ndarray:
        """h'_k / h_k for k = 0..n-1, h' the norms of the derivative family."""
        k = np.arange(n, dtype=float)
        if self.kind == "T":
            r = np.ones(n)
            r[:1] = 0.5
            return r
        if self.kind == "C":
            lam = self.a
            return (k + 2 * lam) * (k + 2 * lam + 1) * (k + lam) / (4 * lam * lam * (k + lam + 1))
        if self.kind == "L":
            return k + self.a + 1
        a, b = self.a, self.b
        with np.errstate(divide="ignore", invalid="ignore"):
            r = 4 * (k + a + 1) * (k + b + 1) * (2 * k + a + b + 1) / (
                (2 * k + a + b + 3) * (k + a + b + 1) * (k + a + b + 2)
            )
        if n:
            r[0] = 4 * (a + 1) * (b + 1) / ((a + b + 3) * (a + b + 2))
        return r

    def norms(self, n: int) -> np.ndarray:
        """Squared norms h_k of p_k against w_c."""
        if n == 0:
            return np.zeros(0)
        return self._norm0() * np.concatenate([[1.0], np.cumprod(self.norm_ratios(n))])

    def derivative(self) -> "_Basis":
        if self.kind == "T":
            return _Basis("C", 1.0)
        if self.kind == "C":
            return _Basis("C", self.a + 1)
        if self.kind == "L":
            return _Basis("L", self.a + 1)
        return _Basis("P", self.a + 1, self.b + 1)

    def diff_superdiagonal(self, n: int) -> np.ndarray:
        """Entries D[k-1, k] for k = 1..n-1."""
        k = np.arange(1, n, dtype=float)
        if self.kind == "T":
            return k
        if self.kind == "C":
            return np.full(n - 1, 2 * self.a)
        if self.kind == "L":
            return -np.ones(n - 1)
        return (k + self.a + self.b + 1) / 2

    def raising(self, n: int) -> BandedSection:
        """Conversion P -> P' as an upper banded section."""
        k = np.arange(n, dtype=float)
        if self.kind == "T":
            diag = np.full(n, 0.5)
            diag[:1] = 1.0
            return _banded(n, {0: diag, 2: np.full(max(n - 2, 0), -0.5)})
        if self.kind == "C":
            lam = self.a
            r = lam / (k + lam)
            return _banded(n, {0: r, 2: -r[2:]})
        if self.kind == "L":
            return _banded(n, {0: np.ones(n), 1: -np.ones(max(n - 1, 0))})
        # Jacobi: (a, b) -> (a+1, b) -> (a+1, b+1), each step bidiagonal
        a, b = self.a, self.b
        s1 = self._jacobi_step(n, a, b, raise_a=True)
        s2 = self._jacobi_step(n, a + 1, b, raise_a=False)
        return BandedSection.from_dense(s2 @ s1, 0, 2)

    @staticmethod
    def _jacobi_step(n, a, b, raise_a):
        k = np.arange(n, dtype=float)
        s = 2 * k + a + b + 1
        with np.errstate(divide="ignore", invalid="ignore"):
            diag = (k + a + b + 1) / s
            off = (-(k + b) if raise_a else (k + a)) / s
        diag[:1] = 1.0
        return np.diag(diag) + np.diag(off[1:], 1)

    def evaluate(self, n: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (n,))
        if n == 0:
            return out
        A, B, C = self.recurrence(n)
        out[..., 0] = 1.0
        if n > 1:
            out[..., 1] = (x - B[0]) / A[0]
        for k in range(1, n - 1):
            out[..., k + 1] = ((x - B[k]) * out[..., k] - C[k] * out[..., k - 1]) / A[k]
        return out


@dataclass(frozen=True)
class Family:
    """A classical orthogonal polynomial family.

    Use the constructors :meth:`chebyshev_t`, :meth:`chebyshev_u`,
    :meth:`legendre`, :meth:`jacobi` and :meth:`laguerre`.
    """

    kind: Kind
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, Kind):
            raise InvalidFamily(f"unknown family kind {self.kind!r}")
        if self.kind is Kind.JACOBI and not (self.alpha > -1 and self.beta > -1):
            raise InvalidFamily(f"Jacobi parameters must exceed -1, got ({self.alpha}, {self.beta})")
        if self.kind is Kind.LAGUERRE and not self.alpha > -1:
            raise InvalidFamily(f"Laguerre parameter must exceed -1, got {self.alpha}")
        if self.kind not in (Kind.JACOBI, Kind.LAGUERRE) and (self.alpha or self.beta):
            raise InvalidFamily(f"{self.kind.value} takes no parameters")
        if self.kind is Kind.LAGUERRE and self.beta:
            raise InvalidFamily("Laguerre takes a single parameter")

    @classmethod
    def chebyshev_t(cls) -> "Family":
        return cls(Kind.CHEBYSHEV_T)

    @classmethod
    def chebyshev_u(cls) -> "Family":
        return cls(Kind.CHEBYSHEV_U)

    @classmethod
    def legendre(cls) -> "Family":
        return cls(Kind.LEGENDRE)

    @classmethod
    def jacobi(cls, alpha: float, beta: float) -> "Family":
        return cls(Kind.JACOBI, float(alpha), float(beta))

    @classmethod
    def laguerre(cls, alpha: float = 0.0) -> "Family":
        return cls(Kind.LAGUERRE, float(alpha))

    @classmethod
    def parse(cls, text: str) -> "Family":
        """Parse ``chebyshev-t``, ``legendre``, ``jacobi:a,b`` or ``laguerre:a``."""
        name, _, args = text.strip().lower().partition(":")
        params = [float(v) for v in args.split(",") if v.strip()]
        try:
            kind = Kind(name)
        except ValueError:
            raise InvalidFamily(f"unknown family {text!r}") from None
        if kind is Kind.JACOBI:
            if len(params) != 2:
                raise InvalidFamily("jacobi needs two parameters, e.g. jacobi:0.5,-0.5")
            return cls.jacobi(*params)
        if kind is Kind.LAGUERRE:
            return cls.laguerre(params[0] if params else 0.0)
        if params:
            raise InvalidFamily(f"{name} takes no parameters")
        return cls(kind)

    def __str__(self) -> str:
        if self.kind is Kind.JACOBI:
            return f"jacobi:{self.alpha:g},{self.beta:g}"
        if self.kind is Kind.LAGUERRE:
            return f"laguerre:{self.alpha:g}"
        return self.kind.value

    @property
    def bounded(self) -> bool:
        return self.kind is not Kind.LAGUERRE

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, np.inf) if self.kind is Kind.LAGUERRE else (-1.0, 1.0)

    @property
    def jacobi_exponents(self) -> tuple[float, float]:
        """Exponents (a, b) of the classical weight (1-x)^a (1+x)^b."""
        return {
            Kind.CHEBYSHEV_T: (-0.5, -0.5),
            Kind.CHEBYSHEV_U: (0.5, 0.5),
            Kind.LEGENDRE: (0.0, 0.0),
            Kind.JACOBI: (self.alpha, self.beta),
        }[self.kind]

    @property
    def sigma(self) -> np.ndarray:
        """Ascending coefficients of sigma(x) in the Pearson equation."""
        if self.kind is Kind.LAGUERRE:
            return np.array([0.0, 1.0])
        return np.array([1.0, 0.0, -1.0])

    @property
    def tau(self) -> np.ndarray:
        """Ascending coefficients of tau(x), with (sigma w_c)' = tau w_c."""
        if self.kind is Kind.LAGUERRE:
            return np.array([self.alpha + 1, -1.0])
        a, b = self.jacobi_exponents
        return np.array([b - a, -(a + b + 2)])

    @property
    def _basis(self) -> _Basis:
        if self.kind is Kind.CHEBYSHEV_T:
            return _Basis("T")
        if self.kind is Kind.CHEBYSHEV_U:
            return _Basis("C", 1.0)
        if self.kind is Kind.LEGENDRE:
            return _Basis("C", 0.5)
        if self.kind is Kind.LAGUERRE:
            return _Basis("L", self.alpha)
        return _Basis("P", self.alpha, self.beta)

    def weight(self, x) -> np.ndarray:
        """Classical weight w_c(x)."""
        x = np.asarray(x, dtype=float)
        if self.kind is Kind.LAGUERRE:
            return x**self.alpha * np.exp(-x)
        a, b = self.jacobi_exponents
        return (1 - x) ** a * (1 + x) ** b

    def sigma_weight(self, x) -> np.ndarray:
        """sigma(x) w_c(x), evaluated without forming 0 * inf at the endpoints."""
        x = np.asarray(x, dtype=float)
        if self.kind is Kind.LAGUERRE:
            with np.errstate(over="ignore", invalid="ignore"):
                out = x ** (self.alpha + 1) * np.exp(-x)
            return np.where(np.isinf(x), 0.0, out)
        a, b = self.jacobi_exponents
        return (1 - x) ** (a + 1) * (1 + x) ** (b + 1)

    def weight_integral(self, lo: float, hi: float) -> float:
        """Integral of w_c over [lo, hi] (hi may be +inf for Laguerre)."""
        if self.kind is Kind.LAGUERRE:
            s = self.alpha + 1
            g = special.gamma(s)
            return float(g * (special.gammainc(s, hi) - special.gammainc(s, lo)))
        a, b = self.jacobi_exponents
        # t = (1 + x)/2 maps the weight to 2^(a+b+1) t^b (1-t)^a
        scale = 2.0 ** (a + b + 1) * special.beta(b + 1, a + 1)
        t0, t1 = (1 + lo) / 2, (1 + hi) / 2
        return float(scale * (special.betainc(b + 1, a + 1, t1) - special.betainc(b + 1, a + 1, t0)))


# -- operator sections ------------------------------------------------------


def norm_ratios(family: Family, n: int) -> np.ndarray:
    """Ratios h_{k+1}/h_k of consecutive squared norms, k < n-1."""
    return family._basis.norm_ratios(n)


def derivative_norm_ratios(family: Family, n: int) -> np.ndarray:
    """Ratios h'_k/h_k of the derivative family's squared norms to the family's, k < n."""
    return family._basis.derivative_norm_ratios(n)


def multiplication_matrix(family: Family, n: int) -> TridiagonalSection:
    """n x n section of the multiplication-by-x matrix X_P."""
    if n < 2:
        raise ValueError("multiplication sections need n >= 2")
    A, B, C = family._basis.recurrence(n)
    return TridiagonalSection(A[: n - 1], B, C[1:])


def mass_matrix(family: Family, n: int) -> BandedSection:
    """Diagonal matrix of squared norms of p_0..p_{n-1} against w_c."""
    return _banded(n, {0: family._basis.norms(n)})


def differentiation_matrix(family: Family, n: int) -> BandedSection:
    return _banded(n, {1: family._basis.diff_superdiagonal(n)}) if n > 1 else _banded(1, {0: [0.0]})


def raising_matrix(family: Family, n: int) -> BandedSection:
    return family._basis.raising(n)


def weighted_lowering_matrix(family: Family, n: int) -> BandedSection:
    """Section of L with sigma P'(x) = P(x) L.

    Uses L = M_P^{-1} R^T M_{P'}, which follows from integrating P^T P'
    against the derivative family's weight sigma w_c.
    """
    basis = family._basis
    R = basis.raising(n)
    q = basis.norm_ratios(n)
    dr = basis.derivative_norm_ratios(n)
    diags = {}
    for k in range(R.upper_bw + 1):
        # L[j+k, j] = R[j, j+k] h'_j / h_{j+k}
        ratio = dr[: n - k].copy()
        for t in range(k):
            ratio /= q[t : n - k + t]
        diags[-k] = R.diagonal(k) * ratio
    return _banded(n, diags)


def evaluate(family: Family, n: int, x) -> np.ndarray:
    """Values p_0(x)..p_{n-1}(x); the trailing axis indexes the degree."""
    return family._basis.evaluate(n, x)


def evaluate_derivative_family(family: Family, n: int, x) -> np.ndarray:
    """Values of the first n members of the derivative family P' at x."""
    return family._basis.derivative().evaluate(n, x)


def apply_diff_pseudoinverse(family: Family, v) -> np.ndarray:
    """Row-vector product v (D_P^{P'})^+ on the n-section, n = len(v)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    out = np.zeros_like(v)
    if n > 1:
        out[..., :-1] = v[..., 1:] / family._basis.diff_superdiagonal(n)
    return out


def apply_diff_adjoint_pseudoinverse(family: Family, u) -> np.ndarray:
    """Column product E^+ u with E = M_P^{-1} D^T M_{P'} the weighted adjoint of D.

    E maps the coefficients of sigma w_c P' to those of w_c P under -d/dx;
    it has a single subdiagonal, E[k+1, k] = D[k, k+1] h'_k / h_{k+1}.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    out = np.zeros_like(u)
    if n > 1:
        basis = family._basis
        e = basis.diff_superdiagonal(n) * basis.derivative_norm_ratios(n - 1) / basis.norm_ratios(n)
        out[1:] = (u[:-1].T / e).T
    return out


def polynomial_of_matrix(coeffs, X: TridiagonalSection):
    """Sparse n x n matrix c(X) for ascending coefficients ``coeffs``."""
    from scipy import sparse

    n = X.n
    Xs = sparse.diags([X.dl, X.d, X.du], [-1, 0, 1], shape=(n, n), format="csr")
    out = sparse.csr_matrix((n, n))
    power = sparse.identity(n, format="csr")
    for i, c in enumerate(np.atleast_1d(coeffs)):
        if i:
            power = power @ Xs
        if c:
            out = out + c * power
    return out
