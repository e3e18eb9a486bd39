"""Modified moments  mu_n[w] = int p_n(x) w(x) dx  of a weight against a classical family.

Three routes are provided: closed forms for a handful of Chebyshev
weights, a banded linear recurrence built from a first-order differential
equation satisfied by the weight, and exact formulas for (classically
weighted) piecewise-constant weights.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import sparse

from .errors import (
    BreakpointOutsideDomain,
    DimensionMismatch,
    InsufficientInitialMoments,
    InvalidFamily,
    ZeroPivot,
)
from .families import (
    Family,
    Kind,
    apply_diff_pseudoinverse,
    apply_diff_adjoint_pseudoinverse,
    differentiation_matrix,
    evaluate,
    evaluate_derivative_family,
    multiplication_matrix,
    norm_ratios,
    polynomial_of_matrix,
    raising_matrix,
    weighted_lowering_matrix,
)
from .quadrature import LocalWeight, quadrature_moments

__all__ = [
    "Provenance",
    "MomentVector",
    "WeightOde",
    "SimpleFunction",
    "recurrence_operator",
    "recurrence_band",
    "moments_from_ode",
    "ode_moments",
    "polynomial_moments",
    "moments_clenshaw_curtis",
    "moments_log_chebyshev",
    "moments_abs_x",
    "moments_log_weight",
    "moments_simple_function",
    "moments_weighted_simple_function",
    "moment_errors",
    "moment_bound_bv",
    "moment_bound_bv2",
    "jacobi_power",
    "jacobi_log",
    "algebraic_factors",
    "laguerre_power",
    "laguerre_log",
    "laguerre_algebraic",
]

# relative size below which a recurrence coefficient counts as zero
BAND_TOL = 1e-13


class Provenance(enum.Enum):
    CLOSED_FORM = "closed-form"
    ODE_RECURRENCE = "ode-recurrence"
    SIMPLE_FUNCTION = "simple-function"
    EXTERNAL = "external"


@dataclass(frozen=True)
class MomentVector:
    """Moments mu_0..mu_{m-1} of a weight in the basis of ``family``."""

    family: Family
    values: np.ndarray
    provenance: Provenance = Provenance.EXTERNAL

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("a moment vector needs at least one entry")
        if not np.all(np.isfinite(v)):
            raise ValueError("moment vector has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, k):
        return self.values[k]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def truncate(self, m: int) -> "MomentVector":
        if m > len(self):
            raise DimensionMismatch(f"asked for {m} moments, have {len(self)}")
        return MomentVector(self.family, self.values[:m], self.provenance)


# A right-hand side is zero (None), known moments, another ODE, or a
# polynomial given by ascending monomial coefficients.
Rhs = Union[None, MomentVector, "WeightOde", np.ndarray, Sequence[float]]


@dataclass(frozen=True)
class WeightOde:
    """a(x) (sigma w)' + b(x) w = c(x), with sigma from ``family``.

    ``a_coeffs`` and ``b_coeffs`` are ascending monomial coefficients.
    ``rhs`` describes c through its moments: ``None`` for c = 0, a
    :class:`MomentVector`, a nested :class:`WeightOde` for c, or monomial
    coefficients when c is a polynomial. ``weight`` (optional) evaluates w
    itself and is used to seed the recurrence by quadrature.
    """

    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    family: Family
    rhs: Rhs = None
    weight: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a_coeffs", np.trim_zeros(np.atleast_1d(np.asarray(self.a_coeffs, float)), "b"))
        object.__setattr__(self, "b_coeffs", np.trim_zeros(np.atleast_1d(np.asarray(self.b_coeffs, float)), "b"))
        if self.a_coeffs.size == 0:
            raise ValueError("a(x) must not vanish identically")
        if isinstance(self.rhs, MomentVector) and self.rhs.family != self.family:
            raise InvalidFamily("right-hand side moments are in a different family")
        if isinstance(self.rhs, WeightOde) and self.rhs.family != self.family:
            raise InvalidFamily("right-hand side equation is in a different family")

    @property
    def deg_a(self) -> int:
        return self.a_coeffs.size - 1

    @property
    def deg_b(self) -> int:
        return max(self.b_coeffs.size - 1, 0)

    @property
    def half_bandwidth(self) -> int:
        """Nominal half bandwidth of the recurrence operator."""
        return max(self.deg_a + 1, self.deg_b)

    @property
    def max_length(self) -> int:
        """Upper bound max(2 deg a + 3, 2 deg b + 1) on the recurrence length."""
        return max(2 * self.deg_a + 3, 2 * self.deg_b + 1)

    def rhs_moments(self, m: int) -> np.ndarray:
        rhs = self.rhs
        if rhs is None:
            return np.zeros(m)
        if isinstance(rhs, MomentVector):
            if len(rhs) < m:
                raise DimensionMismatch(f"right-hand side has {len(rhs)} moments, need {m}")
            return np.array(rhs.values[:m])
        if isinstance(rhs, WeightOde):
            return np.array(ode_moments(rhs, m).values)
        return np.array(polynomial_moments(rhs, self.family, m).values)


@dataclass(frozen=True)
class SimpleFunction:
    """Piecewise-constant s(x) = values[k] on (breakpoints[k], breakpoints[k+1]).

    The last breakpoint may be ``np.inf``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float).ravel()
        s = np.asarray(self.values, dtype=float).ravel()
        if x.size < 2:
            raise ValueError("a simple function needs at least one subinterval")
        if s.size != x.size - 1:
            raise DimensionMismatch(f"{x.size} breakpoints need {x.size - 1} values, got {s.size}")
        if not np.all(np.diff(x) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(np.isnan(x)) or np.isinf(x[:-1]).any() or x[-1] == -np.inf:
            raise ValueError("only the last breakpoint may be infinite (+inf)")
        if not np.all(np.isfinite(s)):
            raise ValueError("simple function values must be finite")
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", s)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (k >= 0) & (k < self.values.size)
        return np.where(inside, self.values[np.clip(k, 0, self.values.size - 1)], 0.0)


# -- differential equation route ----------------------------------------------


def recurrence_operator(ode: WeightOde, n: int) -> sparse.csr_matrix:
    """n x n section of  M {a(X)[L D + tau(X)] + b(X)} M^{-1}.

    The last few rows and columns are polluted by truncation of the
    operator products; callers should work on a larger section.
    """
    fam = ode.family
    X = multiplication_matrix(fam, n)
    D = differentiation_matrix(fam, n).tosparse()
    L = weighted_lowering_matrix(fam, n).tosparse()
    inner = polynomial_of_matrix(ode.a_coeffs, X) @ (L @ D + polynomial_of_matrix(fam.tau, X))
    inner = sparse.dia_matrix(inner + polynomial_of_matrix(ode.b_coeffs, X))
    # similarity by the diagonal mass matrix, using consecutive norm ratios
    q = norm_ratios(fam, n)
    diags, offsets = [], []
    for k in inner.offsets:
        d = np.asarray(inner.diagonal(k), dtype=float)
        ratio = np.ones(n - abs(k))
        for t in range(abs(k)):
            ratio *= q[t : n - abs(k) + t]
        diags.append(d / ratio if k > 0 else d * ratio)
        offsets.append(k)
    return sparse.csr_matrix(sparse.diags(diags, offsets, shape=(n, n)))


def _band_rows(A: sparse.csr_matrix, h: int) -> np.ndarray:
    """Row-wise band storage ab[i, h + k] = A[i, i + k], |k| <= h."""
    n = A.shape[0]
    ab = np.zeros((n, 2 * h + 1))
    for k in range(-h, h + 1):
        d = A.diagonal(k)
        if k >= 0:
            ab[: n - k, h + k] = d
        else:
            ab[-k:, h + k] = d
    return ab


def _effective_band(ab: np.ndarray, h: int, rows: slice) -> tuple[int, int]:
    """Smallest (lower, upper) offsets holding every significant coefficient."""
    block = np.abs(ab[rows])
    scale = block.max(axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    significant = (block > BAND_TOL * scale).any(axis=0)
    offsets = np.flatnonzero(significant) - h
    if offsets.size == 0:
        raise ZeroPivot(rows.start or 0)
    return max(0, -int(offsets.min())), max(0, int(offsets.max()))


def recurrence_band(ode: WeightOde, m: int = 64) -> tuple[int, int]:
    """Effective (lower, upper) bandwidth of the moment recurrence.

    Outer diagonals that cancel identically are dropped, so this is often
    smaller than the nominal half bandwidth. The recurrence length is
    ``lower + upper + 1``.
    """
    h = ode.half_bandwidth
    n = m + 4 * h + 8
    ab = _band_rows(recurrence_operator(ode, n), h)
    return _effective_band(ab, h, slice(2 * h, n - 2 * h - 2))


def moments_from_ode(
    ode: WeightOde,
    initial: MomentVector | Sequence[float],
    m: int,
    *,
    trailing: Sequence[float] | None = None,
) -> MomentVector:
    """Moments mu_0..mu_{m-1} from the banded recurrence of ``ode``.

    Forward mode (default) extends the leading moments ``initial`` by
    solving row i of the recurrence for its highest-index moment. Supplied
    moments are kept verbatim. At least ``upper`` leading moments are
    needed, ``upper`` being the effective upper bandwidth (see
    :func:`recurrence_band`); supplying ``lower + upper`` avoids relying on
    the degenerate leading rows.

    With ``trailing`` (the moments mu_m, mu_{m+1}, ... at least
    ``lower + upper`` of them) the recurrence is instead run downward,
    solving each row for its lowest-index moment, and ``initial`` is
    ignored (pass an empty sequence).

    Raises
    ------
    InsufficientInitialMoments
        Too few starting values for the recurrence.
    ZeroPivot
        The coefficient solved for vanishes in some row.
    """
    if m < 1:
        raise ValueError("m must be positive")
    h = ode.half_bandwidth
    n = m + 2 * h + 4
    ab = _band_rows(recurrence_operator(ode, n), h)
    lo, up = recurrence_band(ode)
    width = lo + up
    mu = np.zeros(n + lo)  # mu[lo + k] holds mu_k; the padding stands for mu_{-lo..-1}

    if trailing is not None:
        tail = np.asarray(trailing, dtype=float)
        if tail.size < width:
            raise InsufficientInitialMoments(f"downward recurrence needs {width} trailing moments, got {tail.size}")
        rhs = ode.rhs_moments(m + lo)
        mu[lo + m : lo + m + width] = tail[:width]
        for i in range(m - 1 + lo, lo - 1, -1):
            row = ab[i, h - lo : h + up + 1]
            pivot = row[0]
            if abs(pivot) <= BAND_TOL * np.abs(row).max():
                raise ZeroPivot(i)
            acc = rhs[i] - row[1:] @ mu[i + 1 : i + width + 1]
            mu[i] = acc / pivot  # index lo + (i - lo)
        return MomentVector(ode.family, mu[lo : lo + m], Provenance.ODE_RECURRENCE)

    init = np.asarray(initial, dtype=float).ravel()
    if init.size < up:
        raise InsufficientInitialMoments(f"recurrence needs {up} leading moments, got {init.size}")
    k0 = min(init.size, m)
    mu[lo : lo + k0] = init[:k0]
    if k0 < m:
        rhs = ode.rhs_moments(m)
        for k in range(k0, m):
            i = k - up
            row = ab[i, h - lo : h + up + 1]
            pivot = row[-1]
            if abs(pivot) <= BAND_TOL * np.abs(row).max():
                raise ZeroPivot(i)
            acc = rhs[i] - row[:-1] @ mu[i : i + width]
            mu[lo + k] = acc / pivot
    return MomentVector(ode.family, mu[lo : lo + m], Provenance.ODE_RECURRENCE)


def ode_moments(ode: WeightOde, m: int, *, initial_count: int | None = None, tol: float = 1e-14) -> MomentVector:
    """Moments from the recurrence, seeded by quadrature of ``ode.weight``.

    By default ``lower + upper`` leading moments (the recurrence length
    minus one) are computed by the quadrature oracle.
    """
    if ode.weight is None:
        raise InsufficientInitialMoments("the equation carries no weight to seed the recurrence; use moments_from_ode")
    lo, up = recurrence_band(ode)
    count = lo + up if initial_count is None else initial_count
    count = max(1, min(count, m))
    initial = quadrature_moments(ode.weight, ode.family, count, tol=tol)
    return moments_from_ode(ode, initial, m)


def _moments_of_one(family: Family, n: int) -> np.ndarray:
    """Moments of w = 1, from cancellation-free closed forms where they exist."""
    k = np.arange(n, dtype=float)
    even = np.arange(n) % 2 == 0
    if family.kind is Kind.CHEBYSHEV_T:
        with np.errstate(divide="ignore"):
            return np.where(even, 2.0 / (1.0 - k * k), 0.0)
    if family.kind is Kind.CHEBYSHEV_U:
        return np.where(even, 2.0 / (k + 1.0), 0.0)
    if family.kind is Kind.LEGENDRE:
        return np.where(k == 0, 2.0, 0.0)
    return moments_simple_function(SimpleFunction([-1.0, 1.0], [1.0]), family, n).values


def polynomial_moments(coeffs, family: Family, m: int) -> MomentVector:
    """Moments of a polynomial weight c(x) (ascending monomial coefficients).

    Uses mu[x c] = X^T mu[c] starting from the moments of 1.
    """
    if not family.bounded:
        raise InvalidFamily("moments of a polynomial diverge on an unbounded domain")
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    n = m + c.size + 1
    mu1 = _moments_of_one(family, n)
    X = multiplication_matrix(family, n)
    out = polynomial_of_matrix(c, X).T @ mu1
    return MomentVector(family, out[:m], Provenance.CLOSED_FORM)


# -- closed forms ---------------------------------------------------------------


def moments_clenshaw_curtis(m: int) -> MomentVector:
    """Chebyshev-T moments of w = 1: 2/(1 - n^2) for even n, 0 for odd n."""
    n = np.arange(m, dtype=float)
    with np.errstate(divide="ignore"):
        mu = np.where(n % 2 == 0, 2.0 / (1.0 - n * n), 0.0)
    return MomentVector(Family.chebyshev_t(), mu, Provenance.CLOSED_FORM)


def moments_log_chebyshev(m: int) -> MomentVector:
    """Chebyshev-T moments of w = log(2/(1-x)) / sqrt(1-x^2)."""
    n = np.arange(m, dtype=float)
    mu = np.empty(m)
    mu[0] = 2 * np.pi * np.log(2.0)
    mu[1:] = np.pi / n[1:]
    return MomentVector(Family.chebyshev_t(), mu, Provenance.CLOSED_FORM)


def moments_abs_x(m: int) -> MomentVector:
    """Chebyshev-T moments of w = |x|."""
    n = np.arange(m, dtype=float)
    with np.errstate(divide="ignore"):
        mu = np.where(np.arange(m) % 4 == 0, 1.0 / (1.0 - (n / 2) ** 2), 0.0)
    return MomentVector(Family.chebyshev_t(), mu, Provenance.CLOSED_FORM)


def moments_log_weight(m: int) -> MomentVector:
    """Chebyshev-T moments of w = log(2/(1-x)).

    Summed form of the two decoupled even/odd recurrences
        (1 - 4k^2) mu_{2k}        = 2 - sum_{j<k} 4(2j+1) / (4 - (2j+1)^2),
        2k (2k+2) mu_{2k+1}       = sum_{j<k} 8(j+1) / (1 - 4(j+1)^2),   k >= 1,
    with mu_1 = 1.
    """
    mu = np.zeros(m)
    ke = np.arange((m + 1) // 2, dtype=float)
    if ke.size:
        odd = 2 * ke + 1
        steps = 4 * odd / (4 - odd**2)
        partial = 2.0 - np.concatenate([[0.0], np.cumsum(steps)[:-1]])
        mu[0::2] = partial / (1 - 4 * ke**2)
    ko = np.arange(m // 2, dtype=float)
    if ko.size:
        j = ko[1:]
        partial = np.cumsum(8 * j / (1 - 4 * j**2))
        mu[1::2] = np.concatenate([[1.0], partial / (2 * j * (2 * j + 2))])
    return MomentVector(Family.chebyshev_t(), mu, Provenance.CLOSED_FORM)


# -- simple functions -----------------------------------------------------------


def _check_breakpoints(s: SimpleFunction, family: Family, allow_inf: bool):
    lo, hi = family.domain
    x = s.breakpoints
    finite = x[np.isfinite(x)]
    if finite.size and (finite.min() < lo or finite.max() > hi):
        raise BreakpointOutsideDomain(f"breakpoints must lie in [{lo}, {hi}] for {family}")
    if np.isinf(x[-1]) and not (allow_inf and np.isinf(hi)):
        raise BreakpointOutsideDomain(f"an infinite breakpoint is not allowed for {family} here")


def moments_simple_function(s: SimpleFunction, family: Family, m: int) -> MomentVector:
    """Exact moments of a piecewise-constant weight (no classical factor).

    Integrals of the basis over each piece come from the antiderivative
    P(x) D^+ R, evaluated at the breakpoints. On the unbounded Laguerre
    domain a piece reaching +inf must carry the value 0.
    """
    _check_breakpoints(s, family, allow_inf=True)
    x, w = s.breakpoints, s.values
    if np.isinf(x[-1]):
        if w[-1] != 0:
            raise BreakpointOutsideDomain("a nonzero piece reaching +inf has infinite moments; use moments_weighted_simple_function")
        x, w = x[:-1], w[:-1]
    n = m + 3
    P = evaluate(family, n, x)
    v = w @ (P[1:] - P[:-1])
    u = apply_diff_pseudoinverse(family, v)
    mu = raising_matrix(family, n).tosparse().T @ u
    return MomentVector(family, mu[:m], Provenance.SIMPLE_FUNCTION)


def moments_weighted_simple_function(s: SimpleFunction, family: Family, m: int) -> MomentVector:
    """Exact moments of w_c(x) s(x), w_c the family's classical weight.

    Uses the boundary terms sigma w_c P' at the breakpoints, which vanish at
    the classical endpoints and at +inf. The zeroth moment, which that
    identity does not reach, is the integral of w_c over each piece.
    """
    _check_breakpoints(s, family, allow_inf=True)
    x, w = s.breakpoints, s.values
    n = m + 1
    xf = np.where(np.isinf(x), 0.0, x)
    dP = evaluate_derivative_family(family, n, xf)
    sw = family.sigma_weight(x)
    B = sw[:, None] * dP
    B[np.isinf(x)] = 0.0
    u = w @ (B[:-1] - B[1:])
    mu = apply_diff_adjoint_pseudoinverse(family, u)
    mu[0] = sum(wk * family.weight_integral(a, b) for wk, a, b in zip(w, x[:-1], x[1:]) if wk)
    return MomentVector(family, mu[:m], Provenance.SIMPLE_FUNCTION)


def moment_errors(values, reference) -> np.ndarray:
    """Entrywise error of computed moments against a reference.

    Relative to |values[k]| where the computed moment is nonzero. Exactly
    zero moments (structural zeros from symmetry) have no relative scale
    and are measured against max |reference|.
    """
    v = np.asarray(values, dtype=float)
    ref = np.asarray(reference, dtype=float)
    scale = np.where(v != 0, np.abs(v), np.abs(ref).max())
    return np.abs(v - ref) / scale


# -- decay bounds ---------------------------------------------------------------


def moment_bound_bv(sup_w: float, total_variation_w: float, n: int) -> float:
    """Upper bound on |mu_n[w]| (Chebyshev-T) for w of bounded variation, n >= 2."""
    if n < 2:
        raise ValueError("the bound needs n >= 2")
    return 2.0 * sup_w / (n - 1) ** 2 + total_variation_w / (n - 1)


def moment_bound_bv2(sup_w: float, sup_dw: float, total_variation_dw: float, n: int) -> float:
    """Sharper bound when w is absolutely continuous and w' has bounded variation, n >= 3."""
    if n < 3:
        raise ValueError("the bound needs n >= 3")
    return 2.0 * sup_w / (n - 1) ** 2 + 2.0 * sup_dw / (n - 2) ** 3 + total_variation_dw / (n - 2) ** 2


# -- weights satisfying first-order equations ------------------------------------


def _require(family: Family, bounded: bool):
    if family.bounded != bounded:
        kind = "a Jacobi-type family on [-1, 1]" if bounded else "a Laguerre family"
        raise InvalidFamily(f"this weight needs {kind}, got {family}")


def _product(roots_shift) -> np.ndarray:
    """Ascending coefficients of prod (t_i + x)."""
    out = np.array([1.0])
    for t in roots_shift:
        out = npoly.polymul(out, [t, 1.0])
    return out


def _algebraic_sum(t, gamma) -> np.ndarray:
    """sum_i gamma_i prod_{j != i} (t_j + x)."""
    out = np.zeros(1)
    for i, g in enumerate(gamma):
        out = npoly.polyadd(out, g * _product([tj for j, tj in enumerate(t) if j != i]))
    return out


def _is_nonneg_int(v: float) -> bool:
    return v >= 0 and float(v).is_integer()


def jacobi_power(alpha: float, beta: float, family: Family | None = None) -> WeightOde:
    """w = (1-x)^alpha (1+x)^beta:  (sigma w)' + [alpha - beta + (alpha+beta+2) x] w = 0."""
    family = family or Family.chebyshev_t()
    _require(family, bounded=True)
    weight = LocalWeight(points=(1.0, -1.0), exponents=(alpha, beta))
    return WeightOde([1.0], [alpha - beta, alpha + beta + 2], family, None, weight)


def jacobi_log(alpha: float, beta: float, family: Family | None = None) -> WeightOde:
    """w = log(2/(1-x)) (1-x)^alpha (1+x)^beta.

    Same operator as :func:`jacobi_power`, with c = (1-x)^alpha (1+x)^(beta+1).
    """
    family = family or Family.chebyshev_t()
    _require(family, bounded=True)
    if _is_nonneg_int(alpha) and _is_nonneg_int(beta + 1):
        rhs = npoly.polymul(npoly.polypow([1.0, -1.0], int(alpha)), npoly.polypow([1.0, 1.0], int(beta + 1)))
    else:
        rhs = jacobi_power(alpha, beta + 1, family)
    weight = LocalWeight(points=(1.0, -1.0), exponents=(alpha, beta), logs=((1.0, 2.0),))
    return WeightOde([1.0], [alpha - beta, alpha + beta + 2], family, rhs, weight)


def algebraic_factors(t: Sequence[float], gamma: Sequence[float], family: Family | None = None) -> WeightOde:
    """w = prod |t_i + x|^gamma_i on [-1, 1].

    From (t + x) w' = w sum_i gamma_i prod_{j != i} (t_j + x) and
    sigma w' = (sigma w)' - sigma' w:
        a = prod (t_i + x),   b = -a sigma' - sigma sum_i gamma_i prod_{j != i} (t_j + x).
    """
    family = family or Family.chebyshev_t()
    _require(family, bounded=True)
    t = [float(v) for v in t]
    gamma = [float(g) for g in gamma]
    if len(t) != len(gamma):
        raise DimensionMismatch("t and gamma differ in length")
    a = _product(t)
    sigma = family.sigma
    b = -npoly.polyadd(npoly.polymul(a, npoly.polyder(sigma)), npoly.polymul(sigma, _algebraic_sum(t, gamma)))
    weight = LocalWeight(points=[-v for v in t], exponents=gamma)
    return WeightOde(a, b, family, None, weight)


def laguerre_power(alpha: float, family: Family | None = None) -> WeightOde:
    """w = x^alpha e^{-x}:  (x w)' + (x - alpha - 1) w = 0."""
    family = family or Family.laguerre()
    _require(family, bounded=False)
    weight = LocalWeight(points=(0.0,), exponents=(alpha,), smooth=lambda x: np.exp(-x))
    return WeightOde([1.0], [-alpha - 1, 1.0], family, None, weight)


def laguerre_log(t: float, alpha: float = 0.0, family: Family | None = None) -> WeightOde:
    """w = log(t + x) x^alpha e^{-x}, t > 0:  (t+x)(x w)' + (t+x)(x-alpha-1) w = x^(alpha+1) e^{-x}."""
    family = family or Family.laguerre()
    _require(family, bounded=False)
    if not t > 0:
        raise ValueError("log(t + x) needs t > 0 on [0, inf)")
    a = np.array([t, 1.0])
    b = npoly.polymul(a, [-alpha - 1, 1.0])
    weight = LocalWeight(
        points=(0.0,), exponents=(alpha,), smooth=lambda x: np.log(t + x) * np.exp(-x)
    )
    return WeightOde(a, b, family, laguerre_power(alpha + 1, family), weight)


def laguerre_algebraic(t: Sequence[float], gamma: Sequence[float], family: Family | None = None) -> WeightOde:
    """w = prod |t_i + x|^gamma_i e^{-x} on [0, inf).

    From (t + x)(w' + w) = w sum_i gamma_i prod_{j != i}(t_j + x) and x w' = (x w)' - w:
        a = prod (t_i + x),   b = a (x - 1) - x sum_i gamma_i prod_{j != i}(t_j + x).
    """
    family = family or Family.laguerre()
    _require(family, bounded=False)
    t = [float(v) for v in t]
    gamma = [float(g) for g in gamma]
    if len(t) != len(gamma):
        raise DimensionMismatch("t and gamma differ in length")
    a = _product(t)
    b = npoly.polysub(npoly.polymul(a, [-1.0, 1.0]), npoly.polymul([0.0, 1.0], _algebraic_sum(t, gamma)))
    weight = LocalWeight(points=[-v for v in t], exponents=gamma, smooth=lambda x: np.exp(-x))
    return WeightOde(a, b, family, None, weight)
