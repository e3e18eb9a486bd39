"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned below. Run with ``pytest tests/test_acceptance.py -v``
(the lines are repeated in the terminal summary) or as a script.
"""
import gc
import io
import math
import time

import numpy as np
import pytest

from opmod.connection import (
    ConnectionProblem,
    connection_coefficients,
    convert_to_known,
    convert_to_modified,
    gautschi_residual,
    gram_section,
    modified_jacobi,
)
from opmod.displacement import (
    build_generators,
    cholesky_dense_reference,
    displacement_residual,
    fast_cholesky,
    generators_from_columns,
)
from opmod.families import Family, multiplication_matrix
from opmod.gram import ChebyshevGramOperator, chebyshev_gram, chebyshev_gram_columns, gram_banded_from_moments, gram_from_moments
from opmod.hodlr import hodlr_cholesky, hodlr_compress, write_rank_report
from opmod.moments import (
    moment_bound_bv,
    moment_errors,
    moments_abs_x,
    moments_clenshaw_curtis,
    moments_from_ode,
    moments_log_chebyshev,
    moments_log_weight,
    jacobi_log,
    polynomial_moments,
)
from opmod.presets import delta_sqrt_moments, preset
from opmod.quadrature import LocalWeight, quadrature_moments

T = Family.chebyshev_t()
PRESETS = ["log-chebyshev", "abs-x", "log", "delta-sqrt 1", "algebraic"]
HODLR_TOL = 1e-12

# 1
RESIDUAL_TOL = 1e-10
RESIDUAL_SECONDS = 5.0
# 2
FAST_RATIO = (3.4, 4.6)
BANDED_RATIO = (1.7, 2.3)
DENSE_RATIO_MIN = 6.0
# 3
CLOSED_FORM_TOL = 1e-10
LOG_RECURRENCE_TOL = 1e-12
# 4
ALGEBRAIC_TOL = 1e-8
# 5
ROUNDTRIP_TOL = 1e-8
ROUNDTRIP_SECONDS = 30.0
# 6: dense SVD ranks at n = 128..1024 are 14, 16, 18, 20
RANK_DELTA = 2
# 7
DISPLACEMENT_TOL = 1e-12
# 8
GAUTSCHI_TOL = 1e-9
OFF_TRIDIAGONAL_TOL = 1e-10
# 9: cap of the log weight; sup w = V(w) = LOG_CAP
LOG_CAP = 5.0

RESULTS: dict[int, str] = {}


def report(num: int, ok: bool, detail: str):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[num] = line
    print(line)
    assert ok, line


def _best(fn, repeat, number=1):
    t = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        t = min(t, (time.perf_counter() - t0) / number)
    return t


def _round_robin(cases: dict, rounds: int, number: int = 1) -> dict:
    """Best time per case, cycling through all cases each round.

    A slow spell on the machine, or the allocator settling in (glibc raises
    its mmap threshold after the first large frees, so later outputs stop
    page-faulting), then affects every size rather than one.
    """
    best = dict.fromkeys(cases, math.inf)
    for _ in range(rounds):
        for key, fn in cases.items():
            best[key] = min(best[key], _best(fn, 1, number))
            gc.collect()
    return best


def _log_cheb_hodlr(n, seed):
    op = ChebyshevGramOperator(moments_log_chebyshev(2 * n - 1))
    return hodlr_compress(lambda r, c, V: op.matvec(V, r, c), n, HODLR_TOL, seed=seed, block_dense=op.block)


def test_criterion_01_delta_weight_residual():
    n = 1024
    fam = Family.legendre()
    connection_coefficients(ConnectionProblem(fam, delta_sqrt_moments(1.0, 127), 64))  # compile kernels
    worst, slowest = 0.0, 0.0
    for delta in (1.0, 0.1):
        t0 = time.perf_counter()
        p = ConnectionProblem(fam, delta_sqrt_moments(delta, 2 * n - 1), n)
        R = connection_coefficients(p)
        slowest = max(slowest, time.perf_counter() - t0)
        W = gram_section(p).dense()
        L = R.dense()
        worst = max(worst, np.linalg.norm(W - L @ L.T) / np.linalg.norm(W))
    report(1, worst <= RESIDUAL_TOL and slowest < RESIDUAL_SECONDS, f"residual {worst:.2e} <= {RESIDUAL_TOL:g}, {slowest:.3f} s < {RESIDUAL_SECONDS:g} s")


@pytest.mark.slow
def test_criterion_02_complexity_scaling():
    sizes = (2**12, 2**13, 2**14)
    mu = moments_log_chebyshev(2 * sizes[-1] - 1)
    X = multiplication_matrix(T, 2 * sizes[-1] + 2)

    fast_cases = {}
    for n in (64,) + sizes:
        cols = chebyshev_gram_columns(mu.truncate(2 * n - 1), n, [0, n - 2, n - 1])
        c0, g = cols[:, 0], generators_from_columns(cols[:, 1], cols[:, 2], X)
        fast_cases[n] = lambda c0=c0, g=g: fast_cholesky(c0, X, g)
    best = _round_robin(fast_cases, 5)
    fast = [best[n] for n in sizes]

    dense = []
    for n in sizes:
        laps = []
        for _ in range(5 if n < sizes[-1] else 1):
            W = chebyshev_gram(mu.truncate(2 * n - 1), n)
            t0 = time.perf_counter()
            # W is symmetric, so W.T is the same matrix in Fortran order and is factored in place
            L = cholesky_dense_reference(W.T, overwrite=True)
            laps.append(time.perf_counter() - t0)
            del W, L
            gc.collect()
        dense.append(min(laps))

    mub = delta_sqrt_moments(0.1, 2 * sizes[-1] - 1)
    Xl = multiplication_matrix(Family.legendre(), 2 * sizes[-1] + 2)
    banded_cases = {}
    for n in (64,) + sizes:
        B = gram_banded_from_moments(mub, n, X=Xl)
        c0, g, b = B.column(0), build_generators(B, Xl), B.bandwidth
        banded_cases[n] = lambda c0=c0, g=g, b=b: fast_cholesky(c0, Xl, g, bandwidth=b)
    best = _round_robin(banded_cases, 9, 10)
    banded = [best[n] for n in sizes]

    rf = np.array(fast[1:]) / fast[:-1]
    rb = np.array(banded[1:]) / banded[:-1]
    rd = np.array(dense[1:]) / dense[:-1]
    ok = (
        np.all((rf >= FAST_RATIO[0]) & (rf <= FAST_RATIO[1]))
        and np.all((rb >= BANDED_RATIO[0]) & (rb <= BANDED_RATIO[1]))
        and np.all(rd >= DENSE_RATIO_MIN)
    )
    fmt = lambda r: "/".join(f"{v:.2f}" for v in r)
    report(2, ok, f"per-doubling ratios: fast {fmt(rf)} in {FAST_RATIO}, banded (b={b}) {fmt(rb)} in {BANDED_RATIO}, LAPACK {fmt(rd)} >= {DENSE_RATIO_MIN:g}")


def test_criterion_03_closed_form_moments():
    m = 201
    cases = [
        ("clenshaw-curtis", moments_clenshaw_curtis, LocalWeight(), ()),
        ("abs-x", moments_abs_x, LocalWeight(points=(0.0,), exponents=(1.0,)), (0.0,)),
        ("log-chebyshev", moments_log_chebyshev, preset("log-chebyshev").weight, (-1.0, 1.0)),
        ("log", moments_log_weight, LocalWeight(logs=((1.0, 2.0),)), ()),
    ]
    errs = {name: moment_errors(gen(m).values, quadrature_moments(w, T, m, br)).max() for name, gen, w, br in cases}
    closed = moments_log_weight(1001).values
    rec = moments_from_ode(jacobi_log(0.0, 0.0), closed[:4], 1001).values
    rec_err = moment_errors(rec, closed).max()
    ok = max(errs.values()) <= CLOSED_FORM_TOL and rec_err <= LOG_RECURRENCE_TOL
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    report(3, ok, f"vs quadrature ({detail}) <= {CLOSED_FORM_TOL:g}; log recurrence {rec_err:.1e} <= {LOG_RECURRENCE_TOL:g}")


def test_criterion_04_algebraic_weight_moments():
    p = preset("algebraic")
    err = moment_errors(p.moments(200).values, quadrature_moments(p.weight, T, 200, p.breakpoints)).max()
    report(4, err <= ALGEBRAIC_TOL, f"200 moments, max relative error {err:.2e} <= {ALGEBRAIC_TOL:g}")


def test_criterion_05_hodlr_roundtrip():
    n = 4096
    _log_cheb_hodlr(256, 0)  # warm caches and compiled kernels
    t0 = time.perf_counter()
    H = _log_cheb_hodlr(n, seed=5)
    t1 = time.perf_counter()
    R = hodlr_cholesky(H)
    c = np.random.Generator(np.random.Philox(5)).standard_normal(n)
    back = convert_to_known(R, convert_to_modified(R, c))
    t2 = time.perf_counter()
    err = np.linalg.norm(back - c) / np.linalg.norm(c)
    ok = err <= ROUNDTRIP_TOL and t2 - t1 < ROUNDTRIP_SECONDS
    report(5, ok, f"n={n} roundtrip {err:.2e} <= {ROUNDTRIP_TOL:g}; factor + transforms {t2 - t1:.2f} s < {ROUNDTRIP_SECONDS:g} s (compression {t1 - t0:.2f} s)")


def test_criterion_06_rank_growth():
    ranks = {n: _log_cheb_hodlr(n, 0).ranks()[1][0] for n in (512, 1024, 2048, 4096)}
    growth = [ranks[2 * n] - ranks[n] for n in (512, 1024, 2048)]
    report(6, max(growth) <= RANK_DELTA, f"top-level ranks {ranks}, growth {growth} <= {RANK_DELTA}")


def test_criterion_07_displacement_identity():
    n = 256
    worst = 0.0
    for name in PRESETS:
        p = preset(name)
        X = multiplication_matrix(p.family, 2 * n + 2)
        W = gram_from_moments(p.moments(2 * n - 1), n, X)
        worst = max(worst, displacement_residual(W, X, build_generators(W, X)) / np.linalg.norm(W.dense()))
    report(7, worst <= DISPLACEMENT_TOL, f"worst relative residual over {len(PRESETS)} presets {worst:.2e} <= {DISPLACEMENT_TOL:g}")


def test_criterion_08_jacobi_section():
    n = 256
    g_worst = o_worst = 0.0
    for name in PRESETS:
        p = preset(name)
        R = connection_coefficients(ConnectionProblem(p.family, p.moments(2 * n - 1), n))
        X = multiplication_matrix(p.family, n)
        XQ = modified_jacobi(R, X)
        g = gautschi_residual(R, X, XQ) / (np.linalg.norm(R.upper()) * np.linalg.norm(X.dense()))
        g_worst, o_worst = max(g_worst, g), max(o_worst, XQ.off_tridiagonal())
    ok = g_worst <= GAUTSCHI_TOL and o_worst <= OFF_TRIDIAGONAL_TOL
    report(8, ok, f"Gautschi {g_worst:.2e} <= {GAUTSCHI_TOL:g}, off-tridiagonal {o_worst:.2e} <= {OFF_TRIDIAGONAL_TOL:g}")


def _capped_log(x):
    with np.errstate(divide="ignore"):
        return np.minimum(np.log(2.0 / (1.0 - x)), LOG_CAP)


def test_criterion_09_bv_bounds():
    m = 101
    cap_point = 1.0 - 2.0 * math.exp(-LOG_CAP)
    cases = {
        # name: (moments, sup |w|, total variation on [-1, 1])
        "x^2": (polynomial_moments([0, 0, 1], T, m).values, 1.0, 2.0),
        "|x|": (moments_abs_x(m).values, 1.0, 2.0),
        "capped log": (quadrature_moments(_capped_log, T, m, (cap_point,)), LOG_CAP, LOG_CAP),
    }
    margins = {}
    for name, (mu, sup, tv) in cases.items():
        bound = np.array([moment_bound_bv(sup, tv, k) for k in range(2, m)])
        margins[name] = float(np.max(np.abs(mu[2:]) / bound))
    ok = max(margins.values()) <= 1.0
    report(9, ok, "max |mu_n| / bound for 2 <= n <= 100: " + ", ".join(f"{k} {v:.3f}" for k, v in margins.items()))


def test_criterion_10_determinism():
    def run():
        H = _log_cheb_hodlr(1024, seed=11)
        R = hodlr_cholesky(H)
        buf = io.StringIO()
        write_rank_report(buf, H, label="gram")
        write_rank_report(buf, R, label="factor")
        return buf.getvalue(), R.dense()

    (ra, fa), (rb, fb) = run(), run()
    ok = ra == rb and fa.tobytes() == fb.tobytes()
    report(10, ok, "rank reports and factors bitwise identical across two seeded runs")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
