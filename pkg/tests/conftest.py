import sys
import numpy as np
import pytest

from opmod.families import Family


def rel_err(a, ref):
    """Entrywise |a - ref| / max(|ref|, 1e-15 max|ref|), maximized."""
    a = np.asarray(a, dtype=float)
    ref = np.asarray(ref, dtype=float)
    floor = 1e-15 * np.abs(ref).max()
    return float(np.max(np.abs(a - ref) / np.maximum(np.abs(ref), floor)))


FAMILIES = [
    Family.chebyshev_t(),
    Family.chebyshev_u(),
    Family.legendre(),
    Family.jacobi(0.3, -0.6),
    Family.jacobi(1.5, 0.5),
    Family.laguerre(0.0),
    Family.laguerre(1.5),
]


@pytest.fixture(params=FAMILIES, ids=str)
def family(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
