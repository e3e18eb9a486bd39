"""Named weights used by the CLI and the experiment scripts.

Each preset knows its family, how to produce m moments, and a pointwise
weight (with its singular points) for the quadrature oracle.
"""
from __future__ import annotations

import math
import shlex
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidFamily
from .families import Family
from .moments import (
    MomentVector,
    Provenance,
    SimpleFunction,
    algebraic_factors,
    jacobi_power,
    moments_abs_x,
    moments_clenshaw_curtis,
    moments_log_chebyshev,
    moments_log_weight,
    moments_weighted_simple_function,
    ode_moments,
)
from .quadrature import LocalWeight

__all__ = [
    "Preset",
    "PRESETS",
    "preset",
    "preset_names",
    "delta_sqrt_moments",
    "ALGEBRAIC_T",
    "ALGEBRAIC_GAMMA",
    "LAGUERRE_STEP",
]

ALGEBRAIC_T = (-0.5, -0.25, 0.25, 0.5)
ALGEBRAIC_GAMMA = (-0.5, -0.25, 0.25, 0.5)
LAGUERRE_STEP = SimpleFunction([0.0, 4.0, math.inf], [4096.0, 1.0])


@dataclass(frozen=True)
class Preset:
    """A weight with a moment generator.

    ``weight`` integrates against ``dx`` on the family's domain; for
    ``log-chebyshev`` it includes the Chebyshev factor 1/sqrt(1-x^2).
    ``bandwidth`` is set when the moments are band-limited at machine
    precision.
    """

    name: str
    family: Family
    generate: Callable[[int], MomentVector] = field(repr=False)
    weight: Callable = field(repr=False)
    breakpoints: tuple[float, ...] = ()
    bandwidth: int | None = None

    def moments(self, m: int) -> MomentVector:
        return self.generate(m)


def delta_sqrt_moments(delta: float, m: int) -> MomentVector:
    """Legendre moments of w = 1/sqrt(1 + delta - x).

    From the generating function, w = sqrt(2/rho) sum_k P_k rho^-k with
    (rho + 1/rho)/2 = 1 + delta, so mu_k = sqrt(2/rho) rho^-k 2/(2k+1).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    rho = 1 + delta + math.sqrt(delta * (2 + delta))
    k = np.arange(m, dtype=float)
    mu = math.sqrt(2 / rho) * np.exp(-k * math.log(rho)) * 2 / (2 * k + 1)
    return MomentVector(Family.legendre(), mu, Provenance.CLOSED_FORM)


def delta_sqrt_bandwidth(delta: float) -> int:
    """Last index whose moment exceeds 1e-15 of the first."""
    rho = 1 + delta + math.sqrt(delta * (2 + delta))
    k = 0
    while True:
        if rho ** -(k + 1) * (1 / (2 * k + 3)) <= 1e-15:
            return k
        k += 1


def _clenshaw_curtis() -> Preset:
    return Preset("clenshaw-curtis", Family.chebyshev_t(), moments_clenshaw_curtis, LocalWeight())


def _log_chebyshev() -> Preset:
    w = LocalWeight(points=(1.0, -1.0), exponents=(-0.5, -0.5), logs=((1.0, 2.0),))
    return Preset("log-chebyshev", Family.chebyshev_t(), moments_log_chebyshev, w, (-1.0, 1.0))


def _abs_x() -> Preset:
    return Preset("abs-x", Family.chebyshev_t(), moments_abs_x, LocalWeight(points=(0.0,), exponents=(1.0,)), (0.0,))


def _log() -> Preset:
    return Preset("log", Family.chebyshev_t(), moments_log_weight, LocalWeight(logs=((1.0, 2.0),)), (1.0,))


def _jacobi(alpha: str, beta: str) -> Preset:
    a, b = float(alpha), float(beta)
    ode = jacobi_power(a, b)
    return Preset(f"jacobi {a:g} {b:g}", ode.family, lambda m: ode_moments(ode, m), ode.weight, (-1.0, 1.0))


def _delta_sqrt(delta: str) -> Preset:
    d = float(delta)
    w = LocalWeight(smooth=lambda x: 1.0 / np.sqrt(1.0 + d - x))
    return Preset(
        f"delta-sqrt {d:g}", Family.legendre(), lambda m: delta_sqrt_moments(d, m), w, (), delta_sqrt_bandwidth(d)
    )


def _algebraic() -> Preset:
    ode = algebraic_factors(ALGEBRAIC_T, ALGEBRAIC_GAMMA)
    return Preset("algebraic", ode.family, lambda m: ode_moments(ode, m), ode.weight, tuple(-t for t in ALGEBRAIC_T))


def _laguerre_step() -> Preset:
    fam = Family.laguerre(0.0)
    s = LAGUERRE_STEP
    w = LocalWeight(smooth=lambda x: np.exp(-x) * s(x))
    return Preset("laguerre-step", fam, lambda m: moments_weighted_simple_function(s, fam, m), w, (4.0,))


PRESETS: dict[str, tuple[int, Callable[..., Preset]]] = {
    "clenshaw-curtis": (0, _clenshaw_curtis),
    "log-chebyshev": (0, _log_chebyshev),
    "abs-x": (0, _abs_x),
    "log": (0, _log),
    "jacobi": (2, _jacobi),
    "delta-sqrt": (1, _delta_sqrt),
    "algebraic": (0, _algebraic),
    "laguerre-step": (0, _laguerre_step),
}


def preset_names() -> list[str]:
    return list(PRESETS)


def preset(spec: str) -> Preset:
    """Look up a preset by ``"name arg ..."``, e.g. ``"jacobi 0.5 -0.5"``."""
    parts = shlex.split(spec.replace(",", " "))
    if not parts:
        raise InvalidFamily("empty weight preset")
    name, args = parts[0], parts[1:]
    if name not in PRESETS:
        raise InvalidFamily(f"unknown weight preset {name!r}; known: {', '.join(PRESETS)}")
    nargs, make = PRESETS[name]
    if len(args) != nargs:
        raise InvalidFamily(f"preset {name!r} takes {nargs} argument(s), got {len(args)}")
    try:
        return make(*args)
    except ValueError as exc:
        raise InvalidFamily(f"bad arguments for preset {name!r}: {exc}") from None
