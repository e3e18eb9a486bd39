"""Plain-text and binary formats for moments, Gram sections, factors and weight files.

CSV files use full double precision (``%.17g``). The band format for
triangular factors is little-endian: int64 n, int64 b, then for each of the
n columns the b+1 entries L[j, j], ..., L[j+b, j] as float64 (entries past
the last row are zero).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .displacement import FactorStorage, TriangularFactor
from .errors import DimensionMismatch
from .families import Family
from .moments import MomentVector, Provenance, SimpleFunction, WeightOde

__all__ = [
    "write_moments",
    "read_moments",
    "write_gram",
    "write_factor_csv",
    "read_factor_csv",
    "write_factor_band",
    "read_factor_band",
    "write_jacobi",
    "WeightFile",
    "read_weight_file",
]

FMT = "%.17g"


def _lines(path) -> list[str]:
    return Path(path).read_text().splitlines()


def write_moments(target, moments: MomentVector, check: np.ndarray | None = None):
    """``n,mu`` rows to a path or text file; with ``check`` an extra ``rel_err`` column."""
    mu = np.asarray(moments.values)
    if check is None:
        text = "n,mu\n" + "".join(f"{k},{FMT % v}\n" for k, v in enumerate(mu.tolist()))
    else:
        rows = zip(mu.tolist(), np.asarray(check).tolist())
        text = "n,mu,rel_err\n" + "".join(f"{k},{FMT % v},{FMT % e}\n" for k, (v, e) in enumerate(rows))
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def read_moments(path, family: Family) -> MomentVector:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    idx = data[:, 0].astype(int)
    if not np.array_equal(idx, np.arange(idx.size)):
        raise DimensionMismatch("moment indices must run 0, 1, 2, ...")
    return MomentVector(family, data[:, 1], Provenance.EXTERNAL)


def write_gram(path, W: np.ndarray):
    """Dense Gram section as ``i,j,w`` rows, row-major."""
    W = np.asarray(W)
    n = W.shape[0]
    i, j = np.divmod(np.arange(n * n), n)
    _write_triplets(path, "i,j,w", i, j, W.ravel())


def _write_triplets(path, header: str, i, j, v):
    with open(path, "w") as f:
        f.write(header + "\n")
        for a, b, c in zip(i.tolist(), j.tolist(), v.tolist()):
            f.write(f"{a},{b},{FMT % c}\n")


def write_factor_csv(path, L: TriangularFactor):
    """Lower triangle of L as ``i,j,l`` rows, column by column."""
    if L.storage is FactorStorage.BANDED:
        b = L.bandwidth
        j = np.repeat(np.arange(L.n), b + 1)
        off = np.tile(np.arange(b + 1), L.n)
        i = j + off
        keep = i < L.n
        vals = L.data.T.ravel()
        _write_triplets(path, "i,j,l", i[keep], j[keep], vals[keep])
        return
    i, j = np.tril_indices(L.n)
    order = np.lexsort((i, j))
    _write_triplets(path, "i,j,l", i[order], j[order], L.data[i[order], j[order]])


def read_factor_csv(path) -> TriangularFactor:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    i, j = data[:, 0].astype(int), data[:, 1].astype(int)
    n = int(max(i.max(), j.max())) + 1
    b = int((i - j).max())
    if b < n - 1:
        ab = np.zeros((b + 1, n))
        ab[i - j, j] = data[:, 2]
        return TriangularFactor(n, FactorStorage.BANDED, ab)
    L = np.zeros((n, n), order="F")
    L[i, j] = data[:, 2]
    return TriangularFactor(n, FactorStorage.DENSE, L)


def write_factor_band(path, L: TriangularFactor):
    """Binary band format (see module docstring)."""
    n, b = L.n, L.bandwidth
    if L.storage is FactorStorage.BANDED:
        ab = L.data
    else:
        ab = np.zeros((b + 1, n))
        for i in range(b + 1):
            ab[i, : n - i] = np.diagonal(L.data, -i)
    with open(path, "wb") as f:
        f.write(np.array([n, b], dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(ab.T, dtype="<f8").tobytes())


def read_factor_band(path) -> TriangularFactor:
    raw = Path(path).read_bytes()
    n, b = (int(v) for v in np.frombuffer(raw[:16], dtype="<i8"))
    body = np.frombuffer(raw[16:], dtype="<f8")
    if body.size != n * (b + 1):
        raise DimensionMismatch(f"band file holds {body.size} values, header says {n} x {b + 1}")
    ab = body.reshape(n, b + 1).T.copy()
    return TriangularFactor(n, FactorStorage.BANDED, ab)


def write_jacobi(path, X: np.ndarray):
    """Section of the modified multiplication matrix as ``i,j,x`` rows (nonzeros only)."""
    X = np.asarray(X)
    i, j = np.nonzero(X)
    _write_triplets(path, "i,j,x", i, j, X[i, j])


# -- weight description files -----------------------------------------------------------


@dataclass(frozen=True)
class WeightFile:
    """Parsed key=value weight description.

    Keys: ``a_coeffs``, ``b_coeffs``, ``rhs`` (ascending polynomial
    coefficients of the right-hand side, omit or ``0`` for none),
    ``initial`` (leading moments for the recurrence), ``breakpoints``,
    ``values`` and ``classical_weight`` (yes/no: multiply the simple function
    by the family's weight).
    """

    entries: dict[str, str]

    def floats(self, key: str) -> list[float] | None:
        text = self.entries.get(key)
        if text is None or not text.strip():
            return None
        return [_float(t) for t in text.replace(",", " ").split()]

    def flag(self, key: str, default: bool) -> bool:
        text = self.entries.get(key)
        if text is None:
            return default
        low = text.strip().lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise ValueError(f"{key} must be yes or no, got {text!r}")

    def ode(self, family: Family) -> tuple[WeightOde, MomentVector | None]:
        a = self.floats("a_coeffs")
        b = self.floats("b_coeffs")
        if a is None or b is None:
            raise ValueError("an equation file needs a_coeffs and b_coeffs")
        rhs = self.floats("rhs")
        if rhs is not None and not any(rhs):
            rhs = None
        init = self.floats("initial")
        initial = MomentVector(family, init, Provenance.EXTERNAL) if init else None
        return WeightOde(a, b, family, rhs, None), initial

    def simple(self, family: Family) -> tuple[SimpleFunction, bool]:
        br = self.floats("breakpoints")
        vals = self.floats("values")
        if br is None or vals is None:
            raise ValueError("a simple-function file needs breakpoints and values")
        return SimpleFunction(br, vals), self.flag("classical_weight", default=not family.bounded)


_KEYS = {"a_coeffs", "b_coeffs", "rhs", "initial", "breakpoints", "values", "classical_weight"}


def _float(token: str) -> float:
    t = token.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    return float(t)


def read_weight_file(path) -> WeightFile:
    """Lines ``key = value`` (``#`` starts a comment; blank lines ignored)."""
    entries: dict[str, str] = {}
    for num, line in enumerate(_lines(path), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{num}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ValueError(f"{path}:{num}: unknown key {key!r}")
        entries[key] = value
    return WeightFile(entries)
