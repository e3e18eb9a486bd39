"""Command-line front end: ``opmod <moments|factor|bench|rankmap|transform>``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .connection import (
    Backend,
    ConnectionProblem,
    band_limit,
    connection_coefficients,
    convert_to_known,
    convert_to_modified,
    gram_section,
    modified_jacobi,
    select_backend,
)
from .displacement import (
    FactorStorage,
    TriangularFactor,
    build_generators,
    cholesky_dense_reference,
    fast_cholesky,
    generators_from_columns,
)
from .errors import NumericalFailure, OpmodError
from .families import Family, Kind, multiplication_matrix
from .gram import (
    ChebyshevGramOperator,
    chebyshev_gram,
    chebyshev_gram_columns,
    gram_banded_from_moments,
    gram_from_moments,
)
from .hodlr import hodlr_cholesky, hodlr_compress, hodlr_from_dense, write_rank_report
from .io import write_factor_band, write_factor_csv, write_jacobi, write_moments, read_weight_file
from .moments import (
    MomentVector,
    moment_errors,
    moments_from_ode,
    moments_simple_function,
    moments_weighted_simple_function,
)
from .presets import Preset, preset
from .quadrature import quadrature_moments

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

ALGOS = ("fill", "fill-banded", "displacement", "displacement-banded", "dense-cholesky", "banded-cholesky", "hodlr")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    family: Family
    source: Preset | None
    moments_fn: object
    n: int
    m: int | None
    tol: float
    backend: Backend | None
    seed: int | None
    out: str | None
    check_quadrature: bool
    sizes: tuple[int, ...]
    algos: tuple[str, ...]
    repeat: int

    def moments(self, m: int) -> MomentVector:
        return self.moments_fn(m)

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("--seed is required for the hierarchical backend")
        return self.seed


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", help="chebyshev-t, chebyshev-u, legendre, jacobi(a,b), laguerre(a)")
    src = common.add_mutually_exclusive_group()
    src.add_argument("--weight", help="preset, e.g. log-chebyshev or 'jacobi 0.5 -0.5'")
    src.add_argument("--ode", metavar="FILE", help="key=value file with a_coeffs, b_coeffs, rhs, initial")
    src.add_argument("--simple", metavar="FILE", help="key=value file with breakpoints, values")
    common.add_argument("--n", type=int, default=256, help="section size")
    common.add_argument("--m", type=int, help="number of moments (moments command)")
    common.add_argument("--tol", type=float, default=1e-12, help="HODLR truncation tolerance")
    common.add_argument("--backend", choices=["auto"] + [b.value for b in Backend], default="auto")
    common.add_argument("--seed", type=int, help="seed for randomized compression")
    common.add_argument("--out", help="output path (stdout when omitted, where applicable)")
    common.add_argument("--check-quadrature", action="store_true", help="add relative error vs quadrature")
    common.add_argument("--sizes", help="comma-separated n for bench, e.g. 1024,2048,4096")
    common.add_argument("--algos", help=f"comma-separated subset of {','.join(ALGOS)}")
    common.add_argument("--repeat", type=int, default=3, help="bench: best of this many runs")
    p = argparse.ArgumentParser(prog="opmod", description="Modified orthogonal polynomials from moments.")
    p.add_argument("--version", action="version", version=f"opmod {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("moments", parents=[common], help="write n,mu CSV")
    sub.add_parser("factor", parents=[common], help="factor the Gram section and report the residual")
    sub.add_parser("bench", parents=[common], help="timing sweep as n,algo,seconds CSV")
    sub.add_parser("rankmap", parents=[common], help="HODLR block ranks of W and its factor")
    sub.add_parser("transform", parents=[common], help="coefficient roundtrip P -> Q -> P")
    return p


def _config(args) -> RunConfig:
    source = None
    if args.weight:
        source = preset(args.weight)
        family = Family.parse(args.family) if args.family else source.family
        if family != source.family:
            raise ConfigError(f"preset {source.name!r} is defined for {source.family}, not {family}")
        moments_fn = source.moments
    elif args.ode or args.simple:
        if not args.family:
            raise ConfigError("--family is required with --ode or --simple")
        family = Family.parse(args.family)
        wf = read_weight_file(args.ode or args.simple)
        if args.ode:
            ode, initial = wf.ode(family)
            if initial is None:
                raise ConfigError("the equation file needs an 'initial' key with leading moments")
            moments_fn = lambda m: moments_from_ode(ode, initial, m)
        else:
            s, weighted = wf.simple(family)
            fn = moments_weighted_simple_function if weighted else moments_simple_function
            moments_fn = lambda m: fn(s, family, m)
    else:
        raise ConfigError("one of --weight, --ode or --simple is required")
    if args.n < 2:
        raise ConfigError("--n must be at least 2")
    if not 0 < args.tol < 1:
        raise ConfigError("--tol must lie in (0, 1)")
    if args.check_quadrature and source is None:
        raise ConfigError("--check-quadrature needs a preset weight")
    sizes = tuple(int(v) for v in args.sizes.split(",")) if args.sizes else (args.n,)
    if any(v < 2 for v in sizes):
        raise ConfigError("bench sizes must be at least 2")
    algos = tuple(a.strip() for a in args.algos.split(",")) if args.algos else ()
    bad = [a for a in algos if a not in ALGOS]
    if bad:
        raise ConfigError(f"unknown algorithm(s) {bad}; choose from {ALGOS}")
    return RunConfig(
        args.command,
        family,
        source,
        moments_fn,
        args.n,
        args.m,
        args.tol,
        None if args.backend == "auto" else Backend(args.backend),
        args.seed,
        args.out,
        args.check_quadrature,
        sizes,
        algos,
        max(1, args.repeat),
    )


def _gram_moments(cfg: RunConfig, n: int) -> MomentVector:
    return cfg.moments(2 * n + 2)


def _problem(cfg: RunConfig, n: int, backend: Backend | None = None) -> ConnectionProblem:
    p = ConnectionProblem(cfg.family, _gram_moments(cfg, n), n, backend or cfg.backend, cfg.tol, cfg.seed or 0)
    if select_backend(p) is Backend.HODLR_CHOLESKY:
        cfg.require_seed()
    return p


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# -- commands ---------------------------------------------------------------------------


def cmd_moments(cfg: RunConfig) -> int:
    m = cfg.m or 2 * cfg.n - 1
    mu = cfg.moments(m)
    check = None
    if cfg.check_quadrature:
        src = cfg.source
        ref = quadrature_moments(src.weight, cfg.family, m, src.breakpoints)
        check = moment_errors(mu.values, ref)
    write_moments(cfg.out or sys.stdout, mu, check)
    return EXIT_OK


def _dense_l(R) -> np.ndarray:
    return R.upper().T if not isinstance(R, TriangularFactor) else R.dense()


def cmd_factor(cfg: RunConfig) -> int:
    p = _problem(cfg, cfg.n)
    timings: dict = {}
    R = connection_coefficients(p, timings)
    W = gram_section(p).dense()
    L = _dense_l(R)
    res = float(np.linalg.norm(W - L @ L.T) / np.linalg.norm(W))
    if cfg.out:
        if isinstance(R, TriangularFactor):
            (write_factor_band if cfg.out.endswith(".bin") else write_factor_csv)(cfg.out, R)
        else:
            write_factor_csv(cfg.out, TriangularFactor(R.n, FactorStorage.DENSE, np.asfortranarray(L)))
    sys.stdout.write("n,fill_seconds,factor_seconds,rel_frobenius_residual\n")
    sys.stdout.write(f"{cfg.n},{timings['fill']:.6g},{timings['factor']:.6g},{res:.6e}\n")
    return EXIT_OK


def _best(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


_WARM: set[tuple[str, str]] = set()


def bench_times(cfg: RunConfig, n: int, algos) -> dict[str, float]:
    """Best-of-``repeat`` seconds for each algorithm at size n.

    Each algorithm is first run once untimed at a small size, so compiled
    kernels are loaded before the clock starts.
    """
    cold = [a for a in algos if (a, str(cfg.family)) not in _WARM]
    if cold and n > 64:
        _WARM.update((a, str(cfg.family)) for a in cold)
        bench_times(RunConfig(**{**cfg.__dict__, "repeat": 1}), 64, cold)
    mu = _gram_moments(cfg, n)
    X = multiplication_matrix(cfg.family, 2 * n + 2)
    b = band_limit(mu)
    out = {}
    for algo in algos:
        if algo == "fill":
            out[algo] = _best(lambda: gram_from_moments(mu, n, X), cfg.repeat)
        elif algo == "fill-banded":
            out[algo] = _best(lambda: gram_banded_from_moments(mu, n, X=X), cfg.repeat)
        elif algo == "displacement":
            if cfg.family.kind is Kind.CHEBYSHEV_T:
                cols = chebyshev_gram_columns(mu, n, [0, n - 2, n - 1])
                first, g = cols[:, 0], generators_from_columns(cols[:, 1], cols[:, 2], X)
            else:
                W = gram_from_moments(mu, n, X)
                first, g = W.column(0), build_generators(W, X)
                del W
            out[algo] = _best(lambda: fast_cholesky(first, X, g), cfg.repeat)
        elif algo == "displacement-banded":
            Wb = gram_banded_from_moments(mu, n, X=X)
            g = build_generators(Wb, X)
            out[algo] = _best(lambda: fast_cholesky(Wb.column(0), X, g, bandwidth=Wb.bandwidth), cfg.repeat)
        elif algo == "dense-cholesky":
            W = chebyshev_gram(mu, n) if cfg.family.kind is Kind.CHEBYSHEV_T else gram_from_moments(mu, n, X).dense()
            out[algo] = _best(lambda: cholesky_dense_reference(W), cfg.repeat)
            del W
        elif algo == "banded-cholesky":
            Wb = gram_banded_from_moments(mu, n, X=X)
            out[algo] = _best(lambda: cholesky_dense_reference(Wb), cfg.repeat)
        elif algo == "hodlr":
            p = ConnectionProblem(cfg.family, mu, n, Backend.HODLR_CHOLESKY, cfg.tol, cfg.require_seed())
            out[algo] = _best(lambda: connection_coefficients(p), cfg.repeat)
    return out


def cmd_bench(cfg: RunConfig) -> int:
    algos = cfg.algos
    if not algos:
        banded = band_limit(_gram_moments(cfg, max(cfg.sizes))) is not None
        algos = ("fill-banded", "displacement-banded", "banded-cholesky") if banded else ("fill", "displacement", "dense-cholesky")
    lines = ["n,algo,seconds\n"]
    for n in cfg.sizes:
        for algo, sec in bench_times(cfg, n, algos).items():
            lines.append(f"{n},{algo},{sec:.6g}\n")
    _emit(cfg, "".join(lines))
    return EXIT_OK


def cmd_rankmap(cfg: RunConfig) -> int:
    seed = cfg.require_seed()
    n = cfg.n
    mu = _gram_moments(cfg, n)
    if cfg.family.kind is Kind.CHEBYSHEV_T:
        op = ChebyshevGramOperator(mu)
        H = hodlr_compress(lambda r, c, V: op.matvec(V, r, c), n, cfg.tol, seed=seed, block_dense=op.block, strict=False)
    else:
        p = ConnectionProblem(cfg.family, mu, n)
        H = hodlr_from_dense(gram_section(p).dense(), cfg.tol, seed=seed, strict=False)
    R = hodlr_cholesky(H)
    buf = io.StringIO()
    write_rank_report(buf, H, label="gram")
    body = buf.getvalue()
    buf2 = io.StringIO()
    write_rank_report(buf2, R, label="factor")
    body += "".join(buf2.getvalue().splitlines(keepends=True)[1:])
    _emit(cfg, body)
    return EXIT_OK


def cmd_transform(cfg: RunConfig) -> int:
    p = _problem(cfg, cfg.n)
    t = time.perf_counter()
    R = connection_coefficients(p)
    rng = np.random.Generator(np.random.Philox(cfg.seed or 0))
    v = rng.standard_normal(cfg.n)
    back = convert_to_known(R, convert_to_modified(R, v))
    sec = time.perf_counter() - t
    e2 = float(np.linalg.norm(back - v) / np.linalg.norm(v))
    einf = float(np.abs(back - v).max() / np.abs(v).max())
    if cfg.out:
        XQ = modified_jacobi(R, multiplication_matrix(cfg.family, cfg.n), dense=False)
        write_jacobi(cfg.out, XQ.section.dense())
    sys.stdout.write("n,backend,rel_err_2,rel_err_inf,seconds\n")
    sys.stdout.write(f"{cfg.n},{select_backend(p).value},{e2:.6e},{einf:.6e},{sec:.6g}\n")
    return EXIT_OK


COMMANDS = {
    "moments": cmd_moments,
    "factor": cmd_factor,
    "bench": cmd_bench,
    "rankmap": cmd_rankmap,
    "transform": cmd_transform,
}


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[cfg.command](cfg)
    except NumericalFailure as exc:
        print(f"opmod: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, OpmodError, ValueError, OSError) as exc:
        print(f"opmod: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
