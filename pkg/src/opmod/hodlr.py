"""Hierarchical off-diagonal low-rank (HODLR) matrices and their Cholesky factors.

A symmetric matrix is split at ceil(n/2) into two diagonal blocks, kept
recursively, and one off-diagonal block stored as a truncated SVD; the
lower block is its transpose. Off-diagonal blocks are compressed by a
randomized range finder that only needs products with contiguous
subblocks, so the Chebyshev Gram matrix can be compressed through its
fast Toeplitz-plus-Hankel products.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, NotPositiveDefinite, RankExceedsHalfBlock

__all__ = [
    "LowRankBlock",
    "Leaf",
    "Branch",
    "HodlrMatrix",
    "HodlrCholesky",
    "RankBound",
    "hodlr_compress",
    "hodlr_from_dense",
    "hodlr_cholesky",
    "hodlr_matvec",
    "hodlr_solve_triangular",
    "rank_report",
    "write_rank_report",
    "rank_bound",
    "tree_levels",
    "OVERSAMPLING",
    "POWER_ITERATIONS",
    "LEAF_SIZE",
]

OVERSAMPLING = 8
POWER_ITERATIONS = 2
LEAF_SIZE = 64
INITIAL_RANK = 16
PROBES = 10

BlockMatvec = Callable[[tuple[int, int], tuple[int, int], np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class LowRankBlock:
    """U diag(s) V^T with orthonormal U (m x r), V (n x r) and s nonincreasing."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    @classmethod
    def zero(cls, m: int, n: int) -> "LowRankBlock":
        return cls(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))

    @property
    def rank(self) -> int:
        return self.s.size

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.U @ (self.s[:, None] * (self.V.T @ _as2d(v))).reshape((self.rank,) + v.shape[1:])

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        return self.V @ (self.s[:, None] * (self.U.T @ _as2d(v))).reshape((self.rank,) + v.shape[1:])

    def dense(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.T


def _as2d(v: np.ndarray) -> np.ndarray:
    return v.reshape(v.shape[0], -1)


@dataclass(eq=False)
class Leaf:
    start: int
    data: np.ndarray

    @property
    def size(self) -> int:
        return self.data.shape[0]


@dataclass(eq=False)
class Branch:
    start: int
    size: int
    first: "Leaf | Branch"
    second: "Leaf | Branch"
    off: LowRankBlock


Node = Leaf | Branch


def _split(size: int) -> int:
    return (size + 1) // 2


def tree_levels(n: int, leaf_size: int = LEAF_SIZE) -> int:
    """Number of branch levels: ceil(log2(n / leaf_size)), at least 0."""
    return max(0, math.ceil(math.log2(n / leaf_size))) if n > leaf_size else 0


def _walk(node: Node, level: int = 1, index: int = 0) -> Iterator[tuple[int, int, Branch]]:
    if isinstance(node, Branch):
        yield level, index, node
        yield from _walk(node.first, level + 1, 2 * index)
        yield from _walk(node.second, level + 1, 2 * index + 1)


def _leaves(node: Node) -> Iterator[Leaf]:
    if isinstance(node, Leaf):
        yield node
    else:
        yield from _leaves(node.first)
        yield from _leaves(node.second)


class _Tree:
    root: Node
    n: int

    def blocks(self) -> Iterator[tuple[int, int, Branch]]:
        """(level, index, branch) in preorder; level 1 is the root split."""
        return _walk(self.root)

    def ranks(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for level, _, br in self.blocks():
            out.setdefault(level, []).append(br.off.rank)
        return out

    def max_rank(self) -> int:
        return max((br.off.rank for _, _, br in self.blocks()), default=0)


@dataclass(eq=False)
class HodlrMatrix(_Tree):
    """Symmetric HODLR matrix; ``scale`` is the reference norm used for truncation."""

    n: int
    root: Node
    tol: float
    scale: float
    leaf_size: int = LEAF_SIZE

    def dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for leaf in _leaves(self.root):
            sl = slice(leaf.start, leaf.start + leaf.size)
            A[sl, sl] = leaf.data
        for _, _, br in self.blocks():
            h = _split(br.size)
            r = slice(br.start, br.start + h)
            c = slice(br.start + h, br.start + br.size)
            A[r, c] = br.off.dense()
            A[c, r] = A[r, c].T
        return A

    def matvec(self, v) -> np.ndarray:
        return hodlr_matvec(self, v)


@dataclass(eq=False)
class HodlrCholesky(_Tree):
    """Upper-triangular HODLR factor R with A = R^T R.

    Leaves hold dense upper-triangular blocks; each branch holds the
    low-rank coupling R12 between its two diagonal factors.
    """

    n: int
    root: Node
    tol: float
    scale: float
    leaf_size: int = LEAF_SIZE

    def dense(self) -> np.ndarray:
        R = np.zeros((self.n, self.n))
        for leaf in _leaves(self.root):
            sl = slice(leaf.start, leaf.start + leaf.size)
            R[sl, sl] = leaf.data
        for _, _, br in self.blocks():
            h = _split(br.size)
            R[br.start : br.start + h, br.start + h : br.start + br.size] = br.off.dense()
        return R

    def diagonal(self) -> np.ndarray:
        return np.concatenate([np.diagonal(leaf.data) for leaf in _leaves(self.root)])

    def superdiagonal(self) -> np.ndarray:
        """R[k, k+1], read from leaves and the corner entries of coupling blocks."""
        out = np.empty(self.n - 1)

        def fill(node: Node):
            if isinstance(node, Leaf):
                m = node.size
                out[node.start : node.start + m - 1] = np.diagonal(node.data, 1)
                return
            h = _split(node.size)
            off = node.off
            out[node.start + h - 1] = float((off.U[-1] * off.s) @ off.V[0]) if off.rank else 0.0
            fill(node.first)
            fill(node.second)

        if self.n > 1:
            fill(self.root)
        return out

    def upper(self) -> np.ndarray:
        return self.dense()

    def matvec(self, v, transposed: bool = False) -> np.ndarray:
        return hodlr_matvec(self, v, transposed=transposed)

    def solve(self, b, transposed: bool = False) -> np.ndarray:
        return hodlr_solve_triangular(self, b, transposed=transposed)

    def apply_r(self, v) -> np.ndarray:
        return self.matvec(v)

    def apply_rt(self, v) -> np.ndarray:
        return self.matvec(v, transposed=True)

    def solve_r(self, v) -> np.ndarray:
        return self.solve(v)

    def solve_rt(self, v) -> np.ndarray:
        return self.solve(v, transposed=True)


# -- randomized compression ----------------------------------------------------------


def _rng(seed: int, level: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, level, index])))


def _orth(Y: np.ndarray) -> np.ndarray:
    return linalg.qr(Y, mode="economic", check_finite=False)[0]


def _sketch(apply, apply_t, m: int, n: int, k: int, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Range finder with power iterations; returns the SVD of Q Q^T B."""
    Q = _orth(apply(rng.standard_normal((n, k))))
    for _ in range(POWER_ITERATIONS):
        Q = _orth(apply(_orth(apply_t(Q))))
    Z = apply_t(Q)  # B^T Q, n x k
    Ub, s, Vt = linalg.svd(Z.T, full_matrices=False, check_finite=False)
    return Q @ Ub, s, Vt.T


def _compress_block(
    block_matvec: BlockMatvec,
    rows: tuple[int, int],
    cols: tuple[int, int],
    threshold: float | None,
    tol: float,
    rng: np.random.Generator,
    strict: bool = True,
) -> tuple[LowRankBlock, float]:
    """Adaptive randomized SVD of A[rows, cols].

    The sketch size doubles until at least OVERSAMPLING computed singular
    values fall below the threshold (or the block is exhausted) and a
    probe estimate of the residual passes. ``threshold=None`` means the
    threshold is tol times this block's own largest singular value.
    """
    m, n = rows[1] - rows[0], cols[1] - cols[0]
    full = min(m, n)
    apply = lambda V: block_matvec(rows, cols, V)
    apply_t = lambda V: block_matvec(cols, rows, V)
    k = min(INITIAL_RANK + OVERSAMPLING, full)
    while True:
        U, s, V = _sketch(apply, apply_t, m, n, k, rng)
        sigma = s[0] if s.size else 0.0
        cut = tol * sigma if threshold is None else threshold
        r = int(np.count_nonzero(s > cut))
        blk = LowRankBlock(U[:, :r], s[:r], V[:, :r])
        headroom = k - r >= OVERSAMPLING or k >= full
        if headroom:
            probe = rng.standard_normal((n, PROBES))
            resid = apply(probe) - blk.matvec(probe)
            est = float(np.max(np.linalg.norm(resid, axis=0)))
            if k >= full or est <= 10 * max(cut, np.finfo(float).tiny):
                break
        k = min(2 * k, full)
    if strict and r > full // 2 and full > 1:
        raise RankExceedsHalfBlock(m, n, r)
    return blk, sigma


def _norm_estimate(block_matvec: BlockMatvec, n: int, seed: int, iterations: int = 30) -> float:
    rng = _rng(seed, 0, -1 % (1 << 32))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = block_matvec((0, n), (0, n), v[:, None])[:, 0]
        est = float(np.linalg.norm(w))
        if est == 0:
            return 0.0
        v = w / est
    return est


def hodlr_compress(
    block_matvec: BlockMatvec,
    n: int,
    tol: float = 1e-12,
    leaf_size: int = LEAF_SIZE,
    seed: int = 0,
    *,
    block_dense: Callable[[tuple[int, int], tuple[int, int]], np.ndarray] | None = None,
    strict: bool = True,
) -> HodlrMatrix:
    """Compress a symmetric matrix given only products with contiguous blocks.

    Parameters
    ----------
    block_matvec : callable
        ``block_matvec((r0, r1), (c0, c1), V)`` returns A[r0:r1, c0:c1] @ V
        for a 2-d V. Transposed products use symmetry.
    tol : float
        Singular values at or below tol * sigma_1(root off-diagonal block)
        are discarded in every block.
    seed : int
        Each block draws its test matrices from Philox seeded by
        (seed, level, block index), so results do not depend on traversal
        order.
    block_dense : callable, optional
        Dense extraction of diagonal leaves; defaults to products with the
        identity.
    strict : bool
        Raise when a block needs more than half its smaller dimension.
        Rank reports pass False to record such blocks instead.

    Raises
    ------
    RankExceedsHalfBlock
        A block needed more than half its smaller dimension.
    """
    if n < 1:
        raise DimensionMismatch("n must be positive")
    if not (0 < tol < 1):
        raise ValueError("tol must lie in (0, 1)")
    if block_dense is None:
        block_dense = lambda rows, cols: block_matvec(rows, cols, np.eye(cols[1] - cols[0]))

    scale = 0.0
    if n > leaf_size:
        h = _split(n)
        root_off, scale = _compress_block(block_matvec, (0, h), (h, n), None, tol, _rng(seed, 1, 0), strict)
        if scale == 0.0:
            scale = _norm_estimate(block_matvec, n, seed)
    threshold = tol * scale

    def build(start: int, size: int, level: int, index: int) -> Node:
        if size <= leaf_size:
            sl = (start, start + size)
            D = np.array(block_dense(sl, sl), dtype=float)
            return Leaf(start, (D + D.T) / 2)
        h = _split(size)
        rows, cols = (start, start + h), (start + h, start + size)
        if level == 1:
            off = root_off
            if off.rank and off.s[-1] <= threshold:
                keep = int(np.count_nonzero(off.s > threshold))
                off = LowRankBlock(off.U[:, :keep], off.s[:keep], off.V[:, :keep])
        else:
            off, _ = _compress_block(block_matvec, rows, cols, threshold, tol, _rng(seed, level, index), strict)
        return Branch(
            start,
            size,
            build(start, h, level + 1, 2 * index),
            build(start + h, size - h, level + 1, 2 * index + 1),
            off,
        )

    return HodlrMatrix(n, build(0, n, 1, 0), tol, scale, leaf_size)


def hodlr_from_dense(
    A: np.ndarray, tol: float = 1e-12, leaf_size: int = LEAF_SIZE, seed: int = 0, *, strict: bool = True
) -> HodlrMatrix:
    """Compress a dense symmetric array through the block-product oracle (O(n^2))."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("A must be square")
    oracle = lambda rows, cols, V: A[rows[0] : rows[1], cols[0] : cols[1]] @ V
    dense = lambda rows, cols: A[rows[0] : rows[1], cols[0] : cols[1]]
    return hodlr_compress(oracle, A.shape[0], tol, leaf_size, seed, block_dense=dense, strict=strict)


# -- products and solves -------------------------------------------------------------


def _matvec_sym(node: Node, v: np.ndarray) -> np.ndarray:
    if isinstance(node, Leaf):
        return node.data @ v
    h = _split(node.size)
    v1, v2 = v[:h], v[h:]
    return np.concatenate(
        [
            _matvec_sym(node.first, v1) + node.off.matvec(v2),
            _matvec_sym(node.second, v2) + node.off.rmatvec(v1),
        ]
    )


def _matvec_upper(node: Node, v: np.ndarray, transposed: bool) -> np.ndarray:
    if isinstance(node, Leaf):
        return (node.data.T if transposed else node.data) @ v
    h = _split(node.size)
    v1, v2 = v[:h], v[h:]
    if transposed:
        return np.concatenate(
            [_matvec_upper(node.first, v1, True), node.off.rmatvec(v1) + _matvec_upper(node.second, v2, True)]
        )
    return np.concatenate(
        [_matvec_upper(node.first, v1, False) + node.off.matvec(v2), _matvec_upper(node.second, v2, False)]
    )


def hodlr_matvec(A: HodlrMatrix | HodlrCholesky, v, transposed: bool = False) -> np.ndarray:
    """A v for a compressed symmetric matrix, or R v (R^T v) for a factor."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != A.n:
        raise DimensionMismatch(f"vector of length {v.shape[0]} for size {A.n}")
    if isinstance(A, HodlrCholesky):
        return _matvec_upper(A.root, v, transposed)
    return _matvec_sym(A.root, v)


def _solve(node: Node, b: np.ndarray, transposed: bool) -> np.ndarray:
    if isinstance(node, Leaf):
        return linalg.solve_triangular(node.data, b, lower=False, trans="T" if transposed else "N", check_finite=False)
    h = _split(node.size)
    b1, b2 = b[:h], b[h:]
    if transposed:  # [R11^T 0; R12^T R22^T] x = b
        x1 = _solve(node.first, b1, True)
        x2 = _solve(node.second, b2 - node.off.rmatvec(x1), True)
    else:  # [R11 R12; 0 R22] x = b
        x2 = _solve(node.second, b2, False)
        x1 = _solve(node.first, b1 - node.off.matvec(x2), False)
    return np.concatenate([x1, x2])


def hodlr_solve_triangular(R: HodlrCholesky, b, transposed: bool = False) -> np.ndarray:
    """Solve R x = b, or R^T x = b with ``transposed``, by block substitution."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != R.n:
        raise DimensionMismatch(f"right-hand side of length {b.shape[0]} for size {R.n}")
    return _solve(R.root, b, transposed)


# -- factorization ------------------------------------------------------------------


def _truncate(U: np.ndarray, s: np.ndarray, V: np.ndarray, threshold: float) -> LowRankBlock:
    """Best representation of U diag(s) V^T keeping singular values > threshold."""
    m, n = U.shape[0], V.shape[0]
    if s.size == 0:
        return LowRankBlock.zero(m, n)
    Qu, Ru = linalg.qr(U, mode="economic", check_finite=False)
    Qv, Rv = linalg.qr(V, mode="economic", check_finite=False)
    a, sig, bt = linalg.svd((Ru * s) @ Rv.T, full_matrices=False, check_finite=False)
    r = int(np.count_nonzero(sig > threshold))
    return LowRankBlock(Qu @ a[:, :r], sig[:r], Qv @ bt[:r].T)


def _subtract_gram(node: Node, Y: np.ndarray, threshold: float) -> Node:
    """node - Y Y^T, recompressing every touched off-diagonal block."""
    if Y.shape[1] == 0:
        return node
    if isinstance(node, Leaf):
        return Leaf(node.start, node.data - Y @ Y.T)
    h = _split(node.size)
    Y1, Y2 = Y[:h], Y[h:]
    off = node.off
    U = np.hstack([off.U, Y1])
    V = np.hstack([off.V, Y2])
    s = np.concatenate([off.s, -np.ones(Y.shape[1])])
    return Branch(
        node.start,
        node.size,
        _subtract_gram(node.first, Y1, threshold),
        _subtract_gram(node.second, Y2, threshold),
        _truncate(U, s, V, threshold),
    )


def hodlr_cholesky(
    A: HodlrMatrix,
    *,
    on_downdate: Callable[[int, int, Node], None] | None = None,
) -> HodlrCholesky:
    """Recursive Cholesky A = R^T R of a symmetric positive-definite HODLR matrix.

    For each branch: factor A11 = R11^T R11, form R12 = R11^{-T} A12 (low rank,
    recompressed), downdate A22 <- A22 - R12^T R12 with recompression of every
    block it touches, then factor A22. Truncation drops only the smallest
    singular values of R12, so the downdated block stays at least as positive
    definite as the exact downdate.

    ``on_downdate(level, start, node)`` is called with each downdated A22
    before it is factored.

    Raises
    ------
    NotPositiveDefinite
        A dense leaf lost positive definiteness.
    """
    tol = A.tol
    scale = A.scale if A.scale > 0 else 1.0
    # R12 carries sqrt(A) scale: an error e in R12 perturbs R^T R by about ||R11|| e
    thr_factor = tol * math.sqrt(scale)
    thr_matrix = tol * scale

    def factor(node: Node, level: int) -> Node:
        if isinstance(node, Leaf):
            try:
                Rl = linalg.cholesky(node.data, lower=False, check_finite=False)
            except linalg.LinAlgError:
                raise NotPositiveDefinite(node.start, where=f"leaf at {node.start}") from None
            return Leaf(node.start, Rl)
        R11 = factor(node.first, level + 1)
        off = node.off
        h = _split(node.size)
        if off.rank:
            Ut = _solve(R11, off.U, True)  # R11^{-T} U
            R12 = _truncate(Ut, off.s, off.V, thr_factor)
        else:
            R12 = LowRankBlock.zero(h, node.size - h)
        A22 = _subtract_gram(node.second, R12.V * R12.s, thr_matrix)
        if on_downdate is not None:
            on_downdate(level, node.start + h, A22)
        R22 = factor(A22, level + 1)
        return Branch(node.start, node.size, R11, R22, R12)

    return HodlrCholesky(A.n, factor(A.root, 1), tol, scale, A.leaf_size)


# -- reports and bounds --------------------------------------------------------------


def rank_report(A: HodlrMatrix | HodlrCholesky) -> list[tuple[int, int, int, int, int, int]]:
    """Rows (level, block_row, block_col, rows, cols, rank) for every off-diagonal block.

    At level l the matrix is partitioned into 2^l block rows; the block of a
    branch with index i sits at (2i, 2i+1). Symmetric matrices store it once.
    """
    rows = []
    for level, index, br in A.blocks():
        m, n = br.off.shape
        rows.append((level, 2 * index, 2 * index + 1, m, n, br.off.rank))
    return rows


def write_rank_report(path_or_file, A: HodlrMatrix | HodlrCholesky, label: str | None = None):
    """CSV ``level,block_row,block_col,rows,cols,rank`` (optional leading ``matrix`` column)."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(f, lineterminator="\n")
        head = ["level", "block_row", "block_col", "rows", "cols", "rank"]
        w.writerow((["matrix"] if label is not None else []) + head)
        for row in rank_report(A):
            w.writerow(([label] if label is not None else []) + list(row))
    finally:
        if own:
            f.close()


@dataclass(frozen=True)
class RankBound:
    """Closed-form rank estimate for blocks of a Gram matrix with algebraic moments.

    ``valid`` is False when the per-term ratio is at least 1 or the value is
    not positive; the formula then says nothing and measured ranks apply.
    """

    value: float
    z: float
    ratio: float
    s: int
    valid: bool = field(default=False)


def rank_bound(alpha: float, eps: float, n: int) -> RankBound:
    """r = log(eps/2 ((s-1)(1-z)^2/(4z))^alpha) / log(2 alpha e z/(1-z)), s = floor(n/2).

    z(s) = (s-1)/(s+1+2 sqrt(s)). The raw value is returned whatever its sign.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if n < 4:
        raise ValueError("n must be at least 4")
    s = n // 2
    z = (s - 1) / (s + 1 + 2 * math.sqrt(s))
    ratio = 2 * alpha * math.e * z / (1 - z)
    num = math.log(eps / 2) + alpha * math.log((s - 1) * (1 - z) ** 2 / (4 * z))
    den = math.log(ratio)
    value = num / den if den != 0 else math.inf
    return RankBound(value, z, ratio, s, valid=bool(ratio < 1 and value > 0))
