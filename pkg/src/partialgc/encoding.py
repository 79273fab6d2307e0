"""Encoding-coefficient agreement, gradient encoding and parameter-server decoding.

Layout conventions used throughout this module:

* ``psi`` is the global state, ``psi[j]`` chunks processed by worker j.
* ``mask`` is an m x (N*ell) boolean matrix; block-column i occupies columns
  ``i*ell : (i+1)*ell`` and row j of that block is free iff worker j has
  processed chunk i.
* ``b`` is the m x (N*ell) coefficient matrix with zeros off the mask.
* ``r`` is the ell x m compression matrix shared by every worker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import AssignmentMatrix
from .errors import InconsistentStateError, InvalidParameterError, UndefinedConditionError
from .ordering import OrderingMatrix

RCOND = 1e-12


def min_norm_least_squares(x, y, rcond: float = RCOND) -> np.ndarray:
    """Minimum-norm minimiser of ||x @ v - y||_2 via the SVD pseudo-inverse.

    Singular values below ``rcond * sigma_max`` are treated as zero. Accepts
    stacked problems: ``x`` of shape (..., p, q) with ``y`` of shape (..., p)
    or (..., p, k).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    vector_rhs = y.ndim == x.ndim - 1
    if vector_rhs:
        y = y[..., None]
    if x.shape[-1] == 0 or x.shape[-2] == 0:
        out = np.zeros(x.shape[:-2] + (x.shape[-1], y.shape[-1]))
        return out[..., 0] if vector_rhs else out
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    cutoff = rcond * s[..., :1]
    keep = s > cutoff
    inv_s = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    coeffs = (np.swapaxes(u, -1, -2) @ y) * inv_s[..., None]
    out = np.swapaxes(vt, -1, -2) @ coeffs
    return out[..., 0] if vector_rhs else out


def condition_number(x) -> float:
    """sigma_max / sigma_min over the nonzero singular values."""
    s = np.linalg.svd(np.atleast_2d(np.asarray(x, dtype=float)), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise UndefinedConditionError("condition number of a zero matrix is undefined")
    nz = s[s > RCOND * s[0]]
    return float(nz[0] / nz[-1])


def compression_matrix(ell: int, m: int, seed) -> np.ndarray:
    """ell x m matrix of i.i.d. N(0, 1) entries.

    Drawn with numpy's PCG64 generator and its ziggurat normal sampler, so a
    given seed reproduces the matrix bit for bit.
    """
    if ell < 1 or m < 1:
        raise InvalidParameterError("ell and m must be positive")
    return np.random.default_rng(seed).standard_normal((ell, m))


def target_basis(n_chunks: int, ell: int) -> np.ndarray:
    """ell x (N*ell) matrix whose k-th row is the N-fold repetition of e_k."""
    return np.tile(np.eye(ell), (1, n_chunks))


def check_state(a: AssignmentMatrix, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.int64)
    if psi.shape != (a.n_workers,):
        raise InconsistentStateError(f"state has length {psi.size}, expected {a.n_workers}")
    if np.any(psi < 0):
        raise InconsistentStateError("state entries must be nonnegative")
    over = np.flatnonzero(psi > a.load)
    if over.size:
        j = int(over[0])
        raise InconsistentStateError(
            f"worker {j + 1} reports {int(psi[j])} processed chunks but holds {int(a.load[j])}")
    return psi


def processed_holders(a: AssignmentMatrix, o: OrderingMatrix, psi) -> list[list[int]]:
    """For every chunk, the ascending list of workers that have processed it."""
    psi = check_state(a, psi)
    out: list[list[int]] = [[] for _ in range(a.n_chunks)]
    for j, seq in enumerate(o.sequence):
        for i in seq[:psi[j]]:
            out[i].append(j)
    return out


def coverage(a: AssignmentMatrix, o: OrderingMatrix, psi) -> np.ndarray:
    """Number of processed copies of each chunk."""
    return np.array([len(h) for h in processed_holders(a, o, psi)], dtype=np.int64)


def build_indeterminate_mask(a: AssignmentMatrix, o: OrderingMatrix, psi, ell: int) -> np.ndarray:
    if ell < 1:
        raise InvalidParameterError("ell must be positive")
    mask = np.zeros((a.n_workers, a.n_chunks * ell), dtype=bool)
    for i, workers in enumerate(processed_holders(a, o, psi)):
        mask[workers, i * ell:(i + 1) * ell] = True
    return mask


def mask_holders(mask: np.ndarray, ell: int) -> list[np.ndarray]:
    """Workers with free entries in each block-column of `mask`."""
    n = mask.shape[1] // ell
    return [np.flatnonzero(mask[:, i * ell]) for i in range(n)]


def solve_block(r: np.ndarray, workers) -> np.ndarray:
    """Coefficients of one block-column for the given processing workers.

    Returns a len(workers) x ell array: column k is the minimum-norm
    least-squares solution of ``r[:, workers] @ v = e_k``.
    """
    ell = r.shape[0]
    workers = np.asarray(workers, dtype=np.int64)
    if workers.size == 0:
        return np.zeros((0, ell))
    return min_norm_least_squares(r[:, workers], np.eye(ell))


def solve_worker_coefficients(j: int, r: np.ndarray, mask: np.ndarray) -> dict[int, np.ndarray]:
    """Everything worker `j` solves on its own after the encode-and-transmit signal.

    Returns ``{chunk: block}`` for every block-column j has free entries in,
    where ``block`` is the full m x ell block (all workers' coefficients).
    Blocks are solved in ascending chunk order.
    """
    ell, m = r.shape
    if mask.shape[0] != m or mask.shape[1] % ell:
        raise InvalidParameterError("mask shape does not match the compression matrix")
    out = {}
    for i in np.flatnonzero(mask[j, ::ell]):
        workers = np.flatnonzero(mask[:, i * ell])
        block = np.zeros((m, ell))
        block[workers] = solve_block(r, workers)
        out[int(i)] = block
    return out


def worker_row(j: int, blocks: dict[int, np.ndarray], n_chunks: int, ell: int) -> np.ndarray:
    """Row j of B assembled from a worker's solved blocks (its encoding vector)."""
    eps = np.zeros(n_chunks * ell)
    for i, block in blocks.items():
        eps[i * ell:(i + 1) * ell] = block[j]
    return eps


def solve_encoding(r: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Full coefficient matrix B, every block solved once in ascending order."""
    ell, m = r.shape
    b = np.zeros(mask.shape)
    for i, workers in enumerate(mask_holders(mask, ell)):
        if workers.size:
            b[workers, i * ell:(i + 1) * ell] = solve_block(r, workers)
    return b


def residual_error(r: np.ndarray, b: np.ndarray, ell: int, n: int) -> float:
    """||(1_N^T kron I_ell) - R B||_F^2."""
    diff = target_basis(n, ell) - r @ b
    return float(np.sum(diff * diff))


def theoretical_error(cov, ell: int) -> int:
    cov = np.asarray(cov, dtype=np.int64)
    return int(np.maximum(0, ell - cov).sum())


def block_residuals(r: np.ndarray, holders) -> np.ndarray:
    """Per-chunk least-squares residual ||I_ell - R_S R_S^+||_F^2, batched by block size.

    Equivalent to summing the columns of ``residual_error`` block by block,
    without materialising B.
    """
    ell = r.shape[0]
    out = np.empty(len(holders))
    by_size: dict[int, list[int]] = {}
    for i, h in enumerate(holders):
        by_size.setdefault(len(h), []).append(i)
    eye = np.eye(ell)
    for size, chunks in by_size.items():
        if size == 0:
            out[chunks] = float(ell)
            continue
        idx = np.array([holders[i] for i in chunks], dtype=np.int64)
        x = np.moveaxis(r[:, idx], 0, 1)  # (k, ell, size)
        coef = min_norm_least_squares(x, np.broadcast_to(eye, (len(chunks), ell, ell)))
        diff = eye - x @ coef
        out[chunks] = np.sum(diff * diff, axis=(1, 2))
    return out


@dataclass(frozen=True)
class GradientSet:
    """Per-chunk gradients split into ell equal parts (the last zero-padded)."""
    parts: np.ndarray  # (N, ell, part_len)
    dim: int

    @classmethod
    def split(cls, grads, ell: int) -> "GradientSet":
        grads = np.asarray(grads, dtype=float)
        if grads.ndim != 2:
            raise InvalidParameterError("gradients must be an N x d array")
        if ell < 1:
            raise InvalidParameterError("ell must be positive")
        n, d = grads.shape
        part_len = -(-d // ell)
        padded = np.zeros((n, ell * part_len))
        padded[:, :d] = grads
        return cls(padded.reshape(n, ell, part_len), d)

    @property
    def ell(self) -> int:
        return self.parts.shape[1]

    @property
    def n_chunks(self) -> int:
        return self.parts.shape[0]

    def total(self) -> np.ndarray:
        return self.parts.sum(axis=0).reshape(-1)[:self.dim]


def encode_gradient(j: int, eps, grads: GradientSet) -> np.ndarray:
    """Worker j's transmitted vector: sum over chunks i and parts k of eps[i*ell+k] * g_i[k]."""
    eps = np.asarray(eps, dtype=float)
    n, ell, part_len = grads.parts.shape
    if eps.shape != (n * ell,):
        raise InvalidParameterError(f"worker {j + 1}: coefficient row has shape {eps.shape}, expected {(n * ell,)}")
    return eps @ grads.parts.reshape(n * ell, part_len)


def decode(r: np.ndarray, encoded) -> np.ndarray:
    """PS combination: output row k is sum_j r[k, j] * encoded[j].

    `encoded` is an m x part_len array, or a length-m sequence where None marks a
    worker that sent nothing.
    """
    ell, m = r.shape
    if isinstance(encoded, np.ndarray):
        msgs = encoded
    else:
        if len(encoded) != m:
            raise InvalidParameterError(f"expected {m} messages, got {len(encoded)}")
        lengths = {len(v) for v in encoded if v is not None}
        if len(lengths) > 1:
            raise InvalidParameterError("encoded vectors differ in length")
        part_len = lengths.pop() if lengths else 0
        msgs = np.zeros((m, part_len))
        for j, v in enumerate(encoded):
            if v is not None:
                msgs[j] = v
    if msgs.shape[0] != m:
        raise InvalidParameterError(f"expected {m} messages, got {msgs.shape[0]}")
    return r @ msgs


def reassemble(decoded: np.ndarray, dim: int) -> np.ndarray:
    """Concatenate the ell decoded parts and strip padding."""
    return np.asarray(decoded).reshape(-1)[:dim]


def format_matrix(x) -> str:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return "\n".join(" ".join(f"{v:.16e}" for v in row) for row in x) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = [[float(v) for v in ln.split()] for ln in text.splitlines() if ln.strip()]
    return np.array(rows, dtype=float)


def format_int_vector(v) -> str:
    return " ".join(str(int(x)) for x in v)


def parse_int_vector(text: str) -> np.ndarray:
    return np.array([int(t) for t in text.split()], dtype=np.int64)
