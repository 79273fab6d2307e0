"""Processing order of chunks inside each worker.

An ordering is kept as, for every worker, the sequence of its chunks in the
order they are processed; the rank O[i, j] of chunk i at worker j is its
1-based position in that sequence.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .assignment import AssignmentMatrix
from .errors import InvalidParameterError, UnsupportedAssignmentError


@dataclass(frozen=True)
class OrderingMatrix:
    n_chunks: int
    n_workers: int
    sequence: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seq = tuple(tuple(int(i) for i in s) for s in self.sequence)
        object.__setattr__(self, "sequence", seq)
        if len(seq) != self.n_workers:
            raise InvalidParameterError(f"expected {self.n_workers} worker sequences, got {len(seq)}")
        for j, chunks in enumerate(seq):
            if len(set(chunks)) != len(chunks):
                raise InvalidParameterError(f"worker {j + 1} ranks a chunk twice")
            if any(not 0 <= i < self.n_chunks for i in chunks):
                raise InvalidParameterError(f"worker {j + 1} ranks a chunk outside [1, {self.n_chunks}]")

    def rank_matrix(self) -> np.ndarray:
        """Dense N x m matrix O with 0 off the support."""
        o = np.zeros((self.n_chunks, self.n_workers), dtype=np.int64)
        for j, chunks in enumerate(self.sequence):
            for r, i in enumerate(chunks, 1):
                o[i, j] = r
        return o

    def check_against(self, a: AssignmentMatrix) -> None:
        if (a.n_chunks, a.n_workers) != (self.n_chunks, self.n_workers):
            raise InvalidParameterError("ordering and assignment shapes differ")
        for j, (chunks, held) in enumerate(zip(self.sequence, a.support)):
            if set(chunks) != set(held):
                raise InvalidParameterError(f"worker {j + 1}: ordering does not cover its support exactly")

    @classmethod
    def from_assignment(cls, a: AssignmentMatrix) -> "OrderingMatrix":
        """Process each worker's chunks in the order the assignment lists them."""
        return cls(a.n_chunks, a.n_workers, a.support)

    @classmethod
    def from_rank_matrix(cls, o) -> "OrderingMatrix":
        o = np.asarray(o)
        seq = []
        for j in range(o.shape[1]):
            rows = np.flatnonzero(o[:, j])
            ranks = o[rows, j]
            if sorted(ranks.tolist()) != list(range(1, len(rows) + 1)):
                raise InvalidParameterError(f"worker {j + 1}: ranks are not a permutation of 1..{len(rows)}")
            seq.append(tuple(int(i) for i in rows[np.argsort(ranks)]))
        return cls(o.shape[0], o.shape[1], tuple(seq))

    def to_text(self) -> str:
        lines = []
        for j, chunks in enumerate(self.sequence):
            body = " ".join(f"({i + 1},{r})" for r, i in enumerate(chunks, 1))
            lines.append(f"{j + 1}: {body}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, n_chunks: int) -> "OrderingMatrix":
        entries: dict[int, list[tuple[int, int]]] = {}
        for n, ln in enumerate(text.splitlines(), 1):
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            head, sep, body = ln.partition(":")
            if not sep:
                raise InvalidParameterError(f"line {n}: expected 'j: (i,r) ...'")
            try:
                j = int(head)
                pairs = [tuple(int(v) for v in tok.strip("()").split(",")) for tok in body.split()]
            except ValueError:
                raise InvalidParameterError(f"line {n}: malformed pair") from None
            if any(len(p) != 2 for p in pairs):
                raise InvalidParameterError(f"line {n}: malformed pair")
            if j in entries:
                raise InvalidParameterError(f"line {n}: worker {j} listed twice")
            entries[j] = pairs
        m = len(entries)
        if sorted(entries) != list(range(1, m + 1)):
            raise InvalidParameterError("worker lines must cover 1..m")
        o = np.zeros((n_chunks, m), dtype=np.int64)
        for j, pairs in entries.items():
            for i, r in pairs:
                if not 1 <= i <= n_chunks:
                    raise InvalidParameterError(f"worker {j}: chunk {i} outside [1, {n_chunks}]")
                o[i - 1, j - 1] = r
        return cls.from_rank_matrix(o)


@dataclass(frozen=True)
class MatchingDecomposition:
    """Edge-disjoint perfect matchings; permutations[k][j] is the chunk matched to worker j."""
    permutations: tuple[tuple[int, ...], ...]


def _require_regular(a: AssignmentMatrix) -> int:
    d = a.regular_degree()
    if d is None:
        raise UnsupportedAssignmentError(
            "operation needs a square assignment with equal row and column sums")
    return d


def q_value(a: AssignmentMatrix, o: OrderingMatrix, chunk: int) -> int:
    """Most chunks the cluster can process while no copy of `chunk` is processed."""
    d = _require_regular(a)
    o.check_against(a)
    if not 0 <= chunk < a.n_chunks:
        raise InvalidParameterError(f"chunk {chunk} out of range")
    ranks = sum(seq.index(chunk) for seq, held in zip(o.sequence, a.support) if chunk in held)
    return ranks + (a.n_workers - d) * d


def q_values(a: AssignmentMatrix, o: OrderingMatrix) -> np.ndarray:
    d = _require_regular(a)
    o.check_against(a)
    row_sums = o.rank_matrix().sum(axis=1)
    return row_sums + (a.n_workers - d - 1) * d


def q_max(a: AssignmentMatrix, o: OrderingMatrix) -> int:
    return int(q_values(a, o).max())


def q_max_lower_bound(m: int, delta: int) -> int:
    return (m - delta - 1) * delta + delta * (delta + 1) // 2


def _as_biadjacency(support) -> np.ndarray:
    if isinstance(support, AssignmentMatrix):
        return support.dense()
    return np.asarray(support)


def find_perfect_matching(support) -> np.ndarray:
    """Perfect matching inside a square 0/1 matrix whose rows and columns all sum to the same delta >= 1.

    Rows are chunks and columns are workers. Returns `perm` with
    ``support[perm[j], j] == 1`` for every worker j and `perm` a bijection.
    Workers are scanned in ascending order and each one is matched through a
    shortest augmenting path found by BFS over ascending chunk indices.
    """
    s = _as_biadjacency(support)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise UnsupportedAssignmentError("support must be square")
    if not np.isin(s, (0, 1)).all():
        raise UnsupportedAssignmentError("support must be 0/1")
    rows, cols = s.sum(axis=1), s.sum(axis=0)
    delta = int(cols[0]) if len(cols) else 0
    if delta < 1 or not (np.all(rows == delta) and np.all(cols == delta)):
        raise UnsupportedAssignmentError("row and column sums must all equal the same delta >= 1")
    return _match(s)


def _match(s: np.ndarray) -> np.ndarray:
    m = s.shape[0]
    adj = [np.flatnonzero(s[:, j]).tolist() for j in range(m)]
    chunk_to_worker = [-1] * m
    worker_to_chunk = [-1] * m
    for root in range(m):
        # BFS over alternating paths from the free worker `root`.
        parent_worker: dict[int, int] = {}
        queue = deque([root])
        end_chunk = -1
        while queue and end_chunk < 0:
            w = queue.popleft()
            for c in adj[w]:
                if c in parent_worker:
                    continue
                parent_worker[c] = w
                if chunk_to_worker[c] < 0:
                    end_chunk = c
                    break
                queue.append(chunk_to_worker[c])
        if end_chunk < 0:
            raise UnsupportedAssignmentError("no perfect matching exists")
        c = end_chunk
        while c >= 0:
            w = parent_worker[c]
            prev = worker_to_chunk[w]
            worker_to_chunk[w] = c
            chunk_to_worker[c] = w
            c = prev
    return np.array(worker_to_chunk, dtype=np.int64)


def chunk_ordering(a: AssignmentMatrix) -> tuple[OrderingMatrix, MatchingDecomposition]:
    """Optimal ordering for a square delta-regular assignment.

    Peels delta edge-disjoint perfect matchings off the support; the k-th
    matching extracted gives every worker its rank-k chunk. Each chunk then
    receives every rank 1..delta exactly once, so all row sums of O are
    delta*(delta+1)/2 and q_max meets its lower bound.
    """
    d = _require_regular(a)
    remaining = a.dense()
    perms = []
    for _ in range(d):
        perm = find_perfect_matching(remaining)
        remaining[perm, np.arange(a.n_workers)] = 0
        perms.append(tuple(int(i) for i in perm))
    sequence = tuple(tuple(p[j] for p in perms) for j in range(a.n_workers))
    return OrderingMatrix(a.n_chunks, a.n_workers, sequence), MatchingDecomposition(tuple(perms))


def random_ordering(a: AssignmentMatrix, seed) -> OrderingMatrix:
    """Independent uniform permutation of each worker's chunks."""
    rng = np.random.default_rng(seed)
    sequence = tuple(tuple(held[k] for k in rng.permutation(len(held))) for held in a.support)
    return OrderingMatrix(a.n_chunks, a.n_workers, sequence)
