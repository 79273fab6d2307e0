"""Chunk-to-worker assignment matrices.

An assignment is stored by its support only: for every worker, the ordered
tuple of chunk indices it holds. Indices are 0-based in memory and 1-based in
the text format.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from .errors import ConstructionFailedError, InvalidParameterError

MAX_PAIRING_ATTEMPTS = 1000


@dataclass(frozen=True)
class AssignmentMatrix:
    n_chunks: int
    n_workers: int
    support: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n_chunks < 1 or self.n_workers < 1:
            raise InvalidParameterError("n_chunks and n_workers must be positive")
        support = tuple(tuple(int(i) for i in s) for s in self.support)
        object.__setattr__(self, "support", support)
        if len(support) != self.n_workers:
            raise InvalidParameterError(
                f"expected {self.n_workers} worker supports, got {len(support)}")
        for j, chunks in enumerate(support):
            if len(set(chunks)) != len(chunks):
                raise InvalidParameterError(f"worker {j + 1} lists a chunk twice")
            for i in chunks:
                if not 0 <= i < self.n_chunks:
                    raise InvalidParameterError(
                        f"worker {j + 1} holds chunk {i + 1}, outside [1, {self.n_chunks}]")
        if np.any(self.replication == 0):
            missing = int(np.flatnonzero(self.replication == 0)[0]) + 1
            raise InvalidParameterError(f"chunk {missing} is not assigned to any worker")

    @cached_property
    def load(self) -> np.ndarray:
        """Number of chunks held by each worker."""
        return np.array([len(s) for s in self.support], dtype=np.int64)

    @cached_property
    def replication(self) -> np.ndarray:
        """Number of workers holding each chunk."""
        counts = np.zeros(self.n_chunks, dtype=np.int64)
        for chunks in self.support:
            counts[list(chunks)] += 1
        return counts

    @cached_property
    def holders(self) -> tuple[tuple[int, ...], ...]:
        """For each chunk, the ascending tuple of workers that hold it."""
        out: list[list[int]] = [[] for _ in range(self.n_chunks)]
        for j, chunks in enumerate(self.support):
            for i in chunks:
                out[i].append(j)
        return tuple(tuple(h) for h in out)

    def dense(self) -> np.ndarray:
        """N x m 0/1 matrix."""
        a = np.zeros((self.n_chunks, self.n_workers), dtype=np.int64)
        for j, chunks in enumerate(self.support):
            a[list(chunks), j] = 1
        return a

    @property
    def is_square(self) -> bool:
        return self.n_chunks == self.n_workers

    def regular_degree(self) -> int | None:
        """Common value of all row and column sums, or None if the matrix is not square-regular."""
        if not self.is_square:
            return None
        d = int(self.load[0])
        if np.all(self.load == d) and np.all(self.replication == d):
            return d
        return None

    @classmethod
    def from_dense(cls, a) -> "AssignmentMatrix":
        a = np.asarray(a)
        if a.ndim != 2:
            raise InvalidParameterError("assignment must be a 2-D matrix")
        support = tuple(tuple(int(i) for i in np.flatnonzero(a[:, j])) for j in range(a.shape[1]))
        return cls(a.shape[0], a.shape[1], support)

    def to_text(self) -> str:
        lines = [f"{self.n_chunks} {self.n_workers}"]
        for j, chunks in enumerate(self.support):
            body = " ".join(str(i + 1) for i in chunks)
            lines.append(f"{j + 1}: {body}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AssignmentMatrix":
        rows = [(n, ln.strip()) for n, ln in enumerate(text.splitlines(), 1)]
        rows = [(n, ln) for n, ln in rows if ln and not ln.startswith("#")]
        if not rows:
            raise InvalidParameterError("empty assignment file")
        n, header = rows[0]
        try:
            n_chunks, n_workers = (int(v) for v in header.split())
        except ValueError:
            raise InvalidParameterError(f"line {n}: expected header 'N m', got {header!r}") from None
        support: list[tuple[int, ...] | None] = [None] * n_workers
        for n, ln in rows[1:]:
            head, sep, body = ln.partition(":")
            if not sep:
                raise InvalidParameterError(f"line {n}: expected 'j: i1 i2 ...'")
            try:
                j = int(head)
                chunks = tuple(int(v) - 1 for v in body.split())
            except ValueError:
                raise InvalidParameterError(f"line {n}: non-integer index") from None
            if not 1 <= j <= n_workers:
                raise InvalidParameterError(f"line {n}: worker {j} outside [1, {n_workers}]")
            if support[j - 1] is not None:
                raise InvalidParameterError(f"line {n}: worker {j} listed twice")
            support[j - 1] = chunks
        if any(s is None for s in support):
            missing = support.index(None) + 1
            raise InvalidParameterError(f"worker {missing} has no line")
        return cls(n_chunks, n_workers, tuple(support))


@dataclass(frozen=True)
class RegularGraphSpec:
    m: int
    degree: int
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.degree < 1:
            raise InvalidParameterError("m and degree must be positive")
        if self.degree >= self.m:
            raise InvalidParameterError(f"degree {self.degree} must be below m={self.m}")
        if (self.m * self.degree) % 2:
            raise InvalidParameterError("m * degree must be even")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")


def build_cyclic(m: int, delta: int) -> AssignmentMatrix:
    """Worker j holds chunks j, j+1, ..., j+delta-1 (mod m), in that order."""
    if m < 1 or delta < 1:
        raise InvalidParameterError("m and delta must be positive")
    if delta > m:
        raise InvalidParameterError(f"delta={delta} exceeds m={m}")
    support = tuple(tuple((j + k) % m for k in range(delta)) for j in range(m))
    return AssignmentMatrix(m, m, support)


def _pair_stubs(m: int, d: int, rng: np.random.Generator) -> set[tuple[int, int]] | None:
    # Pairing model; only the offending pairs are re-drawn on each pass.
    edges: set[tuple[int, int]] = set()
    stubs = [v for v in range(m) for _ in range(d)]
    while stubs:
        leftover: Counter[int] = Counter()
        shuffled = [stubs[k] for k in rng.permutation(len(stubs))]
        for u, v in zip(shuffled[::2], shuffled[1::2]):
            if u > v:
                u, v = v, u
            if u != v and (u, v) not in edges:
                edges.add((u, v))
            else:
                leftover[u] += 1
                leftover[v] += 1
        if leftover and not _can_still_pair(edges, sorted(leftover)):
            return None
        stubs = [v for v in sorted(leftover) for _ in range(leftover[v])]
    return edges


def _can_still_pair(edges: set[tuple[int, int]], nodes: list[int]) -> bool:
    for a, u in enumerate(nodes):
        for v in nodes[a + 1:]:
            if (u, v) not in edges:
                return True
    return False


def build_regular_graph(spec: RegularGraphSpec) -> AssignmentMatrix:
    """Adjacency of a random simple `spec.degree`-regular graph on `spec.m` vertices.

    Worker j holds the chunks indexed by its neighbours (ascending). Each
    attempt uses its own generator seeded from (seed, attempt), so the output
    depends only on (m, degree, seed).
    """
    for attempt in range(MAX_PAIRING_ATTEMPTS):
        rng = np.random.default_rng([spec.seed, attempt])
        edges = _pair_stubs(spec.m, spec.degree, rng)
        if edges is None:
            continue
        neighbours: list[list[int]] = [[] for _ in range(spec.m)]
        for u, v in edges:
            neighbours[u].append(v)
            neighbours[v].append(u)
        return AssignmentMatrix(spec.m, spec.m, tuple(tuple(sorted(nb)) for nb in neighbours))
    raise ConstructionFailedError(
        f"no simple {spec.degree}-regular graph on {spec.m} vertices after "
        f"{MAX_PAIRING_ATTEMPTS} attempts (seed={spec.seed})")


def second_eigenvalue(a: AssignmentMatrix) -> float:
    """Largest |eigenvalue| of the adjacency after removing the trivial ones.

    The trivial eigenvalues are the Perron value `degree` and, for bipartite
    graphs, `-degree`; one copy of each is removed. `-degree` is kept when it
    is the only eigenvalue left (K2), so every complete graph gives 1.
    """
    if not a.is_square:
        raise InvalidParameterError("adjacency must be square")
    adj = a.dense().astype(float)
    if not np.array_equal(adj, adj.T):
        raise InvalidParameterError("adjacency is not symmetric")
    d = a.regular_degree()
    if d is None:
        raise InvalidParameterError("graph is not regular")
    eig = list(np.linalg.eigvalsh(adj))
    tol = 1e-8 * max(d, 1)
    eig.pop(int(np.argmin([abs(v - d) for v in eig])))
    if len(eig) > 1 and abs(eig[0] + d) <= tol:
        eig.pop(0)
    if not eig:
        return 0.0
    return float(max(abs(v) for v in eig))


def ramanujan_bound(degree: int) -> float:
    return 2.0 * math.sqrt(degree - 1)


def find_ramanujan_graph(m: int, degree: int, seed: int = 0,
                         max_seeds: int = 1000) -> tuple[AssignmentMatrix, int, float]:
    """Try seeds seed, seed+1, ... until the graph's second eigenvalue is below 2*sqrt(degree-1).

    Returns (assignment, seed used, second eigenvalue).
    """
    bound = ramanujan_bound(degree)
    for s in range(seed, seed + max_seeds):
        a = build_regular_graph(RegularGraphSpec(m, degree, s))
        lam = second_eigenvalue(a)
        if lam < bound:
            return a, s, lam
    raise ConstructionFailedError(
        f"no Ramanujan {degree}-regular graph on {m} vertices in seeds [{seed}, {seed + max_seeds})")
