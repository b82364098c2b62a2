"""Graph shift operators, graph generators, and graph-signal helpers.

The shift operator is stored as coordinate lists sorted by (row, col) so that
iteration order, and therefore every downstream random draw aligned to the
edge list, is deterministic. CSR matrices are cached for products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .rng import SeedTree, as_generator


class PowerIterationError(RuntimeError):
    """Power iteration failed to reach the requested tolerance."""


@dataclass(eq=False)
class GraphShiftOperator:
    """Sparse n x n shift operator with an explicit, ordered support."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    _csr: sp.csr_matrix | None = field(default=None, repr=False, compare=False)
    _csr_t: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        if self.n < 1:
            raise ValueError("node count must be >= 1")
        if not (self.rows.shape == self.cols.shape == self.vals.shape):
            raise ValueError("coordinate arrays must have identical shapes")
        if self.rows.size:
            if self.rows.min() < 0 or self.rows.max() >= self.n:
                raise ValueError("row index out of range")
            if self.cols.min() < 0 or self.cols.max() >= self.n:
                raise ValueError("column index out of range")
        order = np.lexsort((self.cols, self.rows))
        self.rows = self.rows[order]
        self.cols = self.cols[order]
        self.vals = self.vals[order]
        flat = self.rows * self.n + self.cols
        if flat.size and np.any(np.diff(flat) == 0):
            raise ValueError("duplicate entries in support")

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "GraphShiftOperator":
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise ValueError("dense shift operator must be square")
        rows, cols = np.nonzero(dense)
        return cls(dense.shape[0], rows, cols, dense[rows, cols])

    # -- views ------------------------------------------------------------

    def csr(self) -> sp.csr_matrix:
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self.vals, (self.rows, self.cols)), shape=(self.n, self.n)
            )
        return self._csr

    def csr_transpose(self) -> sp.csr_matrix:
        if self._csr_t is None:
            self._csr_t = self.csr().T.tocsr()
        return self._csr_t

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.rows, self.cols] = self.vals
        return out

    @property
    def support(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    @property
    def offdiag_mask(self) -> np.ndarray:
        return self.rows != self.cols

    def num_edges(self) -> int:
        """Directed off-diagonal entries."""
        return int(np.count_nonzero(self.offdiag_mask))

    def degrees(self) -> np.ndarray:
        """Out-degree over off-diagonal support (receivers per transmitter)."""
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.cols[self.offdiag_mask], 1)
        return deg

    def is_symmetric(self) -> bool:
        a = self.csr()
        return (a != a.T).nnz == 0

    def with_values(self, vals: np.ndarray) -> "GraphShiftOperator":
        return GraphShiftOperator(self.n, self.rows.copy(), self.cols.copy(), vals)

    def scaled(self, factor: float) -> "GraphShiftOperator":
        return self.with_values(self.vals * float(factor))

    def neighbors_in(self, node: int) -> np.ndarray:
        """Sorted transmitters j with (node, j) in the support, j != node."""
        mask = (self.rows == node) & (self.cols != node)
        return self.cols[mask]


# -- generators -------------------------------------------------------------


def generate_sbm(
    n: int,
    communities: int,
    p_intra: float,
    p_inter: float,
    seed: SeedTree | np.random.Generator | int,
) -> GraphShiftOperator:
    """Stochastic block model with equal contiguous communities.

    Each unordered pair is sampled independently; the adjacency is binary,
    symmetric, and has a zero diagonal.
    """
    if not (0.0 <= p_inter <= p_intra <= 1.0):
        raise ValueError("require 0 <= p_inter <= p_intra <= 1")
    if communities < 1 or n % communities != 0:
        raise ValueError("communities must divide n")
    g = as_generator(seed)
    membership = np.arange(n) // (n // communities)
    prob = np.where(membership[:, None] == membership[None, :], p_intra, p_inter)
    draws = g.random((n, n))
    upper = np.triu(draws < prob, k=1)
    adj = (upper | upper.T).astype(np.float64)
    return GraphShiftOperator.from_dense(adj)


def generate_geometric(positions: np.ndarray, radius: float) -> GraphShiftOperator:
    """Disk graph: edge iff Euclidean distance <= radius, i != j."""
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise ValueError("positions must be an n x 2 array")
    if not np.all(np.isfinite(positions)):
        raise ValueError("positions must be finite")
    if radius <= 0:
        raise ValueError("radius must be positive")
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    adj = (dist <= radius).astype(np.float64)
    np.fill_diagonal(adj, 0.0)
    return GraphShiftOperator.from_dense(adj)


def complete_graph(n: int) -> GraphShiftOperator:
    adj = np.ones((n, n))
    np.fill_diagonal(adj, 0.0)
    return GraphShiftOperator.from_dense(adj)


def is_connected(S: GraphShiftOperator) -> bool:
    n = S.n
    if n == 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in zip(S.rows, S.cols):
        if i != j:
            adj[i].append(j)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


# -- spectral normalization ---------------------------------------------------


def spectral_radius(
    S: GraphShiftOperator, tol: float = 1e-10, max_iter: int = 10_000
) -> float:
    """Dominant eigenvalue magnitude by power iteration.

    Uses the norm-growth estimate ||S v|| / ||v||, which also converges for
    bipartite graphs whose spectrum contains the +/- lambda_max pair.
    """
    if S.vals.size == 0 or not np.any(S.vals):
        raise ValueError("spectral radius of the zero operator is 0; cannot normalize")
    a = S.csr()
    # tiny index-dependent tilt guards against a start vector orthogonal to
    # the dominant eigenspace
    v = 1.0 + 1e-9 * np.arange(S.n)
    v /= np.linalg.norm(v)
    lam_prev = np.inf
    for _ in range(max_iter):
        w = a @ v
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            raise ValueError("power iteration hit the null space; operator is singular on the start vector")
        v = w / lam
        if abs(lam - lam_prev) <= tol * lam:
            return lam
        lam_prev = lam
    raise PowerIterationError(
        f"power iteration did not converge to rel. tol {tol} in {max_iter} iterations"
    )


def normalize_by_spectral_radius(S: GraphShiftOperator) -> GraphShiftOperator:
    if not S.is_symmetric():
        raise ValueError("spectral normalization requires a symmetric operator")
    lam = spectral_radius(S)
    return S.with_values(S.vals / lam)


# -- graph signals ------------------------------------------------------------


def as_signal(S_or_n: GraphShiftOperator | int, x: np.ndarray) -> np.ndarray:
    """Validate and return an n x F float64 signal (vectors become n x 1)."""
    n = S_or_n.n if isinstance(S_or_n, GraphShiftOperator) else int(S_or_n)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != n:
        raise ValueError(f"signal must have {n} rows, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal values must be finite")
    return x


def kronecker_delta(n: int, node: int) -> np.ndarray:
    if not (0 <= node < n):
        raise ValueError(f"node index {node} out of range for n={n}")
    x = np.zeros((n, 1))
    x[node, 0] = 1.0
    return x


def ideal_shift(S: GraphShiftOperator, x: np.ndarray) -> np.ndarray:
    """Noiseless shift S @ x, one matrix-vector product per feature column."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    x2 = as_signal(S, x)
    out = S.csr() @ x2
    return out[:, 0] if squeeze else out


# -- serialization ------------------------------------------------------------


def save_edge_list(S: GraphShiftOperator, path: str) -> None:
    """Text edge list: header ``n=<count>``, then ``i j weight`` per entry."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"n={S.n}\n")
        for i, j, w in zip(S.rows, S.cols, S.vals):
            fh.write(f"{i} {j} {w!r}\n")


def load_edge_list(path: str) -> GraphShiftOperator:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise ValueError(f"bad edge-list header: {header!r}")
        n = int(header[2:])
        rows, cols, vals = [], [], []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i, j, w = line.split()
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(w))
    return GraphShiftOperator(n, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals))
