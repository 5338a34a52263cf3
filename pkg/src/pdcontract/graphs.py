"""Undirected graphs, Laplacians and the spectral reduction ``R, Lambda, V``."""

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConnectivityError
from .linalg import sym_eig

CONNECTIVITY_TOL = 1e-10


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0..N-1``.

    Edges are stored as sorted pairs ``(u, v)`` with ``u < v``. Construction
    rejects self-loops and duplicates; connectivity is checked by
    :meth:`is_connected` and enforced by :func:`laplacian`.
    """

    N: int
    edges: tuple

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.N and 0 <= v < self.N):
                raise ValueError(f"edge ({u}, {v}) out of range for N = {self.N}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @classmethod
    def from_edges(cls, edges, N=None):
        edges = [(int(u), int(v)) for u, v in edges]
        if N is None:
            N = 1 + max(max(e) for e in edges) if edges else 0
        return cls(N, tuple(edges))

    def neighbors(self, i):
        return sorted({v for u, v in self.edges if u == i} | {u for u, v in self.edges if v == i})

    def is_connected(self):
        if self.N == 0:
            return False
        adj = {i: [] for i in range(self.N)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen, queue = {0}, deque([0])
        while queue:
            for w in adj[queue.popleft()]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.N


def path_graph(N):
    return Graph(N, tuple((i, i + 1) for i in range(N - 1)))


def cycle_graph(N):
    return Graph(N, tuple((i, (i + 1) % N) for i in range(N)))


def complete_graph(N):
    return Graph(N, tuple((i, j) for i in range(N) for j in range(i + 1, N)))


def star_graph(N):
    return Graph(N, tuple((0, i) for i in range(1, N)))


def random_connected_graph(N, p=0.4, seed=None):
    """Random spanning tree plus independent extra edges with probability ``p``."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(N)
    edges = {tuple(sorted((int(order[i]), int(order[rng.integers(i)])))) for i in range(1, N)}
    for i in range(N):
        for j in range(i + 1, N):
            if rng.random() < p:
                edges.add((i, j))
    return Graph(N, tuple(sorted(edges)))


def read_edge_list(path):
    """Parse a ``u v`` per line, 0-indexed edge list.

    Blank lines and ``#`` comments are ignored; ``N`` is the largest index
    plus one.
    """
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph.from_edges(edges)


def write_edge_list(graph, path):
    Path(path).write_text("".join(f"{u} {v}\n" for u, v in graph.edges))


def laplacian(graph):
    """``L = D - Adj`` of a connected graph."""
    if not graph.is_connected():
        raise ConnectivityError(f"graph with {graph.N} nodes is not connected")
    L = np.zeros((graph.N, graph.N))
    for u, v in graph.edges:
        L[u, v] = L[v, u] = -1.0
        L[u, u] += 1.0
        L[v, v] += 1.0
    return L


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Laplacian with its orthonormal reduction.

    ``R`` holds the eigenvectors of the nonzero eigenvalues as rows, so that
    ``R L R^T = Lambda``, ``R R^T = I`` and ``R L = Lambda R``.
    """

    L: np.ndarray
    eigenvalues: np.ndarray
    R: np.ndarray

    @property
    def N(self):
        return self.L.shape[0]

    @property
    def lambda2(self):
        return float(self.eigenvalues[1])

    @property
    def lambdaN(self):
        return float(self.eigenvalues[-1])

    @property
    def Lambda(self):
        return np.diag(self.eigenvalues[1:])

    def reduced_incidence(self, n):
        """``(Lambda R) kron I_n``, the full-row-rank constraint of the reduced system."""
        return np.kron(self.Lambda @ self.R, np.eye(n))

    def identity_residuals(self):
        L, R, Lam = self.L, self.R, self.Lambda
        return {
            "RLRt_minus_Lambda": float(np.linalg.norm(R @ L @ R.T - Lam, 2)),
            "RRt_minus_I": float(np.linalg.norm(R @ R.T - np.eye(self.N - 1), 2)),
            "RL_minus_LambdaR": float(np.linalg.norm(R @ L - Lam @ R, 2)),
        }


def spectral_factors(L):
    """Eigen-reduction of a connected-graph Laplacian.

    Raises
    ------
    ConnectivityError
        If ``lambda_2 <= 1e-10``.
    """
    L = np.asarray(L, dtype=float)
    w, U = sym_eig(L)
    w = w.copy()
    w[0] = 0.0
    if w.size < 2 or w[1] <= CONNECTIVITY_TOL:
        raise ConnectivityError(f"lambda_2 = {w[1] if w.size > 1 else 0.0:.3e}: graph is disconnected")
    return LaplacianSpectrum(L=L, eigenvalues=w, R=U[:, 1:].T.copy())


def graph_spectrum(graph):
    return spectral_factors(laplacian(graph))


def build_V(spec, n):
    """``V = diag(I_{nN}, R kron I_n)``; orthonormal rows, shape ``(2N-1)n x 2Nn``."""
    N = spec.N
    V = np.zeros(((2 * N - 1) * n, 2 * N * n))
    V[:N * n, :N * n] = np.eye(N * n)
    V[N * n:, N * n:] = np.kron(spec.R, np.eye(n))
    return V
