"""Weighted-graph data model, generators, hop metric and cut-off functions.

Vertices are integers ``0..n-1``.  Edges carry symmetric positive weights
``w``; every vertex carries a positive measure ``mu``.  The regularity
constants used throughout the estimate checkers (``omega_min``, ``D_omega``,
``D_mu``, ``mu_max``) are derived here.  The hop metric counts edges and
ignores weights: walk lengths in the Harnack transport cost are integers.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WeightedGraph",
    "GraphBounds",
    "CutoffFunction",
    "StrongCutoffResult",
    "generate",
    "graph_from_spec",
    "cutoff_build",
    "strong_cutoff_verify",
]

_RANDOM_RETRY_CAP = 100


@dataclass(frozen=True)
class GraphBounds:
    """Regularity constants of a weighted graph.

    omega_min: smallest edge weight.
    d_omega:   max over adjacent ordered pairs of deg(x)/w_xy.
    d_mu:      max over vertices of deg(x)/mu(x).
    mu_max:    largest vertex measure.
    """

    omega_min: float
    d_omega: float
    d_mu: float
    mu_max: float


class WeightedGraph:
    """Immutable weighted graph with per-vertex measure.

    Edges are stored once as unordered pairs (u < v) with weight w > 0;
    self-loops are rejected.  ``deg(x)`` is the weighted degree, cached at
    construction and equal to the recomputed sum exactly.
    """

    def __init__(self, n, edges, weights, mu, name=""):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        mu = np.asarray(mu, dtype=float).reshape(-1)
        if n <= 0:
            raise ValueError("graph needs at least one vertex")
        if len(mu) != n:
            raise ValueError(f"measure has length {len(mu)}, expected {n}")
        if len(edges) != len(weights):
            raise ValueError("edges and weights length mismatch")
        if np.any(mu <= 0):
            raise ValueError("vertex measure must be positive")
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        if np.any(weights <= 0):
            raise ValueError("edge weights must be positive")
        # canonical orientation u < v, detect duplicates
        u = np.minimum(edges[:, 0], edges[:, 1])
        v = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((v, u))
        u, v, weights = u[order], v[order], weights[order]
        if len(u) > 1 and np.any((u[1:] == u[:-1]) & (v[1:] == v[:-1])):
            raise ValueError("duplicate edge")
        self.n = int(n)
        self.edge_u = u
        self.edge_v = v
        self.edge_w = weights
        self.mu = mu
        self.name = name
        deg = np.zeros(n)
        np.add.at(deg, u, weights)
        np.add.at(deg, v, weights)
        self.deg = deg
        self._adj_idx, self._adj_w = self._build_adjacency()
        self.is_connected = self._check_connected()

    # -- construction helpers -------------------------------------------------

    def _build_adjacency(self):
        nbrs = [[] for _ in range(self.n)]
        wts = [[] for _ in range(self.n)]
        for a, b, w in zip(self.edge_u, self.edge_v, self.edge_w):
            nbrs[a].append(b)
            wts[a].append(w)
            nbrs[b].append(a)
            wts[b].append(w)
        idx = [np.asarray(x, dtype=np.int64) for x in nbrs]
        wt = [np.asarray(x, dtype=float) for x in wts]
        return idx, wt

    def _check_connected(self):
        if self.n == 1:
            return True
        seen = np.zeros(self.n, dtype=bool)
        queue = deque([0])
        seen[0] = True
        while queue:
            x = queue.popleft()
            for y in self._adj_idx[x]:
                if not seen[y]:
                    seen[y] = True
                    queue.append(y)
        return bool(seen.all())

    # -- basic queries ---------------------------------------------------------

    @property
    def num_edges(self):
        return len(self.edge_w)

    def neighbors(self, x):
        """Indices and weights of the neighbors of ``x``."""
        return self._adj_idx[x], self._adj_w[x]

    def bounds(self):
        """Exact regularity constants over the stored data."""
        if self.num_edges == 0:
            raise ValueError("graph has no edges")
        d_over_w = np.maximum(self.deg[self.edge_u], self.deg[self.edge_v]) / self.edge_w
        return GraphBounds(
            omega_min=float(self.edge_w.min()),
            d_omega=float(d_over_w.max()),
            d_mu=float((self.deg / self.mu).max()),
            mu_max=float(self.mu.max()),
        )

    def distances_from(self, x):
        """Hop distances from ``x``; unreachable vertices get -1."""
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[x] = 0
        queue = deque([x])
        while queue:
            a = queue.popleft()
            for b in self._adj_idx[a]:
                if dist[b] < 0:
                    dist[b] = dist[a] + 1
                    queue.append(b)
        return dist

    def distance(self, x, y):
        d = int(self.distances_from(x)[y])
        if d < 0:
            raise ValueError(f"vertices {x} and {y} are not connected")
        return d

    def ball(self, x, r):
        """Vertices at hop distance <= r from x, sorted."""
        dist = self.distances_from(x)
        return np.flatnonzero((dist >= 0) & (dist <= r))

    def diameter(self):
        best = 0
        for x in range(self.n):
            d = self.distances_from(x)
            best = max(best, int(d.max()))
        return best

    def laplacian_matrix(self):
        """Dense generator L with (Lf)(x) = sum_y w_xy (f(y)-f(x)) / mu(x)."""
        lap = np.zeros((self.n, self.n))
        lap[self.edge_u, self.edge_v] = self.edge_w
        lap[self.edge_v, self.edge_u] = self.edge_w
        lap[np.arange(self.n), np.arange(self.n)] = -self.deg
        return lap / self.mu[:, None]

    def relabel(self, perm):
        """New graph with vertex i renamed perm[i]."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise ValueError("perm must be a permutation of 0..n-1")
        mu = np.empty(self.n)
        mu[perm] = self.mu
        edges = np.column_stack([perm[self.edge_u], perm[self.edge_v]])
        return WeightedGraph(self.n, edges, self.edge_w.copy(), mu, name=self.name)

    # -- persistence -----------------------------------------------------------

    def save(self, path):
        payload = {
            "vertices": self.n,
            "edges": [[int(a), int(b), float(w)]
                      for a, b, w in zip(self.edge_u, self.edge_v, self.edge_w)],
            "measure": [float(m) for m in self.mu],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            payload = json.load(fh)
        edges = [(e[0], e[1]) for e in payload["edges"]]
        weights = [e[2] for e in payload["edges"]]
        return cls(payload["vertices"], edges, weights, payload["measure"])

    def __repr__(self):
        tag = self.name or "graph"
        return f"WeightedGraph({tag}, n={self.n}, m={self.num_edges})"


# -- generators ----------------------------------------------------------------


def _edges_path(n):
    if n < 2:
        raise ValueError("path needs n >= 2")
    return [(i, i + 1) for i in range(n - 1)], n


def _edges_cycle(n):
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return [(i, (i + 1) % n) for i in range(n)], n


def _edges_complete(n):
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    return [(i, j) for i in range(n) for j in range(i + 1, n)], n


def _edges_hypercube(d):
    if d < 1:
        raise ValueError("hypercube needs d >= 1")
    n = 1 << d
    return [(x, x ^ (1 << b)) for x in range(n) for b in range(d) if x < x ^ (1 << b)], n


def _edges_torus(d, m):
    # m >= 5 keeps 2-balls wrap-free, which the curvature checks rely on
    if d < 1 or m < 5:
        raise ValueError("torus needs d >= 1 and m >= 5")
    n = m**d
    edges = set()
    for x in range(n):
        coords = []
        r = x
        for _ in range(d):
            coords.append(r % m)
            r //= m
        for axis in range(d):
            stepped = list(coords)
            stepped[axis] = (stepped[axis] + 1) % m
            y = sum(c * m**i for i, c in enumerate(stepped))
            edges.add((min(x, y), max(x, y)))
    return sorted(edges), n


def _edges_random(n, p, seed):
    if n < 2 or not (0.0 < p <= 1.0):
        raise ValueError("random graph needs n >= 2 and 0 < p <= 1")
    rng = np.random.default_rng(seed)
    for _ in range(_RANDOM_RETRY_CAP):
        iu, ju = np.triu_indices(n, k=1)
        mask = rng.random(len(iu)) < p
        edges = list(zip(iu[mask].tolist(), ju[mask].tolist()))
        if not edges:
            continue
        g = WeightedGraph(n, edges, np.ones(len(edges)), np.ones(n))
        if g.is_connected:
            return edges, n
    raise ValueError(f"no connected draw in {_RANDOM_RETRY_CAP} tries for random({n},{p})")


def generate(family, params=(), weighting="unit", measure="unit", weight_seed=0):
    """Build a graph from the generator zoo.

    family     one of path, cycle, complete, hypercube, torus, random;
               ``params`` are its integer/float arguments (random takes
               ``(n, p, seed)``).
    weighting  "unit" or "random" (uniform in [0.5, 2.0], seeded by
               ``weight_seed``).
    measure    "unit" or "degree" (mu(x) = deg(x), after weighting).
    """
    params = tuple(params)
    builders = {
        "path": _edges_path,
        "cycle": _edges_cycle,
        "complete": _edges_complete,
        "hypercube": _edges_hypercube,
        "torus": _edges_torus,
        "random": _edges_random,
    }
    if family not in builders:
        raise ValueError(f"unknown graph family {family!r}")
    edges, n = builders[family](*params)
    edges = np.asarray(edges, dtype=np.int64)
    if weighting == "unit":
        weights = np.ones(len(edges))
    elif weighting == "random":
        rng = np.random.default_rng(weight_seed)
        weights = rng.uniform(0.5, 2.0, size=len(edges))
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    if measure == "unit":
        mu = np.ones(n)
    elif measure == "degree":
        mu = np.zeros(n)
        np.add.at(mu, edges[:, 0], weights)
        np.add.at(mu, edges[:, 1], weights)
    else:
        raise ValueError(f"unknown measure {measure!r}")
    label = family + (":" + ":".join(str(p) for p in params) if params else "")
    g = WeightedGraph(n, edges, weights, mu, name=label)
    if not g.is_connected:
        raise ValueError(f"generator produced a disconnected graph: {label}")
    return g


def graph_from_spec(spec, weights="unit", measure="unit"):
    """Parse CLI-style specs like ``torus:2:5``, ``random:20:0.3:7`` or
    ``file:/path/g.json``; ``weights`` is ``unit`` or ``random:SEED``."""
    parts = spec.split(":")
    family = parts[0]
    if family == "file":
        return WeightedGraph.load(":".join(parts[1:]))
    raw = parts[1:]
    if family == "random":
        if len(raw) != 3:
            raise ValueError("random spec is random:N:P:SEED")
        params = (int(raw[0]), float(raw[1]), int(raw[2]))
    else:
        params = tuple(int(p) for p in raw)
    weighting, wseed = "unit", 0
    if weights != "unit":
        wparts = weights.split(":")
        if wparts[0] != "random":
            raise ValueError(f"unknown weighting spec {weights!r}")
        weighting = "random"
        wseed = int(wparts[1]) if len(wparts) > 1 else 0
    return generate(family, params, weighting=weighting, measure=measure,
                    weight_seed=wseed)


# -- cut-off functions -----------------------------------------------------------


@dataclass
class CutoffFunction:
    """[0,1]-valued vertex function used to localize estimates.

    ``kind`` is "basic" (the three-case ramp built by :func:`cutoff_build`)
    or "strong" (user-supplied candidate checked by
    :func:`strong_cutoff_verify`).  ``support`` lists the vertices where the
    function may be nonzero.
    """

    values: np.ndarray
    center: int
    radius: int
    kind: str = "basic"
    support: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.support is None:
            self.support = np.flatnonzero(self.values > 0)
        else:
            self.support = np.asarray(self.support, dtype=np.int64)


def cutoff_build(g, x0, R):
    """Ramp cut-off: 1 inside hop radius R, 0 beyond 2R, linear between."""
    if int(R) != R or R < 1:
        raise ValueError("R must be a positive integer")
    R = int(R)
    dist = g.distances_from(x0)
    vals = np.zeros(g.n)
    inner = dist < R
    ramp = (dist >= R) & (dist <= 2 * R)
    vals[inner] = 1.0
    vals[ramp] = (2 * R - dist[ramp]) / R
    return CutoffFunction(vals, center=x0, radius=R, kind="basic")


@dataclass
class StrongCutoffResult:
    passed: bool
    witness: int | None = None
    reason: str = ""
    checked: int = 0

    def __bool__(self):
        return self.passed


def strong_cutoff_verify(g, phi, n, K, c, R):
    """Check a candidate strong cut-off against its defining inequalities.

    Every support vertex must either stay below the small-value threshold
    c*(1+R*sqrt(K))/(2R^2), or have a strictly positive closed neighborhood
    so that the reciprocal is defined there, with
    phi^2 * L(1/phi) <= D_mu*c*(1+R*sqrt(K))/R^2 and
    phi^3 * G(1/phi) <= D_mu*c/R^2 (L, G the graph Laplacian and squared
    gradient).  Candidates are verified only, never synthesized.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    vals = phi.values
    x0 = phi.center
    if abs(vals[x0] - 1.0) > 1e-12:
        raise ValueError("cut-off must equal 1 at its center")
    support = set(int(s) for s in phi.support)
    off = [i for i in range(g.n) if i not in support and vals[i] != 0.0]
    if off:
        raise ValueError(f"cut-off is nonzero off its support at vertex {off[0]}")
    if np.any(vals < 0) or np.any(vals > 1):
        raise ValueError("cut-off values must lie in [0, 1]")

    d_mu = g.bounds().d_mu
    small = c * (1.0 + R * np.sqrt(K)) / (2.0 * R**2)
    cap_lap = d_mu * c * (1.0 + R * np.sqrt(K)) / R**2
    cap_gam = d_mu * c / R**2
    tol = 1e-12

    checked = 0
    for x in sorted(support):
        checked += 1
        if vals[x] <= small + tol:
            continue
        nbr, w = g.neighbors(x)
        if np.any(vals[nbr] == 0.0):
            return StrongCutoffResult(
                False, witness=int(x),
                reason="large value but a neighbor vanishes, reciprocal undefined",
                checked=checked)
        inv_diff = 1.0 / vals[nbr] - 1.0 / vals[x]
        lap_inv = float(np.dot(w, inv_diff) / g.mu[x])
        gam_inv = float(np.dot(w, inv_diff**2) / (2.0 * g.mu[x]))
        if vals[x] ** 2 * lap_inv > cap_lap + tol * (1.0 + abs(cap_lap)):
            return StrongCutoffResult(False, witness=int(x),
                                      reason="Laplacian-of-reciprocal bound fails",
                                      checked=checked)
        if vals[x] ** 3 * gam_inv > cap_gam + tol * (1.0 + abs(cap_gam)):
            return StrongCutoffResult(False, witness=int(x),
                                      reason="gradient-of-reciprocal bound fails",
                                      checked=checked)
    return StrongCutoffResult(True, checked=checked)
