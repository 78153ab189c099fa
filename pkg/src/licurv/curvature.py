"""Numerical checking and optimization of the exponential curvature bound.

For a vertex x and a positive function f with Lf(x) < 0 the functional

    (Gamma2~(f)(x) - (Lf(x))^2 / n) / Gamma(f)(x)

is the best curvature constant witnessed by f; the graph satisfies the
curvature condition with constant K at x exactly when the infimum over all
admissible f is >= K.  The functional is scale invariant, so the search is
normalized to f(x) = 1 and runs over the punctured closed 2-ball of x,
which is all the functional can see.

The optimizer (multistart simplex descent over log-values, seeded by random
admissible samples) is a heuristic lower-bound estimator, not a
certificate: a pass means "no violation found".
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import operators

__all__ = [
    "CdeOptions",
    "VertexCurvature",
    "CurvatureReport",
    "cde_functional",
    "cde_best_K",
    "cde_report",
    "cde_holds",
]

_LAP_WALL = -1e-10   # admissible set is the closed region Lf(x) <= this
_F_CLAMP = 1e-8      # positivity clamp on witness values
_LOG_LO = math.log(_F_CLAMP)
_LOG_HI = -_LOG_LO


@dataclass(frozen=True)
class CdeOptions:
    """Optimizer defaults; pinned by the acceptance suite."""

    restarts: int = 32
    samples: int = 512
    seed: int = 0
    tol: float = 1e-6


@dataclass
class VertexCurvature:
    vertex: int
    n: float
    k_star: float
    witness: np.ndarray
    converged: bool
    restarts_used: int
    boundary_proximity: float  # |Lf(x)| at the witness; near-wall infima flagged


@dataclass
class CurvatureReport:
    n: float
    entries: list = field(default_factory=list)

    @property
    def k_star(self):
        return np.array([e.k_star for e in self.entries])

    @property
    def min_k(self):
        return float(self.k_star.min())

    def worst_vertex(self):
        return self.entries[int(np.argmin(self.k_star))].vertex

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["vertex", "n", "K_star", "converged", "restarts_used"])
            for e in self.entries:
                writer.writerow([e.vertex, f"{e.n:g}", f"{e.k_star:.17g}",
                                 int(e.converged), e.restarts_used])


def cde_functional(g, x, n, f):
    """Curvature functional at x; preconditions reported individually."""
    f = np.asarray(f, dtype=float)
    ball2 = g.ball(x, 2)
    if np.any(f[ball2] <= 0):
        raise ValueError(f"witness must be positive on the 2-ball of {x}")
    lap_x = operators.laplacian(g, f, x)
    if lap_x >= 0:
        raise ValueError(f"witness needs Lf({x}) < 0, got {lap_x:g}")
    gam_x = operators.gamma(g, f, x=x)
    if gam_x <= 0:
        raise ValueError(f"witness needs Gamma(f)({x}) > 0")
    g2t = operators.gamma2_tilde(g, f, x)
    quad = 0.0 if math.isinf(n) else lap_x * lap_x / n
    return (g2t - quad) / gam_x


class _LocalFunctional:
    """Vectorized evaluator of the functional on the closed 2-ball of x.

    The weighted adjacency of the closed 1-ball (rows) against the closed
    2-ball (columns) is precomputed densely, so an evaluation is two small
    matrix-vector products plus elementwise work.  Cheap enough for
    hundreds of thousands of optimizer calls.
    """

    def __init__(self, g, x):
        ball2 = [int(v) for v in g.ball(x, 2)]
        ball2.remove(x)
        self.order = [x] + ball2          # position 0 is the center
        pos = {v: i for i, v in enumerate(self.order)}
        center_nbr, center_w = g.neighbors(x)
        self.center_w = np.asarray(center_w, dtype=float)
        self.mu_x = float(g.mu[x])
        rows = [x] + [int(v) for v in center_nbr]   # closed 1-ball, center first
        self.center_pos = np.array([pos[v] for v in center_nbr], dtype=np.int64)
        w_mat = np.zeros((len(rows), len(self.order)))
        for r, v in enumerate(rows):
            nbr, w = g.neighbors(v)
            for u, wu in zip(nbr, w):
                w_mat[r, pos[int(u)]] += wu
        self.w_mat = w_mat
        self.row_deg = w_mat.sum(axis=1)
        self.row_pos = np.array([pos[v] for v in rows], dtype=np.int64)
        self.row_mu = np.asarray([g.mu[v] for v in rows], dtype=float)
        self.nvars = len(self.order) - 1

    def pieces(self, f):
        """(functional-without-quad-term, Lf(x), Gamma f(x)) for f over the
        2-ball in ``order`` layout, f[0] = 1."""
        f_rows = f[self.row_pos]
        wf = self.w_mat @ f
        wf2 = self.w_mat @ (f * f)
        s_lin = wf - self.row_deg * f_rows
        lap = s_lin / self.row_mu
        gam = (wf2 - 2.0 * f_rows * wf + self.row_deg * f_rows * f_rows) / (2.0 * self.row_mu)
        quot = (wf2 - self.row_deg * f_rows * f_rows) / (2.0 * self.row_mu * f_rows)
        lap_x = lap[0]
        gam_x = gam[0]
        lap_gamma_x = float(np.dot(self.center_w, gam[1:] - gam_x)) / self.mu_x
        gamma_f_quot = float(np.dot(
            self.center_w,
            (f[self.center_pos] - f[0]) * (quot[1:] - quot[0])
        )) / (2.0 * self.mu_x)
        g2t = 0.5 * lap_gamma_x - gamma_f_quot
        return g2t, float(lap_x), float(gam_x)

    def value(self, f, n):
        g2t, lap_x, gam_x = self.pieces(f)
        quad = 0.0 if math.isinf(n) else lap_x * lap_x / n
        return (g2t - quad) / gam_x, lap_x, gam_x


def _objective_factory(loc, n):
    def objective(z):
        f = np.empty(loc.nvars + 1)
        f[0] = 1.0
        f[1:] = np.exp(np.clip(z, _LOG_LO, _LOG_HI))
        val, lap_x, gam_x = loc.value(f, n)
        if gam_x < 1e-14:
            return 1e8
        if lap_x > _LAP_WALL:
            # push back toward the admissible region
            return 1e4 + 1e4 * (lap_x - _LAP_WALL)
        return val
    return objective


def cde_best_K(g, x, n, opts=None):
    """Best curvature constant found at x and the witness exhibiting it.

    Multistart simplex descent over log-values with f(x) = 1; deterministic
    for a fixed seed (per-vertex substreams).  The reported value is
    recomputed through the public functional as a consistency check.
    """
    opts = opts or CdeOptions()
    nbr, _ = g.neighbors(x)
    if len(nbr) == 0:
        raise ValueError(f"vertex {x} has no neighbor")
    loc = _LocalFunctional(g, x)
    m = loc.nvars
    objective = _objective_factory(loc, n)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=opts.seed,
                                                       spawn_key=(x,)))

    # always-admissible deterministic start: dip below 1 at the center's
    # neighbors so that Lf(x) < 0
    base = np.zeros(m)
    base[loc.center_pos - 1] = math.log(0.7)
    starts = [base]

    z_samples = rng.normal(0.0, 0.8, size=(opts.samples, m))
    scored = []
    for z in z_samples:
        v = objective(z)
        if v < 1e3:  # admissible
            scored.append((v, z))
    scored.sort(key=lambda t: t[0])
    starts.extend(z for _, z in scored[: max(opts.restarts - 1, 0)])

    best_val, best_z, best_ok = math.inf, None, False
    used = 0
    stale = 0
    for z0 in starts[: opts.restarts]:
        used += 1
        res = minimize(objective, z0, method="Nelder-Mead",
                       options=dict(xatol=1e-7, fatol=min(opts.tol * 1e-2, 1e-9),
                                    maxfev=120 * m, adaptive=m > 4))
        if res.fun < best_val - opts.tol * 1e-2:
            stale = 0
        else:
            stale += 1
        if res.fun < best_val:
            best_val, best_z, best_ok = res.fun, res.x, bool(res.success)
        # restarts stop improving well within tolerance: remaining ones are spent
        if stale >= 10:
            break

    # The infimum is often approached along the degenerate ray f -> 1, where
    # plain simplex descent crawls.  Interleave scale halvings (exact rays in
    # log coordinates) with short re-alignment runs; interior minima are
    # unaffected because worse halving candidates are rejected.
    for _ in range(12):
        half = 0.5 * best_z
        v_half = objective(half)
        if v_half < best_val:
            best_val, best_z = v_half, half
        res = minimize(objective, best_z, method="Nelder-Mead",
                       options=dict(xatol=1e-9, fatol=1e-10, maxfev=60 * m,
                                    adaptive=m > 4))
        if res.fun < best_val:
            best_val, best_z, best_ok = res.fun, res.x, bool(res.success) or best_ok

    f_local = np.empty(m + 1)
    f_local[0] = 1.0
    f_local[1:] = np.exp(np.clip(best_z, _LOG_LO, _LOG_HI))
    witness = np.ones(g.n)
    witness[loc.order] = f_local
    # the public per-vertex evaluator is the source of record for the report;
    # the fast local path must agree with it up to the conditioning of the
    # ratio, which degrades as Gamma(f)(x) -> 0 in the degenerate valley
    k_public = cde_functional(g, x, n, witness)
    gam_x = operators.gamma(g, witness, x=x)
    cond_tol = 1e-9 * (1.0 + abs(k_public)) + 1e-15 / gam_x
    if abs(k_public - best_val) > cond_tol:
        raise AssertionError("local and public functional evaluations disagree")
    lap_x = operators.laplacian(g, witness, x)
    return VertexCurvature(
        vertex=int(x), n=n, k_star=float(k_public), witness=witness,
        converged=best_ok, restarts_used=used,
        boundary_proximity=float(abs(lap_x)),
    )


def _best_k_task(args):
    g, x, n, opts = args
    return cde_best_K(g, x, n, opts)


def cde_report(g, n, opts=None, workers=1):
    """Per-vertex best constants over the whole graph.

    ``workers`` > 1 distributes vertices over processes; results are
    deterministic either way because every vertex draws from its own
    substream of the seed.
    """
    opts = opts or CdeOptions()
    report = CurvatureReport(n=n)
    if workers > 1:
        tasks = [(g, x, n, opts) for x in range(g.n)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.entries = list(pool.map(_best_k_task, tasks))
    else:
        report.entries = [cde_best_K(g, x, n, opts) for x in range(g.n)]
    return report


@dataclass
class CdeHoldsResult:
    passed: bool
    min_k: float
    worst_vertex: int
    report: CurvatureReport

    def __bool__(self):
        return self.passed


def cde_holds(g, n, K, tol=1e-6, opts=None, workers=1):
    """No-violation-found check of the curvature condition with constant K."""
    report = cde_report(g, n, opts=opts, workers=workers)
    return CdeHoldsResult(
        passed=bool(report.min_k >= K - tol),
        min_k=report.min_k,
        worst_vertex=report.worst_vertex(),
        report=report,
    )
