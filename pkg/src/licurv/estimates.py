"""Verifiers for the gradient estimates and their proof machinery.

Every check sweeps a solved heat trajectory over (vertex, time) cells and
reports left side, right side and slack = rhs - lhs of the named
inequality.  The verifiers never assume the graph satisfies the curvature
condition a caller's parameters require; they check the stated inequality
for the supplied (K, n) and leave applicability to the curvature module.

Time derivatives of sqrt(u) are always reduced analytically through the
heat equation (d/dt sqrt u / sqrt u = Lu/(2u)); finite differences appear
only inside deliberate cross-checks.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import operators
from .graphs import strong_cutoff_verify
from .heat import _spectral_factors
from .profiles import (ProfileError, alpha_phi, condition_b_check,
                       eta_tilde_value)

__all__ = [
    "InequalityReport",
    "liyau_global_check",
    "liyau_local_check",
    "liyau_strong_local_check",
    "evolution_identity_residual",
    "evolution_identity_rhs",
    "quadratic_gap",
    "hamilton_check",
    "zero_laplacian_check",
    "max_principle_check",
    "liouville_check",
    "default_time_grid",
    "time_derivative_centered",
    "solution_product",
]

S_T_THRESHOLD = -1e-12  # mask {L sqrt(u) < 0} is applied with this cut


def default_time_grid(t_min=0.05, t_max=5.0, num=25):
    """Log-spaced sweep grid; bounds are tightest at small times."""
    return np.geomspace(t_min, t_max, num)


@dataclass
class InequalityReport:
    """Per-(vertex, time) evaluation of one named inequality."""

    name: str
    params: dict
    vertices: np.ndarray
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def min_slack(self):
        return float(self.slack.min())

    def argmin(self):
        j = int(np.argmin(self.slack))
        return int(self.vertices[j]), float(self.times[j])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["inequality", "vertex", "t", "lhs", "rhs", "slack"])
            slack = self.slack
            for j in range(len(self.vertices)):
                writer.writerow([
                    self.name, int(self.vertices[j]), f"{self.times[j]:.17g}",
                    f"{self.lhs[j]:.17g}", f"{self.rhs[j]:.17g}", f"{slack[j]:.17g}",
                ])

    def summary(self):
        vertex, t = self.argmin() if len(self.vertices) else (None, None)
        return {
            "inequality": self.name,
            "params": self.params,
            "rows": int(len(self.vertices)),
            "min_slack": self.min_slack if len(self.vertices) else None,
            "argmin_vertex": vertex,
            "argmin_t": t,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _stack_report(name, params, per_time):
    vs, ts, lh, rh = [], [], [], []
    for t, verts, lhs, rhs in per_time:
        vs.append(verts)
        ts.append(np.full(len(verts), t))
        lh.append(lhs)
        rh.append(rhs)
    return InequalityReport(
        name=name, params=params,
        vertices=np.concatenate(vs) if vs else np.empty(0, dtype=np.int64),
        times=np.concatenate(ts) if ts else np.empty(0),
        lhs=np.concatenate(lh) if lh else np.empty(0),
        rhs=np.concatenate(rh) if rh else np.empty(0),
    )


def _positive_slice(sol, j):
    u = sol.values[j]
    if np.any(u <= 0):
        raise ValueError(f"solution is not positive at grid time {sol.times[j]:g}")
    return u


# -- gradient-estimate checks ----------------------------------------------------


def liyau_global_check(g, sol, profile, K, n):
    """Global estimate: Gamma(sqrt u)/u - alpha(t) Lu/(2u) <= phi(t)/2.

    t = 0 entries are skipped (phi is singular there for some profiles).
    """
    per_time = []
    all_vertices = np.arange(g.n)
    for j, t in enumerate(sol.times):
        if t <= 0:
            continue
        u = _positive_slice(sol, j)
        alpha, phi = alpha_phi(profile, K, n, t)
        s = np.sqrt(u)
        lhs = operators.gamma(g, s) / u - alpha * operators.laplacian(g, u) / (2.0 * u)
        rhs = np.full(g.n, 0.5 * phi)
        per_time.append((t, all_vertices, lhs, rhs))
    return _stack_report(
        "liyau-global",
        {"profile": profile.label, "K": K, "n": n},
        per_time,
    )


def liyau_local_check(g, sol, profile, K, n, x0, R):
    """Ball-restricted estimate with the 1/R correction term.

    Needs the profile's auxiliary (beta, eta) pair; vertices outside
    ball(x0, R) are not checked.  Global solutions qualify since they solve
    the heat equation everywhere.
    """
    data = profile.condition_a(K)
    if data is None:
        raise ProfileError(f"profile {profile.label} carries no Condition-A data")
    b = g.bounds()
    ball = g.ball(x0, R)
    per_time = []
    for j, t in enumerate(sol.times):
        if t <= 0:
            continue
        u = _positive_slice(sol, j)
        alpha, phi = alpha_phi(profile, K, n, t)
        s = np.sqrt(u)
        lhs_all = operators.gamma(g, s) / u - alpha * operators.laplacian(g, u) / (2.0 * u)
        extra = n * b.d_mu * (1.0 + b.d_omega) * alpha**2 * data.eta(t) / (R * data.beta(t))
        rhs = np.full(len(ball), 0.5 * phi + extra)
        per_time.append((t, ball, lhs_all[ball], rhs))
    return _stack_report(
        "liyau-local",
        {"profile": profile.label, "K": K, "n": n, "x0": int(x0), "R": int(R)},
        per_time,
    )


def strong_local_excess(n, c, d_mu, d_omega, R, K, alpha, eta, beta, eta_tilde):
    """The two 1/R^2 correction terms of the strong-cut-off estimate."""
    term1 = n * c * d_mu * (1.0 + R * math.sqrt(K)) * alpha**2 * eta / (R**2 * beta)
    term2 = c * n**2 * d_mu * (1.0 + d_omega) ** 2 * alpha**4 * eta_tilde / (4.0 * R**2 * beta)
    return term1 + term2


def liyau_strong_local_check(g, sol, profile, K, n, x0, R, cutoff, c):
    """Center-vertex estimate with 1/R^2 corrections under a strong cut-off.

    Preconditions: the cut-off candidate passes verification and the
    profile satisfies the two-sided growth condition (which rejects K = 0).
    """
    verdict = strong_cutoff_verify(g, cutoff, n, K, c, R)
    if not verdict.passed:
        raise ValueError(f"cut-off verification failed at vertex {verdict.witness}: "
                         f"{verdict.reason}")
    T = float(sol.times[-1])
    cond_b = condition_b_check(profile, K, T)
    if not cond_b.passed:
        raise ValueError(f"two-sided growth condition fails: {cond_b.detail}")
    et = eta_tilde_value(profile, K, T)
    data = profile.condition_a(K)
    b = g.bounds()
    per_time = []
    for j, t in enumerate(sol.times):
        if t <= 0:
            continue
        u = _positive_slice(sol, j)
        alpha, phi = alpha_phi(profile, K, n, t)
        s = np.sqrt(u)
        lhs = (operators.gamma(g, s, x=x0) / u[x0]
               - alpha * operators.laplacian(g, u, x0) / (2.0 * u[x0]))
        rhs = 0.5 * phi + strong_local_excess(
            n, c, b.d_mu, b.d_omega, R, K, alpha, data.eta(t), data.beta(t), et)
        per_time.append((t, np.array([x0]), np.array([lhs]), np.array([rhs])))
    return _stack_report(
        "liyau-strong-local",
        {"profile": profile.label, "K": K, "n": n, "x0": int(x0), "R": int(R), "c": c},
        per_time,
    )


# -- the evolution identity --------------------------------------------------------


def _coefficients(profile, K, n, t, h_scale=1e-6):
    """alpha, phi and their centered time derivatives at t."""
    h = h_scale * max(t, 1.0)
    if t - h <= 0:
        h = 0.5 * t
    a_p, p_p = alpha_phi(profile, K, n, t + h)
    a_m, p_m = alpha_phi(profile, K, n, t - h)
    alpha, phi = alpha_phi(profile, K, n, t)
    return alpha, phi, (a_p - a_m) / (2.0 * h), (p_p - p_m) / (2.0 * h), h


def solution_product(g, sol, profile, K, n, t):
    """The vector u*H at time t, H = a((2 Gamma(sqrt u) - alpha Lu)/u - phi)."""
    u = sol.slice(t)
    if np.any(u <= 0):
        raise ValueError("solution must be positive")
    alpha, phi = alpha_phi(profile, K, n, t)
    a = profile.a(t, K)
    s = np.sqrt(u)
    return a * (2.0 * operators.gamma(g, s) - alpha * operators.laplacian(g, u) - phi * u)


def evolution_identity_rhs(g, sol, profile, K, n, t, h_scale=1e-6):
    """Right side of the evolution identity for u*H, as a vertex vector:

        4 a G2~(sqrt u) + (a alpha)' Lu - 2 a' Gamma(sqrt u) + (a phi)' u

    The product derivatives are centered differences of t -> a alpha and
    t -> a phi.
    """
    u = sol.slice(t)
    if np.any(u <= 0):
        raise ValueError("solution must be positive")
    s = np.sqrt(u)
    a = profile.a(t, K)
    h = h_scale * max(t, 1.0)
    if t - h <= 0:
        h = 0.5 * t

    def products(tt):
        al, ph = alpha_phi(profile, K, n, tt)
        av = profile.a(tt, K)
        return av * al, av * ph

    pa_p, pp_p = products(t + h)
    pa_m, pp_m = products(t - h)
    d_a_alpha = (pa_p - pa_m) / (2.0 * h)
    d_a_phi = (pp_p - pp_m) / (2.0 * h)
    lu = operators.laplacian(g, u)
    return (4.0 * a * operators.gamma2_tilde(g, s)
            + d_a_alpha * lu
            - 2.0 * profile.a_prime(t, K) * operators.gamma(g, s)
            + d_a_phi * u)


@dataclass
class IdentityResidual:
    residual: float
    scale: float
    lhs: float
    rhs: float


def evolution_identity_residual(g, sol, profile, K, n, x, t):
    """Independent two-sided evaluation of the evolution identity at (x, t).

    Left side: spatial generator applied to the u*H slice minus the analytic
    time derivative (all time derivatives reduced through the heat equation,
    with alpha' and phi' differenced individually).  Right side: the
    displayed combination with the product derivatives differenced.  The
    residual is zero up to differencing noise; ``scale`` collects the term
    magnitudes for relative comparison.
    """
    u = sol.slice(t)
    if np.any(u <= 0):
        raise ValueError("solution must be positive")
    s = np.sqrt(u)
    a = profile.a(t, K)
    ap = profile.a_prime(t, K)
    alpha, phi, alpha_d, phi_d, _ = _coefficients(profile, K, n, t)

    gs = operators.gamma(g, s)
    lu = operators.laplacian(g, u)
    uh = a * (2.0 * gs - alpha * lu - phi * u)

    lap_uh_x = operators.laplacian(g, uh, x)
    dt_gamma_x = 2.0 * operators.gamma(g, s, lu / (2.0 * s), x)
    lap_lu_x = operators.laplacian(g, lu, x)
    dt_uh_x = (ap * (2.0 * gs[x] - alpha * lu[x] - phi * u[x])
               + a * (2.0 * dt_gamma_x - alpha_d * lu[x] - alpha * lap_lu_x
                      - phi_d * u[x] - phi * lu[x]))
    lhs = lap_uh_x - dt_uh_x

    rhs_vec = evolution_identity_rhs(g, sol, profile, K, n, t)
    rhs = float(rhs_vec[x])

    g2t_term = 4.0 * a * operators.gamma2_tilde(g, s, x)
    scale = (1.0 + abs(g2t_term) + abs((a * alpha_d + ap * alpha) * lu[x])
             + abs(2.0 * ap * gs[x]) + abs((a * phi_d + ap * phi) * u[x]))
    return IdentityResidual(residual=lhs - rhs, scale=scale, lhs=lhs, rhs=rhs)


def quadratic_gap(g, sol, profile, K, n, t):
    """Gap between the evolution-identity right side and its quadratic lower
    bound (a u / n)((2 Gamma(sqrt u) - Lu)/u - n a'/(2a) - n K)^2, per vertex.

    Nonnegative on the mask {L sqrt(u) < 0} whenever the graph satisfies the
    curvature condition used to derive it.
    """
    u = sol.slice(t)
    s = np.sqrt(u)
    ke = profile.k_eff(K)
    a = profile.a(t, K)
    ap = profile.a_prime(t, K)
    rhs = evolution_identity_rhs(g, sol, profile, K, n, t)
    gs = operators.gamma(g, s)
    lu = operators.laplacian(g, u)
    inner = (2.0 * gs - lu) / u - n * ap / (2.0 * a) - n * ke
    return rhs - (a * u / n) * inner**2


# -- Hamilton-type estimate --------------------------------------------------------


def hamilton_check(g, sol, K, bound=None):
    """Two bounds on Gamma(sqrt u) for bounded positive solutions.

    base:    Gamma(sqrt u) <= |Lu|/2 + (1 + 2Kt) sqrt(A) sqrt(u) / t
    variant: Gamma(sqrt u) <= |Lu|/2 + (1/t + max(2K, D_mu)) sqrt(A) sqrt(u)

    ``bound`` defaults to A = max u0, which the maximum principle turns into
    a uniform bound on u.  Returns one report per variant.
    """
    a_bound = float(sol.values[0].max()) if bound is None else float(bound)
    sqrt_a = math.sqrt(a_bound)
    d_mu = g.bounds().d_mu
    all_vertices = np.arange(g.n)
    base_rows, variant_rows = [], []
    for j, t in enumerate(sol.times):
        if t <= 0:
            continue
        u = _positive_slice(sol, j)
        s = np.sqrt(u)
        lhs = operators.gamma(g, s)
        half_abs = 0.5 * np.abs(operators.laplacian(g, u))
        base_rows.append((t, all_vertices, lhs,
                          half_abs + (1.0 + 2.0 * K * t) * sqrt_a * s / t))
        variant_rows.append((t, all_vertices, lhs,
                             half_abs + (1.0 / t + max(2.0 * K, d_mu)) * sqrt_a * s))
    params = {"K": K, "A": a_bound}
    return [
        _stack_report("hamilton", params, base_rows),
        _stack_report("hamilton-remark", params, variant_rows),
    ]


# -- sign persistence at zero-Laplacian points --------------------------------------


def time_derivative_centered(times, values):
    """Nonuniform 3-point time derivatives of (T, n) grid values.

    Endpoint rows use one-sided differences and should be excluded from any
    inequality screening.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    out[0] = (values[1] - values[0]) / (times[1] - times[0])
    out[-1] = (values[-1] - values[-2]) / (times[-1] - times[-2])
    for j in range(1, len(times) - 1):
        h1 = times[j] - times[j - 1]
        h2 = times[j + 1] - times[j]
        out[j] = (h1**2 * values[j + 1] + (h2**2 - h1**2) * values[j]
                  - h2**2 * values[j - 1]) / (h1 * h2 * (h1 + h2))
    return out


@dataclass
class ZeroLaplacianReport:
    passed: bool
    points: int
    min_value: float
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def zero_laplacian_check(g, sol, tol=1e-12, violation_bar=-1e-6):
    """Screen grid points with Lu ~ 0 for (L - d/dt)|Lu| >= 0.

    Differentiability of |Lu| in time is not certified; this only evaluates
    the quantity at near-zero-Laplacian cells (|Lu| <= tol * scale) on
    interior grid times, with the time derivative taken by centered
    differences of |Lu| on the grid.
    """
    if len(sol.times) < 3:
        raise ValueError("need at least 3 grid times")
    lap_all = np.stack([operators.laplacian(g, sol.values[j])
                        for j in range(len(sol.times))])
    abs_lap = np.abs(lap_all)
    scale = max(1.0, float(abs_lap.max()))
    dt_abs = time_derivative_centered(sol.times, abs_lap)
    points, min_val, violations = 0, math.inf, []
    for j in range(1, len(sol.times) - 1):
        lap_abs_slice = operators.laplacian(g, abs_lap[j])
        for x in np.flatnonzero(abs_lap[j] <= tol * scale):
            val = float(lap_abs_slice[x] - dt_abs[j, x])
            points += 1
            min_val = min(min_val, val)
            if val < violation_bar:
                violations.append((int(x), float(sol.times[j]), val))
    return ZeroLaplacianReport(passed=not violations, points=points,
                               min_value=min_val if points else math.nan,
                               violations=violations)


# -- maximum-principle harness -------------------------------------------------------


@dataclass
class MaxPrincipleReport:
    passed: bool
    hypothesis_ok: bool
    conclusion_ok: bool
    max_value: float
    witness: tuple | None = None

    def __bool__(self):
        return self.passed


def max_principle_check(g, times, F, mask, mode="weak", hyp=None, tol=1e-9,
                        boundary=None, hyp_tol=1e-8):
    """Harness for conditional maximum principles on V x grid.

    Preconditions (violations raise): the boundary slice (default F at the
    first grid time) is <= tol, and F <= tol off the mask at positive times.
    The differential hypothesis (L - d/dt)F >= 0 ("weak") or > 0 ("strict")
    is then verified on the masked cells, either from the supplied ``hyp``
    array or numerically (spatial generator per slice, centered time
    differences on interior rows).  When the hypothesis holds, the
    conclusion F <= tol must hold everywhere; the first offending cell is
    reported.  A failed hypothesis makes the principle inapplicable and the
    check vacuously passes with ``hypothesis_ok=False``.
    """
    times = np.asarray(times, dtype=float)
    F = np.asarray(F, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if F.shape != (len(times), g.n) or mask.shape != F.shape:
        raise ValueError("F and mask must be (num_times, num_vertices)")
    bvals = F[0] if boundary is None else np.asarray(boundary, dtype=float)
    if np.any(bvals > tol):
        raise ValueError("boundary slice violates F <= 0")
    off = ~mask
    off_rows = off.copy()
    if boundary is None:
        off_rows[0] = False  # first row is the boundary slice
    if np.any(F[off_rows] > tol):
        j, x = np.argwhere((F > tol) & off_rows)[0]
        raise ValueError(f"F > 0 off the mask at (t={times[j]:g}, x={x})")

    if hyp is None:
        hyp = np.full_like(F, np.nan)
        dt_f = time_derivative_centered(times, F)
        for j in range(1, len(times) - 1):
            hyp[j] = operators.laplacian(g, F[j]) - dt_f[j]
        check_rows = slice(1, len(times) - 1)
    else:
        hyp = np.asarray(hyp, dtype=float)
        check_rows = slice(0, len(times))

    scale = max(1.0, float(np.nanmax(np.abs(hyp))))
    sub_mask = mask[check_rows]
    sub_hyp = hyp[check_rows]
    if mode == "weak":
        hypothesis_ok = bool(np.all(sub_hyp[sub_mask] >= -hyp_tol * scale))
    elif mode == "strict":
        hypothesis_ok = bool(np.all(sub_hyp[sub_mask] > 0.0))
    else:
        raise ValueError("mode must be 'weak' or 'strict'")

    max_value = float(F.max())
    conclusion_ok = max_value <= tol
    witness = None
    if hypothesis_ok and not conclusion_ok:
        j, x = np.argwhere(F > tol)[0]
        witness = (float(times[j]), int(x))
    passed = conclusion_ok or not hypothesis_ok
    return MaxPrincipleReport(passed=passed, hypothesis_ok=hypothesis_ok,
                              conclusion_ok=conclusion_ok, max_value=max_value,
                              witness=witness)


# -- Liouville property ---------------------------------------------------------------


@dataclass
class LiouvilleReport:
    passed: bool
    kernel_dim: int
    constancy_residual: float

    def __bool__(self):
        return self.passed


def liouville_check(g, which="finite_n"):
    """Kernel of the generator must be exactly the constants.

    ``which`` labels which corollary the caller is exercising (harmonic
    functions under the finite-n condition, or bounded ones under the
    infinite-n condition); the numerical content is the same kernel
    computation.
    """
    if which not in ("finite_n", "infinite_n"):
        raise ValueError("which must be 'finite_n' or 'infinite_n'")
    lam, u_basis, _ = _spectral_factors(g)
    scale = max(1.0, float(np.abs(lam).max()))
    kernel = np.flatnonzero(np.abs(lam) <= 1e-10 * scale)
    dim = int(len(kernel))
    if dim == 0:
        return LiouvilleReport(False, 0, math.inf)
    vec = u_basis[:, kernel[-1]]
    residual = float(np.linalg.norm(vec - vec.mean()) / np.linalg.norm(vec))
    return LiouvilleReport(passed=(dim == 1 and residual <= 1e-10),
                           kernel_dim=dim, constancy_residual=residual)
