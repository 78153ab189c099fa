"""Acceptance suite: every exit criterion as one callable check.

Each criterion function returns a :class:`CriterionResult`; ``run_all``
prints one pass/fail line per criterion.  The pytest acceptance module
wraps the same functions, so the CLI ``selftest`` subcommand and the test
suite certify exactly the same statements at the same tolerances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import estimates, harnack, heat, operators
from .curvature import cde_report
from .estimates import S_T_THRESHOLD
from .graphs import WeightedGraph, generate
from .profiles import (RateProfile, alpha_phi, condition_a_check,
                       condition_b_check, ode_system_residuals)

__all__ = ["CriterionResult", "run_all", "CRITERIA"]


@dataclass
class CriterionResult:
    name: str
    passed: bool
    runtime: float
    detail: str = ""
    failures: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def _zoo(weight_seed, mu_seed):
    """The five reference graphs with random weights and random measures."""
    rng = np.random.default_rng(mu_seed)
    graphs = []
    for family, params in [("path", (5,)), ("cycle", (6,)), ("torus", (2, 5)),
                           ("hypercube", (3,)), ("complete", (4,))]:
        g = generate(family, params, weighting="random", weight_seed=weight_seed)
        mu = rng.uniform(0.5, 2.0, g.n)
        edges = np.column_stack([g.edge_u, g.edge_v])
        graphs.append(WeightedGraph(g.n, edges, g.edge_w, mu, name=g.name))
    return graphs


def criterion_1_operator_identities():
    """Square-root identity, iterated-form identity and integration by parts
    over 100 random positive functions on the graph zoo."""
    t0 = time.time()
    failures = []
    worst = {"id": 0.0, "iter": 0.0, "ibp": 0.0}
    rng = np.random.default_rng(11)
    graphs = _zoo(weight_seed=3, mu_seed=5)
    for g in graphs:
        for _ in range(20):
            f = rng.uniform(0.2, 3.0, g.n)
            h = rng.uniform(0.2, 3.0, g.n)
            s = np.sqrt(f)
            res = operators.sqrt_identity_residual(g, f)
            rel = np.abs(res) / (1.0 + np.abs(operators.laplacian(g, s)))
            worst["id"] = max(worst["id"], float(rel.max()))
            if rel.max() > 1e-12:
                failures.append(f"sqrt identity {rel.max():.2e} on {g.name}")

            lhs = operators.gamma2_tilde(g, f)
            rhs = operators.gamma2(g, f) - operators.gamma(
                g, f, operators.gamma(g, f) / f)
            rel = np.abs(lhs - rhs) / (1.0 + np.abs(lhs))
            worst["iter"] = max(worst["iter"], float(rel.max()))
            if rel.max() > 1e-12:
                failures.append(f"iterated-form identity {rel.max():.2e} on {g.name}")

            lap_h = operators.laplacian(g, h)
            total = abs(operators.mass_weighted_sum(g, lap_h))
            scale = operators.mass_weighted_sum(g, np.abs(lap_h)) + 1.0
            pairing = abs(operators.mass_weighted_sum(g, operators.gamma(g, f, h))
                          + operators.mass_weighted_sum(g, f * lap_h))
            pscale = operators.mass_weighted_sum(g, np.abs(f * lap_h)) + 1.0
            worst["ibp"] = max(worst["ibp"], total / scale, pairing / pscale)
            if total / scale > 1e-11 or pairing / pscale > 1e-11:
                failures.append(f"integration by parts on {g.name}")
    detail = (f"sqrt-id {worst['id']:.1e}, iterated {worst['iter']:.1e}, "
              f"parts {worst['ibp']:.1e} (bars 1e-12/1e-12/1e-11)")
    return CriterionResult("1 operator identities", not failures,
                           time.time() - t0, detail, failures)


def criterion_2_semigroup():
    """Mass conservation, kernel symmetry and stochasticity, the semigroup
    law and the independent fourth-order stepper on the 5-torus."""
    t0 = time.time()
    failures = []
    g = generate("torus", (2, 5), measure="degree")
    u0 = heat.delta_initial(g, 0)
    sol = heat.evolve(g, u0, np.geomspace(0.05, 5.0, 25))

    mass = sol.mass()
    drift = float(np.abs(mass - mass[0]).max() / abs(mass[0]))
    if drift > 1e-10:
        failures.append(f"mass drift {drift:.2e}")

    ker = heat.heat_kernel(g, 1.0)
    sym = float(np.abs(ker.values - ker.values.T).max())
    if sym > 1e-12:
        failures.append(f"kernel asymmetry {sym:.2e}")
    stoch = float(np.abs(ker.values @ g.mu - 1.0).max())
    if stoch > 1e-10:
        failures.append(f"stochasticity defect {stoch:.2e}")

    law = float(np.abs(heat.propagator(g, 0.3) @ heat.propagator(g, 0.7)
                       - heat.propagator(g, 1.0)).max())
    if law > 1e-10:
        failures.append(f"semigroup law defect {law:.2e}")

    rk4 = heat.rk4_evolve(g, u0, 2.0, dt=1e-3)
    versus = float(np.abs(sol.slice(2.0) - rk4).max())
    if versus > 1e-6:
        failures.append(f"spectral vs fourth-order stepper {versus:.2e}")

    detail = (f"drift {drift:.1e}, sym {sym:.1e}, stoch {stoch:.1e}, "
              f"law {law:.1e}, stepper {versus:.1e}")
    return CriterionResult("2 semigroup", not failures, time.time() - t0,
                           detail, failures)


def criterion_3_curvature_regression():
    """Best-constant regression on the 5-torus with the degree measure."""
    t0 = time.time()
    failures = []
    g = generate("torus", (2, 5), measure="degree")
    rep2 = cde_report(g, 2.0)
    rep4 = cde_report(g, 4.0)
    rep_inf = cde_report(g, math.inf)
    if rep4.min_k < -1e-5:
        failures.append(f"min K*(x,4) = {rep4.min_k:.2e} < -1e-5")
    spread = float(rep4.k_star.max() - rep4.k_star.min())
    if spread > 1e-5:
        failures.append(f"transitivity spread {spread:.2e} > 1e-5")
    if not np.all(rep2.k_star <= rep4.k_star + 1e-6):
        failures.append("monotonicity n=2 vs n=4 fails")
    if not np.all(rep4.k_star <= rep_inf.k_star + 1e-6):
        failures.append("monotonicity n=4 vs infinite n fails")
    detail = (f"min K*(x,4) {rep4.min_k:.2e}, spread {spread:.2e}, "
              f"min K*(x,2) {rep2.min_k:.2e}, min K*(x,inf) {rep_inf.min_k:.2e}")
    return CriterionResult("3 curvature regression", not failures,
                           time.time() - t0, detail, failures)


def _torus_solution():
    g = generate("torus", (2, 5), measure="degree")
    sol = heat.evolve(g, heat.delta_initial(g, 0), estimates.default_time_grid())
    return g, sol


def criterion_4_liyau_global():
    """Global gradient estimate on the 5-torus for four profile/K pairs."""
    t0 = time.time()
    failures = []
    g, sol = _torus_solution()
    k_adapt = max(0.0, -cde_report(g, 4.0).min_k) + 0.01
    cases = [
        (RateProfile("power", gamma=2.0), 0.0),
        (RateProfile("power", gamma=2.0), k_adapt),
        (RateProfile("sinh_sq"), k_adapt),
        (RateProfile("exp_sq", gamma=1.0), k_adapt),
    ]
    slacks = []
    for profile, K in cases:
        report = estimates.liyau_global_check(g, sol, profile, K, 4.0)
        slacks.append((profile.label, K, report.min_slack))
        if report.min_slack < -1e-9:
            failures.append(f"{profile.label} K={K:g}: min slack "
                            f"{report.min_slack:.2e}")
    detail = "; ".join(f"{lbl} K={K:g}: {s:.2e}" for lbl, K, s in slacks)
    return CriterionResult("4 global gradient estimate", not failures,
                           time.time() - t0, detail, failures)


def criterion_5_profile_algebra():
    """Closed forms vs quadrature, the coefficient system, and both growth
    conditions for the example profiles."""
    t0 = time.time()
    failures = []
    K = 0.8
    profiles = [
        (RateProfile("power", gamma=2.0), K),
        (RateProfile("power", gamma=1.5), 0.0),
        (RateProfile("power_cubic", gamma=1.0), K),
        (RateProfile("sinh_sq"), K),
        (RateProfile("exp_sq", gamma=1.0), K),
        (RateProfile("exp_sq", gamma=-0.5), K),
        (RateProfile("exp_beta", b=2.0, sign="-"), K),
        (RateProfile("exp_beta", b=1.5, sign="+"), K),
    ]
    worst_quad, worst_ode = 0.0, 0.0
    for profile, k_val in profiles:
        top = 5.0
        tm = profile.t_max(k_val) if profile.needs_positive_K else math.inf
        if math.isfinite(tm):
            top = min(top, 0.98 * tm)
        for t in np.geomspace(0.05, top, 9):
            ac, pc = alpha_phi(profile, k_val, 4.0, t)
            aq, pq = alpha_phi(profile, k_val, 4.0, t, method="quadrature")
            rel = max(abs(ac - aq) / (1.0 + abs(ac)), abs(pc - pq) / (1.0 + abs(pc)))
            worst_quad = max(worst_quad, rel)
            if rel > 1e-9:
                failures.append(f"{profile.label} closed vs quadrature {rel:.2e}")
            r1, r2, r3 = ode_system_residuals(profile, k_val, 4.0, t)
            a = profile.a(t, k_val)
            ap = profile.a_prime(t, k_val)
            ke = profile.k_eff(k_val)
            eta = 4.0 * ap / (2.0 * a) + 4.0 * ke
            scales = (1.0 + abs(ap) + abs(2.0 * a * eta / 4.0),
                      1.0 + abs(ap) + abs(4.0 * ke * a),
                      1.0 + abs(a * eta * eta / 4.0))
            rel = max(abs(r1) / scales[0], abs(r2) / scales[1], abs(r3) / scales[2])
            worst_ode = max(worst_ode, rel)
            if rel > 1e-6:
                failures.append(f"{profile.label} system residual {rel:.2e} at t={t:g}")

    for profile, k_val in [(RateProfile("power", gamma=1.5), 0.7),
                           (RateProfile("power", gamma=2.0), 0.7),
                           (RateProfile("power", gamma=2.5), 0.7),
                           (RateProfile("power", gamma=2.0), 0.0),
                           (RateProfile("sinh_sq"), 0.7),
                           (RateProfile("exp_beta", b=2.0, sign="-"), 0.7)]:
        check = condition_a_check(profile, k_val, 3.0)
        if not check.passed:
            failures.append(f"Condition A fails for {profile.label} K={k_val:g}: "
                            f"{check.detail}")
    for profile in [RateProfile("power", gamma=2.0), RateProfile("sinh_sq"),
                    RateProfile("exp_beta", b=2.0, sign="-"),
                    RateProfile("exp_beta", b=1.5, sign="+")]:
        check = condition_b_check(profile, 0.7, 3.0)
        if not check.passed:
            failures.append(f"Condition B fails for {profile.label}: {check.detail}")
    detail = f"closed-vs-quadrature {worst_quad:.1e}, system residuals {worst_ode:.1e}"
    return CriterionResult("5 profile algebra", not failures, time.time() - t0,
                           detail, failures)


def criterion_6_evolution_identity():
    """Two-sided evaluation of the evolution identity on 50 random draws."""
    t0 = time.time()
    failures = []
    rng = np.random.default_rng(21)
    graphs = _zoo(weight_seed=7, mu_seed=9)
    kinds = [
        (RateProfile("power", gamma=2.0), 0.0),
        (RateProfile("power", gamma=2.0), 0.5),
        (RateProfile("power", gamma=1.5), 0.5),
        (RateProfile("power_cubic", gamma=1.0), 0.5),
        (RateProfile("sinh_sq"), 0.5),
        (RateProfile("exp_sq", gamma=1.0), 0.5),
    ]
    worst = 0.0
    for i in range(50):
        g = graphs[i % len(graphs)]
        profile, K = kinds[i % len(kinds)]
        u0 = rng.uniform(0.3, 2.0, g.n)
        t_draw = float(rng.uniform(0.1, 3.0))
        sol = heat.evolve(g, u0, np.array([0.0, t_draw, t_draw + 1.0]))
        x = int(rng.integers(0, g.n))
        res = estimates.evolution_identity_residual(g, sol, profile, K, 4.0,
                                                    x, t_draw)
        rel = abs(res.residual) / res.scale
        worst = max(worst, rel)
        if rel > 1e-8:
            failures.append(f"draw {i} ({g.name}, {profile.label}): {rel:.2e}")
    detail = f"worst |residual|/scale {worst:.1e} over 50 draws (bar 1e-8)"
    return CriterionResult("6 evolution identity", not failures,
                           time.time() - t0, detail, failures)


def criterion_7_hamilton():
    """Both bounded-solution gradient bounds on the 5-torus at K = 0."""
    t0 = time.time()
    failures = []
    g, sol = _torus_solution()
    reports = estimates.hamilton_check(g, sol, 0.0)
    for report in reports:
        if report.min_slack < -1e-9:
            failures.append(f"{report.name}: min slack {report.min_slack:.2e}")
    detail = "; ".join(f"{r.name}: {r.min_slack:.2e}" for r in reports)
    return CriterionResult("7 bounded-solution gradient bound", not failures,
                           time.time() - t0, detail, failures)


def criterion_8_rho_and_harnack():
    """Transport-cost algebra, closed-form transport bounds, the chaining
    inequality and the zero-curvature Harnack display."""
    t0 = time.time()
    failures = []
    rng = np.random.default_rng(31)

    g = generate("path", (4,), weighting="random", weight_seed=2)
    b = g.bounds()
    r = harnack.rho_compute(g, 1, 2, 1.0, 2.5)
    exact = 2.0 * b.mu_max / (b.omega_min * 1.5)
    if abs(r.rho - exact) > 1e-12 * exact:
        failures.append(f"adjacent-pair cost {r.rho:.17g} != {exact:.17g}")

    graphs = _zoo(weight_seed=13, mu_seed=17)
    checked = 0
    for regime in ("power", "sinh", "exp_beta"):
        for _ in range(50):
            gg = graphs[int(rng.integers(0, len(graphs)))]
            x = int(rng.integers(0, gg.n))
            y = int(rng.integers(0, gg.n))
            if x == y:
                y = (y + 1) % gg.n
            d = gg.distance(x, y)
            bb = gg.bounds()
            T1 = float(rng.uniform(0.3, 1.5))
            span = float(rng.uniform(0.3, 2.0))
            T2 = T1 + span
            if regime == "power":
                gamma = float(rng.uniform(1.1, 2.9))
                K = float(rng.uniform(0.0, 1.0))
                alpha = harnack.AffineAlpha(1.0, 2.0 * K / (1.0 + gamma))
                bound = harnack.rho_closed_form_bound(
                    "power", K, gamma, d, T1, T2, bb.mu_max, bb.omega_min)
            elif regime == "sinh":
                K = float(rng.uniform(0.1, 1.0))
                prof = RateProfile("sinh_sq")

                def alpha(t, _K=K, _p=prof):
                    return alpha_phi(_p, _K, 4.0, t)[0]

                bound = harnack.rho_closed_form_bound(
                    "sinh", K, None, d, T1, T2, bb.mu_max, bb.omega_min)
                if T2 < T1 * (d + 1):
                    refined = harnack.rho_closed_form_bound(
                        "sinh", K, None, d, T1, T2, bb.mu_max, bb.omega_min,
                        variant="log_sinh")
                    bound = min(bound, refined) if refined >= 0 else bound
                if K * T2 < 0.9:
                    small = harnack.rho_closed_form_bound(
                        "sinh", K, None, d, T1, T2, bb.mu_max, bb.omega_min,
                        variant="small_time", delta=0.9)
                    bound = min(bound, small)
            else:
                shape = float(rng.uniform(1.1, 2.0))
                K = float(rng.uniform(0.1, 0.5))
                limit = (1.0 + shape) * math.log(1.0 + shape) / (2.0 * K)
                T1 = float(rng.uniform(0.05, 0.4)) * limit
                T2 = T1 + float(rng.uniform(0.1, 0.5)) * (limit - T1)
                prof = RateProfile("exp_beta", b=shape, sign="-")

                def alpha(t, _K=K, _p=prof):
                    return alpha_phi(_p, _K, 4.0, t)[0]

                bound = harnack.rho_closed_form_bound(
                    "exp_beta", K, shape, d, T1, T2, bb.mu_max, bb.omega_min)
            rho = harnack.rho_compute(gg, x, y, T1, T2, alpha=alpha).rho
            checked += 1
            if rho > bound * (1.0 + 1e-9):
                failures.append(f"{regime}: cost {rho:.6g} exceeds bound {bound:.6g}")

    gt = generate("torus", (2, 5), measure="degree")
    sol = heat.evolve(gt, heat.delta_initial(gt, 0), estimates.default_time_grid())
    profile = RateProfile("power", gamma=2.0)
    worst_log = math.inf
    for _ in range(20):
        x = int(rng.integers(0, gt.n))
        y = int(rng.integers(0, gt.n))
        T1 = float(rng.uniform(0.3, 2.0))
        T2 = T1 + float(rng.uniform(0.3, 2.5))
        report = harnack.harnack_check(gt, sol, x, y, T1, T2, profile, 0.0, 4.0)
        slack = report.form("zero-curvature").log_slack
        worst_log = min(worst_log, slack, report.form("general").log_slack)
        if slack < -1e-9:
            failures.append(f"zero-curvature display fails at ({x},{y}): {slack:.2e}")

    worst_chain = math.inf
    for _ in range(1000):
        T1 = float(rng.uniform(0.2, 2.0))
        T2 = T1 + float(rng.uniform(0.3, 2.0))
        psi_c = rng.uniform(-2.0, 2.0, 4)
        alpha_c = rng.uniform(-1.0, 1.0, 3)

        def psi(t, c=psi_c):
            return np.polyval(c, t)

        def alpha_fn(t, c=alpha_c):
            return np.polyval(c, t) ** 2 + 0.1

        _, _, slack = harnack.chaining_minimum_bound_check(psi, alpha_fn, T1, T2)
        worst_chain = min(worst_chain, slack)
        if slack < -1e-8:
            failures.append(f"chaining inequality slack {slack:.2e}")
    detail = (f"{checked} transport bounds, worst Harnack log-slack "
              f"{worst_log:.1e}, worst chaining slack {worst_chain:.1e}")
    return CriterionResult("8 transport cost and Harnack", not failures,
                           time.time() - t0, detail, failures)


def criterion_9_kernel_bounds():
    """Kernel bound bands on the 7-torus at zero curvature."""
    t0 = time.time()
    failures = []
    g = generate("torus", (2, 7), measure="degree")
    t_grid = np.geomspace(1.5, 20.0, 25)
    for x, y in [(0, 0), (0, 1)]:
        report = harnack.kernel_bounds_check(g, x, y, t_grid, 0.0, 4.0)
        band = report.band("upper-volume").band
        if band > 10.0:
            failures.append(f"upper band {band:.3g} > 10 at ({x},{y})")
        fit = report.fit("lower-gaussian")
        if fit.min_residual < -1e-12:
            failures.append(f"lower fit residual {fit.min_residual:.2e} at ({x},{y})")
        if x == 0 and y == 0:
            detail = (f"band(x=y) {band:.3g}, gaussian fit c={fit.constant:.3g} "
                      f"rate={fit.gaussian_rate:.3g}")
    return CriterionResult("9 kernel bound bands", not failures,
                           time.time() - t0, detail, failures)


def criterion_10_max_principle_and_liouville():
    """Replay of the proof object through the maximum-principle harness, and
    the kernel-of-the-generator characterization."""
    t0 = time.time()
    failures = []
    g, sol = _torus_solution()
    profile = RateProfile("power", gamma=2.0)
    K, n = 0.0, 4.0
    times = sol.times
    F = np.stack([estimates.solution_product(g, sol, profile, K, n, t)
                  for t in times])
    mask = np.stack([
        operators.laplacian(g, np.sqrt(sol.values[j])) < S_T_THRESHOLD
        for j in range(len(times))])
    hyp = np.stack([estimates.evolution_identity_rhs(g, sol, profile, K, n, t)
                    for t in times])
    verdict = estimates.max_principle_check(
        g, times, F, mask, mode="weak", hyp=hyp,
        boundary=np.zeros(g.n), tol=1e-9)
    if not verdict.hypothesis_ok:
        failures.append("differential hypothesis fails on the mask")
    if not verdict.conclusion_ok:
        failures.append(f"conclusion fails at {verdict.witness}")

    for family, params in [("path", (5,)), ("cycle", (6,)), ("torus", (2, 5)),
                           ("hypercube", (3,)), ("complete", (4,))]:
        gg = generate(family, params)
        if not estimates.liouville_check(gg).passed:
            failures.append(f"kernel check fails on {gg.name}")
    cycle_edges = [(i, (i + 1) % 5) for i in range(5)]
    cycle_edges += [(5 + i, 5 + (i + 1) % 5) for i in range(5)]
    two = WeightedGraph(10, cycle_edges, np.ones(10), np.ones(10))
    split = estimates.liouville_check(two)
    if split.passed or split.kernel_dim != 2:
        failures.append("two-component graph not rejected")
    detail = (f"replay max {verdict.max_value:.2e}, "
              f"two-component kernel dim {split.kernel_dim}")
    return CriterionResult("10 maximum principle and Liouville", not failures,
                           time.time() - t0, detail, failures)


CRITERIA = [
    criterion_1_operator_identities,
    criterion_2_semigroup,
    criterion_3_curvature_regression,
    criterion_4_liyau_global,
    criterion_5_profile_algebra,
    criterion_6_evolution_identity,
    criterion_7_hamilton,
    criterion_8_rho_and_harnack,
    criterion_9_kernel_bounds,
    criterion_10_max_principle_and_liouville,
]


def run_all(verbose=True):
    results = []
    for criterion in CRITERIA:
        result = criterion()
        results.append(result)
        if verbose:
            status = "PASS" if result.passed else "FAIL"
            print(f"{status} {result.name} ({result.runtime:.1f}s): {result.detail}")
            for f in result.failures:
                print(f"     - {f}")
    return results


if __name__ == "__main__":
    all_results = run_all()
    raise SystemExit(0 if all(r.passed for r in all_results) else 1)
