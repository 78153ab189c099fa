"""Adaptive Simpson quadrature.

Small dependency-free integrator used for the rate-function integrals,
the walk-cost double integrals and the Harnack exponents.  Integrands at
desk scale are smooth away from t=0, so recursive Simpson with Richardson
acceptance is sufficient; endpoint singularities are handled analytically
by the callers.
"""

from __future__ import annotations

__all__ = ["adaptive_simpson", "double_time_integral"]


def _recurse(f, a, fa, b, fb, m, fm, whole, eps, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * eps:
        # Richardson extrapolation of the two halves
        return left + right + delta / 15.0
    return (
        _recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1)
        + _recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1)
    )


def adaptive_simpson(f, a, b, rel_tol=1e-11, abs_tol=1e-14, max_depth=48):
    """Integrate ``f`` on [a, b] to the requested tolerance.

    The acceptance threshold is anchored to the scale of the whole integral
    (rough 3-panel estimate), so the relative tolerance is global, not per
    subinterval.  ``f`` must be finite on the closed interval; callers strip
    integrable endpoint singularities before getting here, and split wildly
    varying ranges themselves so the rough scale estimate is meaningful.
    """
    if b < a:
        return -adaptive_simpson(f, b, a, rel_tol, abs_tol, max_depth)
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    rough = ((m - a) / 6.0 * (fa + 4.0 * flm + fm)
             + (b - m) / 6.0 * (fm + 4.0 * frm + fb))
    eps = max(abs_tol, rel_tol * abs(rough))
    return (_recurse(f, a, fa, m, fm, lm, flm,
                     (m - a) / 6.0 * (fa + 4.0 * flm + fm), 0.5 * eps, max_depth)
            + _recurse(f, m, fm, b, fb, rm, frm,
                       (b - m) / 6.0 * (fm + 4.0 * frm + fb), 0.5 * eps, max_depth))


def double_time_integral(alpha, a, b, rel_tol=1e-11, abs_tol=1e-14):
    """Iterated integral of ``alpha`` over the triangle a <= v <= s <= b.

    Equals the single weighted integral of alpha(v)*(b - v), which is how
    it is evaluated; tests cross-check against literal nested quadrature.
    """
    return adaptive_simpson(lambda v: alpha(v) * (b - v), a, b, rel_tol, abs_tol)
