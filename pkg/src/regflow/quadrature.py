"""Adaptive Simpson quadrature.

Small and deterministic on purpose: every integral used by the envelope and
majorant formulas goes through this one routine so that tolerances are pinned
in a single place.
"""

from .errors import QuadratureFailedError

ABS_TOL = 1e-10
MAX_DEPTH = 40


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adapt(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm, flm, left = _simpson(f, a, fa, m, fm)
    rm, frm, right = _simpson(f, m, fm, b, fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        # Richardson extrapolation of the two half-panel estimates.
        return left + right + delta / 15.0
    if depth <= 0:
        raise QuadratureFailedError(
            f"adaptive Simpson did not converge on [{a:g}, {b:g}]"
        )
    half = 0.5 * tol
    return _adapt(f, a, fa, m, fm, lm, flm, left, half, depth - 1) + _adapt(
        f, m, fm, b, fb, rm, frm, right, half, depth - 1
    )


def adaptive_simpson(f, a, b, abs_tol=ABS_TOL, max_depth=MAX_DEPTH, seed_panels=1):
    """Integrate ``f`` over [a, b] to absolute tolerance ``abs_tol``.

    ``seed_panels`` pre-splits the interval before adapting; use it when the
    integrand is concentrated in a narrow region that the first Simpson probe
    points would miss entirely.
    """
    if b < a:
        return -adaptive_simpson(f, b, a, abs_tol, max_depth, seed_panels)
    if a == b:
        return 0.0
    total = 0.0
    width = (b - a) / seed_panels
    tol = abs_tol / seed_panels
    for i in range(seed_panels):
        lo = a + i * width
        hi = a + (i + 1) * width if i + 1 < seed_panels else b
        flo, fhi = f(lo), f(hi)
        m, fm, whole = _simpson(f, lo, flo, hi, fhi)
        total += _adapt(f, lo, flo, hi, fhi, m, fm, whole, tol, max_depth)
    return total
