"""Numerical kernels shared by the analytic rate engine.

Gauss hypergeometric evaluation on the real axis, chord geometry of a disk,
closed forms for the radial path-loss integrals that appear inside Laplace
functionals of Poisson deployments, and the log-to-integral identity that
turns a pair of Laplace transforms into an ergodic rate.

All closed forms come from one antiderivative identity. With
F(z) = 2F1(a, b; a+1; z) it holds that a*F + z*F' = a*(1-z)^(-b), hence for
z(u) = -s * u^(-alpha):

    d/du [ u^2/2 * (F(z(u)) - 1) ] = -u * (1 - (1 + s u^-alpha)^(-b))   a = -2/alpha
    d/du [ u     * (G(z(u)) - 1) ] =     -(1 - (1 + s u^-alpha)^(-b))   a = -1/alpha

which yields every integral of 1 - (1 + s(1+x)^(-alpha))^(-b) over finite or
semi-infinite ranges of the normalized distance x, with or without the area
Jacobian x dx. Convergence of the tails needs alpha > 2.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

_SERIES_CUT = 0.25
_SERIES_MAX_TERMS = 500


class NumericalFailure(RuntimeError):
    """A quadrature did not reach its tolerance."""

    def __init__(self, message, achieved_tol=None):
        super().__init__(message)
        self.achieved_tol = achieved_tol


class UnsupportedParameters(ValueError):
    """Hypergeometric parameters the evaluator cannot handle; callers with a
    defining integral should fall back to direct quadrature of it."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive 1-D quadratures.

    Semi-infinite upper limits are always substituted t = lower + w/(1-w)
    with w in [0, 1), so identical settings reproduce identical results.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-9
    max_subdivisions: int = 300

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions too small")


def hyp2f1(a, b, c, z):
    """Gauss hypergeometric 2F1(a, b; c; z), real parameters, vectorized in z.

    Arguments z < -1 are first brought inside the unit interval with the
    Pfaff transformation

        2F1(a, b; c; z) = (1 - z)^(-a) * 2F1(a, c - b; c; z / (z - 1))

    which maps z in (-inf, -1) to z/(z-1) in (1/2, 1); the toolkit's own
    arguments -s(1+x)^(-alpha) land there for large s. Inside [-1, 1) the
    evaluation is direct. Non-finite results raise UnsupportedParameters so
    callers that own a defining integral can fall back to quadrature.
    """
    if c <= 0 and float(c).is_integer():
        raise UnsupportedParameters("c must not be a non-positive integer")
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    zv = np.atleast_1d(z).astype(float)
    out = np.empty_like(zv)
    neg = zv < -1.0
    if neg.any():
        zn = zv[neg]
        out[neg] = (1.0 - zn) ** (-a) * special.hyp2f1(a, c - b, c, zn / (zn - 1.0))
    if (~neg).any():
        out[~neg] = special.hyp2f1(a, b, c, zv[~neg])
    if not np.isfinite(out).all():
        raise UnsupportedParameters(
            f"2F1 evaluation non-finite for a={a}, b={b}, c={c}")
    return float(out[0]) if scalar else out.reshape(z.shape)


def _series_m1(a, b, c, z):
    # sum of the 2F1 series from k=1; callers guarantee |z| <= _SERIES_CUT
    total = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(_SERIES_MAX_TERMS):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            return total
    raise NumericalFailure("2F1 series did not converge",
                           achieved_tol=float(np.max(np.abs(term))))


def hyp2f1m1(a, b, c, z):
    """2F1(a, b; c; z) - 1 without cancellation near z = 0.

    Small |z| sums the series from its k=1 term, keeping full relative
    accuracy where direct evaluation minus one would lose every digit; the
    rest delegates to `hyp2f1`.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    zv = np.atleast_1d(z).astype(float)
    out = np.empty_like(zv)
    small = np.abs(zv) <= _SERIES_CUT
    if small.any():
        out[small] = _series_m1(a, b, c, zv[small])
    if (~small).any():
        out[~small] = hyp2f1(a, b, c, zv[~small]) - 1.0
    return float(out[0]) if scalar else out.reshape(z.shape)


def chord_length(r, theta, R):
    """Distance from an interior point to the circle of radius R along a ray.

    The point sits at distance r from the disk center; theta = pi/2 aims the
    ray at the far boundary through the center (length R + r), theta = -pi/2
    at the near boundary (length R - r):

        l(r, theta) = sqrt(R^2 - r^2 cos^2 theta) + r sin theta
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if R <= 0:
        raise ValueError("disk radius must be positive")
    if np.any(r < 0) or np.any(r > R):
        raise ValueError("point radius must lie in [0, R]")
    out = np.sqrt(R * R - (r * np.cos(theta)) ** 2) + r * np.sin(theta)
    return float(out) if out.ndim == 0 else out


def _check_alpha(alpha):
    if alpha <= 2.0:
        raise ValueError("path-loss exponent must exceed 2 for finite tails")


def _phi_area(s, u, alpha, shape):
    # int_u^inf (1 - (1 + s t^-alpha)^-shape) t dt  =  u^2/2 * (2F1 - 1)
    a = -2.0 / alpha
    z = -np.asarray(s, dtype=float) * np.asarray(u, dtype=float) ** (-alpha)
    return 0.5 * u * u * hyp2f1m1(a, shape, a + 1.0, z)


def _phi_line(s, u, alpha, shape):
    # int_u^inf (1 - (1 + s t^-alpha)^-shape) dt  =  u * (2F1 - 1)
    a = -1.0 / alpha
    z = -np.asarray(s, dtype=float) * np.asarray(u, dtype=float) ** (-alpha)
    return u * hyp2f1m1(a, shape, a + 1.0, z)


def radial_tail_integral(s, x, alpha, shape):
    """int_x^inf (1 - [1 + s (1+t)^(-alpha)]^(-shape)) t dt.

    t is distance in units of the path-loss reference distance, so the value
    multiplies an intensity times d0^2 to become a Laplace exponent. Exact
    closed form; s >= 0, x >= 0, shape > 0.
    """
    _check_alpha(alpha)
    u0 = 1.0 + np.asarray(x, dtype=float)
    return (_phi_area(s, u0, alpha, shape) - _phi_line(s, u0, alpha, shape))


def radial_range_integral(s, x0, x1, alpha, shape):
    """int_{x0}^{x1} (1 - [1 + s (1+t)^(-alpha)]^(-shape)) t dt, x in d0 units."""
    _check_alpha(alpha)
    u0 = 1.0 + np.asarray(x0, dtype=float)
    u1 = 1.0 + np.asarray(x1, dtype=float)
    return ((_phi_area(s, u0, alpha, shape) - _phi_area(s, u1, alpha, shape))
            - (_phi_line(s, u0, alpha, shape) - _phi_line(s, u1, alpha, shape)))


def radial_disk_integral(s, x1, alpha, shape):
    """int_0^{x1} (1 - [1 + s (1+t)^(-alpha)]^(-shape)) (1+t) dt.

    The (1+t) weight is the alternative Jacobian reading of the disk-signal
    exponent (offset measured from the reference distance rather than the
    user); kept alongside the t-weighted form so the two can be compared.
    """
    _check_alpha(alpha)
    u1 = 1.0 + np.asarray(x1, dtype=float)
    return _phi_area(s, 1.0, alpha, shape) - _phi_area(s, u1, alpha, shape)


def integrate_semi_infinite(fn, lower, spec=QuadratureSpec()):
    """Adaptive quadrature of fn over [lower, inf) via t = lower + w/(1-w)."""

    def g(w):
        t = lower + w / (1.0 - w)
        return fn(t) / (1.0 - w) ** 2

    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(g, 0.0, 1.0, epsabs=spec.abs_tol,
                                  epsrel=spec.rel_tol,
                                  limit=spec.max_subdivisions)
    budget = max(spec.abs_tol, 10.0 * spec.rel_tol * abs(val))
    if not np.isfinite(val) or err > budget:
        raise NumericalFailure(
            f"semi-infinite quadrature achieved {err:.3g}, wanted {budget:.3g}",
            achieved_tol=err)
    return val


def p_integral(s, lratio, alpha, Bbar):
    """Interference mass beyond a boundary at normalized distance lratio.

    Equals int_lratio^inf (1 - [1 + s (1+t)^(-alpha)]^(-1/Bbar)) t dt with t
    in units of d0 (multiply by user intensity times d0^2 to use as a Laplace
    exponent). Evaluated in closed form through `radial_tail_integral`; if
    the hypergeometric route reports unsupported parameters, falls back to
    adaptive quadrature of that defining integral.
    """
    if Bbar <= 0:
        raise ValueError("mean cluster size must be positive")
    s_arr = np.asarray(s, dtype=float)
    l_arr = np.asarray(lratio, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("transform argument must be nonnegative")
    if np.any(l_arr < 0):
        raise ValueError("boundary distance must be nonnegative")
    shape = 1.0 / Bbar
    try:
        return radial_tail_integral(s_arr, l_arr, alpha, shape)
    except UnsupportedParameters:
        spec = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-8)
        broad = np.broadcast(s_arr, l_arr)
        out = np.empty(broad.shape)
        flat = out.reshape(-1)
        for i, (si, li) in enumerate(np.nditer([s_arr, l_arr])):
            flat[i] = integrate_semi_infinite(
                lambda t: (1.0 - (1.0 + si * (1.0 + t) ** (-alpha)) ** (-shape)) * t,
                float(li), spec)
        if np.asarray(s).ndim == 0 and np.asarray(lratio).ndim == 0:
            return float(flat[0])
        return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _panel_integral(fn_vec, a, b, n_panels):
    # composite 16-point Gauss-Legendre on [a, b] with one vectorized call
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    fx = fn_vec(x).reshape(n_panels, _GL_NODES.size)
    return float(np.sum(fx * _GL_WEIGHTS[None, :] * half[:, None]))


_X_STEP = np.log(10.0) / 6.0  # base lattice spacing in ln s


def _simpson_uniform(f, h):
    if f.size % 2 == 0:
        raise ValueError("composite Simpson needs an odd point count")
    return (h / 3.0) * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum()
                        + 2.0 * f[2:-1:2].sum())


def rate_from_laplace(laplace_signal, laplace_interference, sigma2,
                      rel_tol=1e-7, max_refine=6):
    """Ergodic rate in nats from Laplace transforms of signal and interference.

    For independent nonnegative signal power zeta and interference power nu,

        E[ln(1 + zeta/(nu + sigma2))]
            = int_0^inf e^(-s sigma2)/s * L_nu(s) * (1 - L_zeta(s)) ds

    by ln(1 + x/y) = int_0^inf (e^(-s y) - e^(-s (x+y)))/s ds. Both callables
    must accept numpy arrays and satisfy L(0) = 1, non-increasing. The
    integral runs in x = ln s between an automatically located lower cutoff
    (where 1 - L_zeta stops contributing) and an upper cutoff where the
    noise factor has killed the integrand. Composite Simpson on a dyadic
    lattice refines by midpoint insertion, so transform values are reused
    across refinement levels (and, for memoized callables, across calls);
    both cutoffs are verified by extension. Returns nats; divide by ln 2
    for bits.
    """
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")

    def one_minus_lzeta(s):
        return 1.0 - laplace_signal(np.asarray(s, dtype=float))

    # scale anchor: bring 1 - L_zeta(s_mid) into a moderate band
    s_mid = 1.0
    for _ in range(250):
        v = float(one_minus_lzeta(np.array([s_mid]))[0])
        if v < 0.02 and s_mid < 1e40:
            s_mid *= 8.0
        elif v > 0.6 and s_mid > 1e-40:
            s_mid /= 8.0
        else:
            break
    if float(one_minus_lzeta(np.array([s_mid]))[0]) <= 0.0:
        return 0.0  # identically unit transform: zero signal, zero rate

    s_lo = s_mid * 1e-10
    s_hi = max(46.0 / sigma2, 1e3 * s_lo)

    def integrand_log(x):
        s = np.exp(x)
        return (np.exp(-s * sigma2) * laplace_interference(s)
                * one_minus_lzeta(s))

    # snap the window to the base lattice so nodes are call-independent
    a = np.floor(np.log(s_lo) / _X_STEP) * _X_STEP
    b = np.ceil(np.log(s_hi) / _X_STEP) * _X_STEP
    n = int(round((b - a) / _X_STEP))
    if n % 2:
        b += _X_STEP
        n += 1
    h = _X_STEP
    xs = a + h * np.arange(n + 1)
    f = integrand_log(xs)
    value = _simpson_uniform(f, h)
    achieved = None
    for _ in range(max_refine):
        mids = integrand_log(xs[:-1] + 0.5 * h)
        merged = np.empty(2 * f.size - 1)
        merged[0::2] = f
        merged[1::2] = mids
        f, h = merged, 0.5 * h
        xs = a + h * np.arange(f.size)
        refined = _simpson_uniform(f, h)
        achieved = abs(refined - value)
        value = refined
        if achieved <= rel_tol * max(abs(value), 1e-300):
            break
    else:
        raise NumericalFailure(
            f"rate integral did not stabilize (last delta {achieved:.3g})",
            achieved_tol=achieved)

    # cutoff checks: extend the top by 2x, drop the bottom by 100x
    tail = _panel_integral(integrand_log, b, b + np.log(2.0), 4)
    head = _panel_integral(integrand_log, a - np.log(100.0), a, 8)
    extra = abs(tail) + abs(head)
    if extra > 10.0 * rel_tol * max(abs(value), 1e-300):
        raise NumericalFailure(
            f"rate integral cutoffs leak {extra:.3g} of {value:.3g}",
            achieved_tol=extra)
    return value + tail + head
