"""Numeric integration toolbox shared by the pairing routines.

Everything here reduces d-dimensional pairings to one-dimensional
integrals plus small tensor rules:

* ``radial_pair`` integrates K(|x|) f(x) over R^d for a radial kernel K
  and a test function f that is rotation invariant about some center c.
  In spherical coordinates about the kernel center this is
  omega_{d-1} * int K(rho) rho^(d-1) A(rho) drho, with A the spherical
  average of f, which is exact in d = 1 and a short Gauss-Legendre sum
  over the polar angle in d = 2, 3.

* ``subtracted_radial_pair`` is the same integral with A(rho) replaced
  by A(rho) - w(rho) * f(0), the Taylor-subtracted combination used by
  divergence-degree <= 1 extensions (the order-one term averages to
  zero over the sphere, so one subtraction covers both degrees).

* ``ProfileSpline`` caches a smooth radial profile on a window as a
  cubic spline; used for convolution and correlation profiles.

Outer 1-d integrals go through QUADPACK (scipy.integrate.quad); a
nonzero error flag or an absolute-error report far above the requested
tolerance raises QuadratureFailure rather than returning junk.

Spherical averages are computed in the squared-radius variable u (see
``expr``), which keeps integrands finite at every sample; quadrature
nodes are strictly interior, so kernel singularities at rho = 0 are
never evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import QuadratureFailure

__all__ = [
    "QuadratureScheme",
    "DEFAULT_SCHEME",
    "quad_1d",
    "gauss_legendre",
    "sphere_area",
    "ball_rule",
    "angular_average",
    "radial_pair",
    "subtracted_radial_pair",
    "ProfileSpline",
    "correlation_profile",
    "convolution_profile",
    "pair_tensor",
]


@dataclass(frozen=True)
class QuadratureScheme:
    """Knobs for the nested quadratures.

    rtol / atol / limit feed QUADPACK; gauss_n is the per-axis order of
    ball and tensor rules; angular_n the polar-average order;
    profile_samples the sample count for cached radial profiles;
    grid_nodes the per-axis size of the triple-correlation grid.
    """

    rtol: float = 1e-9
    atol: float = 1e-12
    limit: int = 200
    gauss_n: int = 18
    angular_n: int = 96
    profile_samples: int = 360
    grid_nodes: int = 48

    def tighter(self, factor: float = 1e-2) -> "QuadratureScheme":
        return replace(self, rtol=self.rtol * factor, atol=self.atol * factor)


DEFAULT_SCHEME = QuadratureScheme()


def quad_1d(f, a: float, b: float, scheme: QuadratureScheme = DEFAULT_SCHEME,
            points: Optional[Sequence[float]] = None) -> float:
    """QUADPACK on [a, b] with failure promoted to QuadratureFailure."""
    if b <= a:
        return 0.0
    pts = None
    if points:
        pts = sorted({float(p) for p in points if a < p < b})
        if not pts:
            pts = None
    out = quad(f, a, b, epsabs=scheme.atol, epsrel=scheme.rtol,
               limit=scheme.limit, points=pts, full_output=1)
    result, abserr = out[0], out[1]
    if len(out) > 3:
        # a fourth element is QUADPACK's warning/error message
        raise QuadratureFailure(
            f"integration on [{a:g}, {b:g}] failed: {out[3]}")
    tol = max(scheme.atol, scheme.rtol * abs(result))
    if abserr > 1e3 * tol and abserr > 1e-8 * max(1.0, abs(result)):
        raise QuadratureFailure(
            f"integration on [{a:g}, {b:g}] error estimate {abserr:g} "
            f"exceeds tolerance {tol:g}")
    return result


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    return x, w


def _mapped_gauss(a: float, b: float, n: int):
    x, w = gauss_legendre(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 when d = 1)."""
    import math
    return 2.0 * np.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_rule(d: int, center, radius: float, n: int):
    """Product Gauss rule for the closed ball; returns (points, weights).

    Nodes are strictly interior, so integrands that are nan exactly on
    the support boundary are safe to evaluate.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if d == 1:
        x, w = _mapped_gauss(center[0] - radius, center[0] + radius, n)
        return x.reshape(-1, 1), w
    if d == 2:
        r, wr = _mapped_gauss(0.0, radius, n)
        n_theta = max(2 * n, 8)
        theta = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
        w_theta = 2.0 * np.pi / n_theta
        pts = np.empty((n * n_theta, 2))
        wts = np.empty(n * n_theta)
        k = 0
        for ri, wi in zip(r, wr):
            pts[k:k + n_theta, 0] = center[0] + ri * np.cos(theta)
            pts[k:k + n_theta, 1] = center[1] + ri * np.sin(theta)
            wts[k:k + n_theta] = wi * ri * w_theta
            k += n_theta
        return pts, wts
    if d == 3:
        r, wr = _mapped_gauss(0.0, radius, n)
        mu, wmu = gauss_legendre(n)
        n_phi = max(2 * n, 8)
        phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
        w_phi = 2.0 * np.pi / n_phi
        sin_th = np.sqrt(1.0 - mu**2)
        R, MU, PH = np.meshgrid(r, mu, phi, indexing="ij")
        WR, WMU, _ = np.meshgrid(wr, wmu, phi, indexing="ij")
        ST = np.sqrt(1.0 - MU**2)
        pts = np.stack([
            center[0] + R * ST * np.cos(PH),
            center[1] + R * ST * np.sin(PH),
            center[2] + R * MU,
        ], axis=-1).reshape(-1, 3)
        wts = (WR * R**2 * WMU * w_phi).reshape(-1)
        return pts, wts
    raise ValueError(f"ball_rule supports d in 1..3, got {d}")


def angular_average(gu: Callable, c: float, d: int, n: int = 96) -> Callable:
    """Spherical average A(rho) of x -> g(|x - c e1|^2) about the origin.

    ``gu`` must accept numpy arrays of squared distances.  The returned
    callable is vectorized over rho and finite at rho = 0.
    """
    c = float(c)
    if d == 1:
        def avg(rho):
            rho = np.asarray(rho, dtype=float)
            return 0.5 * (gu((rho - c) ** 2) + gu((rho + c) ** 2))
        return avg
    if d == 2:
        theta, wt = _mapped_gauss(0.0, np.pi, n)
        cos_t = np.cos(theta)
        wt = wt / np.pi

        def avg(rho):
            rho = np.atleast_1d(np.asarray(rho, dtype=float))
            u = rho[:, None] ** 2 + c * c - 2.0 * c * rho[:, None] * cos_t[None, :]
            return gu(np.maximum(u, 0.0)) @ wt
        return avg
    if d == 3:
        mu, wmu = gauss_legendre(n)
        wmu = 0.5 * wmu

        def avg(rho):
            rho = np.atleast_1d(np.asarray(rho, dtype=float))
            u = rho[:, None] ** 2 + c * c - 2.0 * c * rho[:, None] * mu[None, :]
            return gu(np.maximum(u, 0.0)) @ wmu
        return avg
    # d >= 4: sin^(d-2) weight in the polar angle; normalizing by the
    # quadrature sum keeps averages of constants exact
    theta, wt = _mapped_gauss(0.0, np.pi, n)
    w = wt * np.sin(theta) ** (d - 2)
    w = w / w.sum()
    cos_t = np.cos(theta)

    def avg(rho):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        u = rho[:, None] ** 2 + c * c - 2.0 * c * rho[:, None] * cos_t[None, :]
        return gu(np.maximum(u, 0.0)) @ w
    return avg


def _scalar_avg(avg):
    def f(rho):
        out = avg(np.asarray([rho], dtype=float) if np.ndim(rho) == 0 else rho)
        return float(np.atleast_1d(out)[0]) if np.ndim(rho) == 0 else out
    return f


def radial_pair(kernel: Callable, gu: Callable, support: float, c: float, d: int,
                scheme: QuadratureScheme = DEFAULT_SCHEME,
                kernel_window: Optional[float] = None,
                extra_points: Sequence[float] = ()) -> float:
    """int K(|x|) f(x) dx for radial K and f radial about distance c.

    ``gu`` is f's squared-radius profile, ``support`` its support radius
    (f vanishes for |x - center| >= support).  ``kernel_window`` caps
    the kernel's own support when it has one.
    """
    c = abs(float(c))
    lo = max(0.0, c - support)
    hi = c + support
    if kernel_window is not None:
        hi = min(hi, kernel_window)
    if hi <= lo:
        return 0.0
    avg = _scalar_avg(angular_average(gu, c, d, scheme.angular_n))
    area = sphere_area(d)

    def integrand(rho):
        return kernel(rho) * rho ** (d - 1) * avg(rho)

    pts = [c, abs(c - support), c + support, *extra_points]
    return area * quad_1d(integrand, lo, hi, scheme, points=pts)


def subtracted_radial_pair(kernel: Callable, gu: Callable, support: float,
                           c: float, value_at_origin: float,
                           w_profile: Callable, w_support: float,
                           d: int, scheme: QuadratureScheme = DEFAULT_SCHEME,
                           extra_points: Sequence[float] = ()) -> float:
    """int K(|x|) [f(x) - w(|x|) f(0)] dx via the spherical average.

    Covers divergence degrees 0 and 1: the first-order Taylor term is
    odd under the angular average, so the zeroth-order subtraction
    leaves an O(rho^2) remainder near the origin.
    """
    c = abs(float(c))
    hi = max(c + support, w_support)
    avg = _scalar_avg(angular_average(gu, c, d, scheme.angular_n))
    area = sphere_area(d)

    def integrand(rho):
        return kernel(rho) * rho ** (d - 1) * (avg(rho) - w_profile(rho) * value_at_origin)

    pts = [c, abs(c - support), c + support, w_support, *extra_points]
    return area * quad_1d(integrand, 0.0, hi, scheme, points=pts)


class ProfileSpline:
    """Cubic-spline cache of a radial profile on [0, support]; zero beyond."""

    __slots__ = ("support_radius", "_spline", "_s0")

    def __init__(self, s: np.ndarray, values: np.ndarray, support: float):
        order = np.argsort(s)
        self._s0 = float(s[order][0])
        self._spline = CubicSpline(s[order], values[order])
        self.support_radius = float(support)

    @classmethod
    def from_function(cls, f: Callable, support: float, n: int) -> "ProfileSpline":
        # inset from both ends so boundary-nan expressions are never hit
        s = np.linspace(1e-9, support * (1.0 - 1e-12), n)
        return cls(s, np.asarray(f(s), dtype=float), support)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inside = (s >= self._s0) & (s <= self.support_radius)
        out = np.zeros_like(s, dtype=float)
        if np.any(inside):
            out[inside] = self._spline(s[inside])
        # below the first sample: clamp (profiles are smooth at 0)
        low = s < self._s0
        if np.any(low):
            out[low] = self._spline(self._s0)
        return out if out.ndim else float(out)

    def profile_u(self):
        """Squared-radius view suitable for angular_average."""
        def gu(u):
            u = np.asarray(u, dtype=float)
            return self(np.sqrt(np.maximum(u, 0.0)))
        return gu


def correlation_profile(f_gu: Callable, f_support: float,
                        g_gu: Callable, g_support: float, d: int,
                        scheme: QuadratureScheme = DEFAULT_SCHEME) -> ProfileSpline:
    """C(s) = int f(z) g(z - s e1) dz as a spline on [0, Sf + Sg].

    The cross-correlation of two rotation-invariant functions is
    rotation invariant in the shift, so a 1-d profile captures it.
    """
    s_max = f_support + g_support

    def f_kernel(rho):
        return _radial_eval(f_gu, rho)

    s_grid = np.linspace(0.0, s_max, scheme.profile_samples)
    vals = np.empty_like(s_grid)
    for i, s in enumerate(s_grid):
        vals[i] = radial_pair(f_kernel, g_gu, g_support, s, d, scheme,
                              kernel_window=f_support)
    return ProfileSpline(s_grid, vals, s_max)


def _radial_eval(gu, rho):
    rho = np.asarray(rho, dtype=float)
    return gu(rho * rho)


def convolution_profile(kernel: Callable, singular_power: float,
                        decay_scale: Optional[float],
                        g_gu: Callable, g_support: float,
                        s_max: float, d: int,
                        scheme: QuadratureScheme = DEFAULT_SCHEME) -> ProfileSpline:
    """A(s) = int K(|z|) g(z - s e1) dz as a spline on [0, s_max].

    ``singular_power`` is the algebraic blow-up of K at 0 (K ~ rho^-p);
    it must leave rho^(d-1) K integrable.  ``decay_scale`` is an
    e-folding length for truncating a non-compact kernel; None means
    the kernel is supported inside the sampled region anyway.
    """
    s_grid = np.linspace(0.0, s_max, scheme.profile_samples)
    vals = np.empty_like(s_grid)
    for i, s in enumerate(s_grid):
        vals[i] = radial_pair(kernel, g_gu, g_support, s, d, scheme)
    return ProfileSpline(s_grid, vals, s_max)


def pair_tensor(kernel: Callable, d: int,
                f_center, f_radius: float, f_values: Callable,
                g_center, g_radius: float, g_values: Callable,
                scheme: QuadratureScheme = DEFAULT_SCHEME,
                block: int = 1024) -> float:
    """Direct tensor-Gauss evaluation of int int f(x) K(|x-y|) g(y) dx dy.

    Fallback for integrands with no radial structure.  Accurate only
    when K is smooth on supp f x supp g (disjoint supports, or a
    bounded kernel); the radial routes handle the singular overlapping
    cases.
    """
    xp, xw = ball_rule(d, f_center, f_radius, scheme.gauss_n)
    yp, yw = ball_rule(d, g_center, g_radius, scheme.gauss_n)
    fx = np.asarray(f_values(xp), dtype=float) * xw
    gy = np.asarray(g_values(yp), dtype=float) * yw
    total = 0.0
    for start in range(0, len(xp), block):
        stop = min(start + block, len(xp))
        diff = xp[start:stop, None, :] - yp[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        total += fx[start:stop] @ kernel(dist) @ gy
    return float(total)
