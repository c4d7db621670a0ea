"""Fundamental solutions of (-Lap + m^2) and the numeric pairing front end.

The Propagator type carries the closed-form radial profile P(r) per
dimension together with its UV scaling data.  ``pair`` is the single
entry point for evaluating a ScalarDistribution against test
functions; it dispatches by component structure:

* disconnected factor graphs split into a product of component
  pairings (absolute coordinates factorize);
* two-point components reduce to a 1-d radial integral against the
  correlation profile of the two tests, with Taylor subtraction when
  the factor is renormalized;
* three-point components go through the triple-correlation reduction
  (see ``triple``);
* connected components on four or more points are outside the numeric
  envelope and raise UnsupportedCase.

Integrability gates fire before any quadrature: a bare factor whose
pair locus has divergence degree >= 0 cannot be paired against tests
overlapping that locus.  For bump tests, ball overlap is exactly the
condition that the integrand is nonvanishing near the locus.

Derivative-decorated factors are evaluated only on disjoint supports
(tensor route); their overlapping-support pairings are not reduced to
radial form here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp

from .bessel import besselk
from .errors import (
    DomainError,
    NonIntegrableSingularity,
    UnsupportedCase,
    UnsupportedKernel,
)
from .expr import RadialMap, _u_symbol
from .kernels import DeltaKernel, ExtensionSpec, PropFactor, ScalarDistribution
from .quadrature import (
    DEFAULT_SCHEME,
    ProfileSpline,
    QuadratureScheme,
    ball_rule,
    correlation_profile,
    pair_tensor,
    quad_1d,
    radial_pair,
    sphere_area,
    subtracted_radial_pair,
)

__all__ = [
    "Propagator",
    "QuadratureScheme",
    "WaveFrontDescriptor",
    "green_function",
    "verify_fundamental_solution",
    "pair",
    "pair_extension",
    "wavefront",
    "RadialTestView",
]


@dataclass(frozen=True)
class Propagator:
    """Euclidean-invariant decaying fundamental solution of (-Lap + m^2)."""

    d: int
    m: float

    @property
    def nu(self) -> float:
        return self.d / 2.0 - 1.0

    @property
    def sd(self) -> int:
        """UV scaling degree at the coinciding-point locus."""
        return self.d - 2 if self.d >= 3 else 0

    @property
    def has_log_singularity(self) -> bool:
        return self.d == 2

    def __call__(self, r):
        """P(r) for r > 0, scalar or array; singular entries follow the
        closed form (inf at exactly 0 when sd > 0)."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        with np.errstate(divide="ignore", over="ignore"):
            if self.m == 0.0:
                area = sphere_area(self.d)
                out = r ** (2 - self.d) / ((self.d - 2) * area)
            elif self.d == 1:
                out = np.exp(-self.m * r) / (2.0 * self.m)
            elif self.d == 3:
                out = np.exp(-self.m * r) / (4.0 * np.pi * r)
            else:
                out = ((2.0 * np.pi) ** (-self.d / 2.0) * self.m ** self.nu
                       * r ** (-self.nu) * besselk(self.nu, r * self.m))
        return float(out[0]) if scalar else out

    def power_callable(self, j: int) -> Callable:
        if j == 0:
            return lambda r: np.ones_like(np.asarray(r, dtype=float))
        return lambda r: self(r) ** j

    def u_derivative(self, k: int) -> Callable:
        """k-th derivative of P viewed as a function of u = r^2.

        Closed form from d/dr[r^-nu K_nu(mr)] = -m r^-nu K_{nu+1}(mr):
        each u-derivative shifts the Bessel order up by one and
        multiplies by -m/2.
        """
        if self.m == 0.0:
            area = sphere_area(self.d)
            expo = (2.0 - self.d) / 2.0
            coef = 1.0 / ((self.d - 2) * area)
            for jj in range(k):
                coef *= expo - jj

            def deriv0(u):
                u = np.asarray(u, dtype=float)
                return coef * u ** (expo - k)
            return deriv0

        c = (2.0 * np.pi) ** (-self.d / 2.0) * self.m ** self.nu * (-self.m / 2.0) ** k
        order = self.nu + k

        def deriv(u):
            u = np.asarray(u, dtype=float)
            r = np.sqrt(u)
            return c * r ** (-order) * besselk(order, self.m * r)
        return deriv

    def truncation_radius(self, power: int, tol: float = 1e-16) -> Optional[float]:
        """Radius beyond which P^power is below tol (None if massless)."""
        if self.m == 0.0:
            return None
        return -math.log(tol) / (power * self.m) + 2.0 / self.m


def green_function(d: int, m: float) -> Propagator:
    """The decaying fundamental solution; the only one compatible with
    Euclidean invariance and Dirichlet behavior at infinity."""
    if d < 1 or int(d) != d:
        raise DomainError(f"dimension must be a positive integer, got {d}")
    if m < 0:
        raise DomainError(f"mass must be nonnegative, got {m}")
    if m == 0.0 and d <= 2:
        raise UnsupportedCase(
            f"no decaying massless fundamental solution in d={d}")
    return Propagator(int(d), float(m))


def verify_fundamental_solution(P: Propagator, phi,
                                scheme: QuadratureScheme = DEFAULT_SCHEME) -> float:
    """|<P, (-Lap + m^2) phi> - phi(0)| for a compactly supported phi.

    ``phi`` must expose radial_map() (rotation-invariant bump); the
    Helmholtz image is formed exactly in the squared-radius variable,
    so the residual measures only the quadrature and the correctness
    of the closed form.
    """
    rm: RadialMap = phi.radial_map()
    image = rm.helmholtz(P.m)
    c = float(np.linalg.norm(rm.center))
    # the Helmholtz image is steep near the support boundary; the
    # off-center polar average needs a finer rule than pairings of
    # plain bumps
    if scheme.angular_n < 512:
        scheme = replace(scheme, angular_n=512)
    val = radial_pair(P, image._g(), rm.support_radius, c, P.d, scheme)
    at_zero = float(rm(np.zeros(P.d)))
    return abs(val - at_zero)


# -- wave front bookkeeping -------------------------------------------


@dataclass(frozen=True)
class WaveFrontDescriptor:
    """Symbolic wave-front content: which points coincide, and the
    linear covector constraint over the coinciding points."""

    base: str
    covectors: str


_DELTA_TYPE_WF = WaveFrontDescriptor(base="x1 = x2", covectors="k1 + k2 = 0")


def wavefront(kernel) -> WaveFrontDescriptor:
    """Wave front set of a delta-type kernel or a single propagator.

    The fundamental solution shares the wave front of the delta it
    solves for; derivative decorations cannot enlarge it.  Products
    need a genuine microlocal calculus and are refused.
    """
    if isinstance(kernel, DeltaKernel):
        return _DELTA_TYPE_WF
    if isinstance(kernel, Propagator):
        return _DELTA_TYPE_WF
    if isinstance(kernel, ScalarDistribution):
        if (kernel.n_points == 2 and len(kernel.factors) == 1
                and kernel.factors[0].power == 1 and kernel.is_bare):
            return _DELTA_TYPE_WF
        raise UnsupportedKernel(
            "wave front sets of propagator products are out of scope")
    raise UnsupportedKernel(f"no wave front rule for {type(kernel).__name__}")


# -- pairing front end -------------------------------------------------


@dataclass(frozen=True)
class RadialTestView:
    """Uniform radial view of a test object for 1-d reductions: the
    squared-radius profile, support radius, center, and exact origin
    data for counterterms."""

    gu: Callable
    support: float
    center: tuple
    value_at_origin: float
    gradient_at_origin: Optional[tuple] = None

    @property
    def offset(self) -> float:
        return float(np.linalg.norm(self.center))


def radial_view(phi) -> RadialTestView:
    """Build a RadialTestView from a TestFunction-like object (anything
    with radial_map()) or from a ProfileSpline placed at an offset."""
    rm = phi.radial_map()
    center = tuple(rm.center)
    c2 = float(np.dot(center, center))
    u = _u_symbol()
    g1 = sp.diff(rm.gexpr, u)
    gp = float(g1.subs(u, c2))
    grad = tuple(-2.0 * ci * gp for ci in center)
    return RadialTestView(
        gu=rm._g(), support=rm.support_radius, center=center,
        value_at_origin=float(rm(np.zeros(rm.d))), gradient_at_origin=grad)


def spline_view(profile: ProfileSpline, offset: float) -> RadialTestView:
    """Radial view of a spline profile centered at distance ``offset``
    from the origin (gradient data unavailable)."""
    return RadialTestView(
        gu=profile.profile_u(), support=profile.support_radius,
        center=(float(offset),), value_at_origin=float(profile(offset)),
        gradient_at_origin=None)


def _pair_divergence_degree(prop: Propagator, factor: PropFactor) -> int:
    return factor.power * prop.sd + factor.deriv_order - prop.d


def _tests_overlap(f, g) -> bool:
    sep = float(np.linalg.norm(np.asarray(f.center) - np.asarray(g.center)))
    return sep < f.radius + g.radius


_CORR_CACHE: dict = {}


def _correlation(f, g, d: int, scheme: QuadratureScheme) -> ProfileSpline:
    key = (f, g, d, scheme.profile_samples, scheme.angular_n)
    prof = _CORR_CACHE.get(key)
    if prof is None:
        prof = correlation_profile(f.gu(), f.radius, g.gu(), g.radius, d, scheme)
        _CORR_CACHE[key] = prof
    return prof


def pair_extension(t: ScalarDistribution, phi,
                   scheme: QuadratureScheme = DEFAULT_SCHEME) -> float:
    """Pairing of a single renormalized (or integrable bare) propagator
    power with a test function on the relative space R^d.

    phi: RadialTestView, or any object with radial_map().
    """
    if t.n_points != 2 or len(t.factors) != 1:
        raise UnsupportedCase("pair_extension handles single-pair kernels only")
    factor = t.factors[0]
    if factor.deriv_order:
        raise UnsupportedCase("decorated factors have no radial extension route")
    prop = Propagator(t.d, t.m)
    view = phi if isinstance(phi, RadialTestView) else radial_view(phi)
    kernel = prop.power_callable(factor.power)
    rho_div = _pair_divergence_degree(prop, factor)

    if factor.extension is None:
        if rho_div >= 0 and view.offset < view.support:
            raise NonIntegrableSingularity(
                f"bare P^{factor.power} in d={t.d} has divergence degree "
                f"{rho_div} >= 0 at the origin")
        return radial_pair(kernel, view.gu, view.support, view.offset,
                           t.d, scheme)

    ext = factor.extension
    if rho_div < 0:
        # unique extension: the improper integral; spec data is inert
        return radial_pair(kernel, view.gu, view.support, view.offset,
                           t.d, scheme)
    if rho_div > 1:
        raise UnsupportedCase(
            f"extension pairing implemented for divergence degree <= 1, "
            f"got {rho_div}")
    w = ext.cutoff
    value = subtracted_radial_pair(
        kernel, view.gu, view.support, view.offset, view.value_at_origin,
        lambda rho: float(w.profile(rho)), w.radius, t.d, scheme,
        extra_points=[w.plateau_radius])
    for alpha, c_a in ext.counterterms:
        if c_a == 0.0:
            continue
        order = sum(alpha)
        if order == 0:
            value += c_a * view.value_at_origin
        elif order == 1 and rho_div >= 1:
            if view.gradient_at_origin is None:
                raise UnsupportedCase(
                    "first-order counterterms need exact origin derivatives")
            i = alpha.index(1)
            value += -c_a * view.gradient_at_origin[i]
        else:
            raise UnsupportedCase(
                f"counterterm order {order} exceeds divergence degree {rho_div}")
    return value


def _test_integral(f, d: int, scheme: QuadratureScheme) -> float:
    gu = f.gu()
    area = sphere_area(d)
    return area * quad_1d(
        lambda rho: rho ** (d - 1) * float(np.atleast_1d(gu(np.float64(rho * rho)))[0]),
        0.0, f.radius, scheme)


def _decorated_tensor(prop: Propagator, factor: PropFactor, f, g,
                      scheme: QuadratureScheme) -> float:
    """Tensor-Gauss pairing of a decorated single propagator on
    disjoint supports."""
    if factor.power != 1:
        raise UnsupportedCase("decorations are supported on single powers only")
    alpha = tuple(a + b for a, b in zip(
        tuple(factor.left_deriv) + (0,) * prop.d,
        tuple(factor.right_deriv) + (0,) * prop.d))
    alpha = alpha[:prop.d]
    total = sum(alpha)
    sign = (-1.0) ** sum(factor.right_deriv)
    if total > 2:
        raise UnsupportedCase("decorated kernels implemented to total order 2")
    p1 = prop.u_derivative(1)
    p2 = prop.u_derivative(2)

    def kernel_block(x, y):
        diff = x[:, None, :] - y[None, :, :]
        u = np.sum(diff * diff, axis=-1)
        if total == 0:
            return prop(np.sqrt(u))
        if total == 1:
            i = alpha.index(1)
            return 2.0 * diff[:, :, i] * p1(u)
        if 2 in alpha:
            i = alpha.index(2)
            return 2.0 * p1(u) + 4.0 * diff[:, :, i] ** 2 * p2(u)
        i, j = [k for k, a in enumerate(alpha) if a == 1]
        return 4.0 * diff[:, :, i] * diff[:, :, j] * p2(u)

    xp, xw = ball_rule(prop.d, f.center, f.radius, scheme.gauss_n)
    yp, yw = ball_rule(prop.d, g.center, g.radius, scheme.gauss_n)
    fx = np.asarray(f(xp), dtype=float) * xw
    gy = np.asarray(g(yp), dtype=float) * yw
    total_val = 0.0
    for start in range(0, len(xp), 1024):
        stop = min(start + 1024, len(xp))
        total_val += fx[start:stop] @ kernel_block(xp[start:stop], yp) @ gy
    return sign * float(total_val)


def _pair_two(t: ScalarDistribution, f, g, scheme: QuadratureScheme,
              method: str) -> float:
    factor = t.factors[0]
    if t.overall is not None:
        raise UnsupportedCase(
            "two-point kernels carry their extension on the factor, not "
            "as an overall spec")
    prop = Propagator(t.d, t.m)
    overlap = _tests_overlap(f, g)

    if factor.deriv_order:
        if factor.renormalized:
            raise UnsupportedCase("renormalized decorated factors unsupported")
        if overlap:
            raise UnsupportedCase(
                "decorated factors require disjoint test supports")
        return _decorated_tensor(prop, factor, f, g, scheme)

    if factor.renormalized:
        prof = _correlation(f, g, t.d, scheme)
        offset = float(np.linalg.norm(np.asarray(f.center) - np.asarray(g.center)))
        return pair_extension(t, spline_view(prof, offset), scheme)

    rho_div = _pair_divergence_degree(prop, factor)
    if rho_div >= 0 and overlap:
        raise NonIntegrableSingularity(
            f"bare P^{factor.power} (d={t.d}) with divergence degree "
            f"{rho_div} >= 0 paired against overlapping supports")

    if method == "tensor":
        if overlap and prop.sd > 0:
            raise UnsupportedCase(
                "tensor route needs disjoint supports for singular kernels")
        return pair_tensor(prop.power_callable(factor.power), t.d,
                           f.center, f.radius, f, g.center, g.radius, g, scheme)

    prof = _correlation(f, g, t.d, scheme)
    offset = float(np.linalg.norm(np.asarray(f.center) - np.asarray(g.center)))
    return radial_pair(prop.power_callable(factor.power), prof.profile_u(),
                       prof.support_radius, offset, t.d, scheme)


def pair(t: ScalarDistribution, tests: Sequence,
         scheme: QuadratureScheme = DEFAULT_SCHEME, method: str = "auto") -> float:
    """<t, f_1 x ... x f_n> over absolute coordinates.

    ``tests`` are TestFunction-like (radial bumps); ``method`` is
    "auto" (radial reductions) or "tensor" (force the tensor rule
    where legal, for cross-validation).
    """
    if len(tests) != t.n_points:
        raise DomainError(
            f"kernel on {t.n_points} points paired with {len(tests)} tests")
    for phi in tests:
        if phi.d != t.d:
            raise DomainError("test dimension does not match kernel dimension")

    result = 1.0
    for verts, _ in t.components():
        if len(verts) == 1:
            result *= _test_integral(tests[verts[0]], t.d, scheme)
            continue
        sub = t.relabelled(verts)
        sub_tests = [tests[v] for v in verts]
        if len(verts) == 2:
            result *= _pair_two(sub, sub_tests[0], sub_tests[1], scheme, method)
        elif len(verts) == 3:
            from .triple import pair_three
            result *= pair_three(sub, sub_tests, scheme, method)
        else:
            raise UnsupportedCase(
                "connected kernels on >= 4 points are outside the numeric "
                "envelope (disconnected ones factorize)")
    return result
