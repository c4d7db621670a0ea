"""The partial Euclidean time-ordered product and its n-fold version.

The product of two functionals with disjoint supports is a formal
power series whose k-th coefficient contracts the k-th derivative
kernels through k propagators; the n-fold version sums tadpole-free
multigraphs with reciprocal-symmetry-factor weights.  Both are
evaluated numerically at a background configuration: each graph term
is a product over connected components, and every component within the
supported envelope (single multi-edges, two-edge paths, isolated
vertices) reduces to Gauss ball rules over the coefficient supports.

The result of multiplying two local functionals is not local: the
second derivative of the pointwise product contains a cross kernel
supported on pairs of points, one in each factor's support, and
``product_cross_support`` exposes that as a checkable structure.

The n-fold product over a configuration space region is determined by
its restrictions to small-support functionals; the computational
content of that gluing is the partition of a coefficient bump into
sub-bumps, re-exported here as ``split_support``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DomainError,
    NonLinearInput,
    PreconditionViolated,
    UnsupportedCase,
)
from .functionals import (
    DerivativeKernel,
    DKTerm,
    FieldConfiguration,
    LocalFunctional,
    derivative_kernel,
    evaluate,
    split_support,
    supports_disjoint,
)
from .graphs import MultiGraph, expansion_terms, vertex_pairs
from .kernels import PropFactor, ScalarDistribution
from .propagator import Propagator, _decorated_tensor, pair
from .quadrature import DEFAULT_SCHEME, QuadratureScheme, ball_rule

__all__ = [
    "FormalSeries",
    "ProductResult",
    "star_E",
    "E_n",
    "block_product",
    "causal_factorization_check",
    "wick_expansion",
    "WickTerm",
    "wick_order_pair",
    "product_cross_support",
    "split_support",
]


@dataclass(frozen=True)
class FormalSeries:
    """Truncated power series; coefficients may be floats or exact
    rationals, and arithmetic never mixes orders beyond the truncation."""

    coeffs: Tuple[Tuple[int, object], ...]
    truncation: int

    @staticmethod
    def from_dict(data: Dict[int, object], truncation: int) -> "FormalSeries":
        items = tuple(sorted((k, v) for k, v in data.items()
                             if k <= truncation and v != 0))
        return FormalSeries(items, truncation)

    @staticmethod
    def constant(value, truncation: int) -> "FormalSeries":
        return FormalSeries.from_dict({0: value}, truncation)

    def coefficient(self, k: int):
        for order, value in self.coeffs:
            if order == k:
                return value
        return 0

    def as_dict(self) -> Dict[int, object]:
        return dict(self.coeffs)

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        trunc = min(self.truncation, other.truncation)
        data = dict(self.coeffs)
        for k, v in other.coeffs:
            data[k] = data.get(k, 0) + v
        return FormalSeries.from_dict(data, trunc)

    def __sub__(self, other: "FormalSeries") -> "FormalSeries":
        return self + other.scale(-1)

    def __mul__(self, other: "FormalSeries") -> "FormalSeries":
        trunc = min(self.truncation, other.truncation)
        data: Dict[int, object] = {}
        for ka, va in self.coeffs:
            for kb, vb in other.coeffs:
                if ka + kb > trunc:
                    continue
                data[ka + kb] = data.get(ka + kb, 0) + va * vb
        return FormalSeries.from_dict(data, trunc)

    def scale(self, factor) -> "FormalSeries":
        return FormalSeries(tuple((k, factor * v) for k, v in self.coeffs),
                            self.truncation)

    def abs_coefficients(self) -> "FormalSeries":
        return FormalSeries(tuple((k, abs(v)) for k, v in self.coeffs),
                            self.truncation)

    def max_abs(self) -> float:
        return max((abs(v) for _, v in self.coeffs), default=0.0)


@dataclass(frozen=True)
class ProductResult:
    """A numeric product series plus the graphs that fed each order."""

    series: FormalSeries
    contributions: Tuple[Tuple[int, MultiGraph, Fraction, float], ...]


# -- numeric graph-term evaluation ---------------------------------------


_CHUNK = 1024


class _GraphEvaluator:
    """Evaluates graph amplitudes at a fixed background configuration.

    Ball rules, background-derivative values and derivative kernels
    are cached per call site; the evaluator is single-use and cheap to
    construct."""

    def __init__(self, functionals: Sequence[LocalFunctional],
                 phi: FieldConfiguration, m: float,
                 scheme: QuadratureScheme):
        self.functionals = list(functionals)
        self.phi = phi
        self.scheme = scheme
        d = functionals[0].d
        for F in functionals:
            if F.d != d:
                raise DomainError("mixed ambient dimensions in one product")
        if phi.d != d:
            raise DomainError("background dimension does not match")
        self.d = d
        self.prop = Propagator(d, m)
        self._rules: Dict = {}
        self._field_vals: Dict = {}
        self._kernels: Dict = {}

    def kernel(self, slot: int, order: int) -> DerivativeKernel:
        key = (slot, order)
        if key not in self._kernels:
            self._kernels[key] = derivative_kernel(self.functionals[slot], order)
        return self._kernels[key]

    def _rule(self, coeff):
        key = (coeff.center, coeff.radius)
        if key not in self._rules:
            self._rules[key] = ball_rule(self.d, coeff.center, coeff.radius,
                                         self.scheme.gauss_n)
        return key, self._rules[key]

    def _weights(self, dk: DKTerm):
        """Nodes, quadrature weights, and the vertex weight function
        coefficient * prod (d^a phi) on the nodes."""
        key, (pts, wts) = self._rule(dk.coefficient)
        vals = np.asarray(dk.coefficient(pts), dtype=float)
        for alpha in dk.residual:
            fkey = (alpha, key)
            fv = self._field_vals.get(fkey)
            if fv is None:
                fv = np.asarray(self.phi.diff(alpha)(pts), dtype=float)
                self._field_vals[fkey] = fv
            vals = vals * fv
        return pts, wts, vals

    def _edge_contract(self, power: int, pts_a, ua, pts_b, ub) -> float:
        kernel = self.prop.power_callable(power)
        sq_b = np.sum(pts_b * pts_b, axis=1)
        acc = 0.0
        for lo in range(0, len(pts_a), _CHUNK):
            hi = min(lo + _CHUNK, len(pts_a))
            block = pts_a[lo:hi]
            d2 = (np.sum(block * block, axis=1)[:, None] + sq_b[None, :]
                  - 2.0 * (block @ pts_b.T))
            dist = np.sqrt(np.maximum(d2, 0.0))
            acc += ua[lo:hi] @ np.asarray(kernel(dist), dtype=float) @ ub
        return float(acc)

    def _leg_values(self, power: int, pts_leg, u_leg, pts_piv) -> np.ndarray:
        """Propagator-power convolution of a weighted leg onto pivot nodes."""
        kernel = self.prop.power_callable(power)
        sq_leg = np.sum(pts_leg * pts_leg, axis=1)
        out = np.empty(len(pts_piv))
        for lo in range(0, len(pts_piv), _CHUNK):
            hi = min(lo + _CHUNK, len(pts_piv))
            block = pts_piv[lo:hi]
            d2 = (np.sum(block * block, axis=1)[:, None] + sq_leg[None, :]
                  - 2.0 * (block @ pts_leg.T))
            out[lo:hi] = np.asarray(
                kernel(np.sqrt(np.maximum(d2, 0.0))), dtype=float) @ u_leg
        return out

    @staticmethod
    def _plain(dk: DKTerm) -> bool:
        return all(sum(a) == 0 for a in dk.arg_derivs)

    def _single_vertex(self, kern: DerivativeKernel) -> float:
        total = 0.0
        for dk in kern.terms:
            _, wts, vals = self._weights(dk)
            total += float(dk.prefactor) * float(wts @ vals)
        return total

    def _two_vertex(self, power: int, ka: DerivativeKernel,
                    kb: DerivativeKernel) -> float:
        total = 0.0
        for ta in ka.terms:
            for tb in kb.terms:
                pref = float(ta.prefactor * tb.prefactor)
                if self._plain(ta) and self._plain(tb):
                    pa, wa, ua = self._weights(ta)
                    pb, wb, ub = self._weights(tb)
                    total += pref * self._edge_contract(
                        power, pa, wa * ua, pb, wb * ub)
                    continue
                if power != 1:
                    raise UnsupportedCase(
                        "derivative decorations on multiple parallel edges "
                        "are outside the numeric envelope")
                factor = PropFactor(0, 1, 1, left_deriv=ta.arg_derivs[0],
                                    right_deriv=tb.arg_derivs[0])
                shim_a = _WeightShim.from_term(self, ta)
                shim_b = _WeightShim.from_term(self, tb)
                total += pref * _decorated_tensor(
                    self.prop, factor, shim_a, shim_b, self.scheme)
        return total

    def _path(self, pivot_kernel, leg1, leg2) -> float:
        """leg = (power, DerivativeKernel) hanging off the shared pivot."""
        (pw1, kern1), (pw2, kern2) = leg1, leg2
        total = 0.0
        for tp in pivot_kernel.terms:
            if not self._plain(tp):
                raise UnsupportedCase(
                    "derivative decorations at a path pivot are outside "
                    "the numeric envelope")
            pp, wp, up = self._weights(tp)
            for t1 in kern1.terms:
                if not self._plain(t1):
                    raise UnsupportedCase(
                        "derivative decorations on path legs are outside "
                        "the numeric envelope")
                p1, w1, u1 = self._weights(t1)
                leg1_vals = self._leg_values(pw1, p1, w1 * u1, pp)
                for t2 in kern2.terms:
                    if not self._plain(t2):
                        raise UnsupportedCase(
                            "derivative decorations on path legs are "
                            "outside the numeric envelope")
                    p2, w2, u2 = self._weights(t2)
                    leg2_vals = self._leg_values(pw2, p2, w2 * u2, pp)
                    pref = float(tp.prefactor * t1.prefactor * t2.prefactor)
                    total += pref * float((wp * up) @ (leg1_vals * leg2_vals))
        return total

    def term_value(self, graph: MultiGraph) -> float:
        value = 1.0
        for verts in _components(graph):
            edges = [(i, j, m) for i, j, m in graph.edges()
                     if i in verts and j in verts]
            kerns = {i: self.kernel(i, graph.degree(i)) for i in verts}
            if any(k.is_zero for k in kerns.values()):
                return 0.0
            if not edges:
                (i,) = verts
                value *= self._single_vertex(kerns[i])
            elif len(edges) == 1:
                i, j, m = edges[0]
                value *= self._two_vertex(m, kerns[i], kerns[j])
            elif len(edges) == 2:
                (i1, j1, m1), (i2, j2, m2) = edges
                shared = set((i1, j1)) & set((i2, j2))
                pivot = shared.pop()
                end1 = i1 + j1 - pivot
                end2 = i2 + j2 - pivot
                value *= self._path(kerns[pivot],
                                    (m1, kerns[end1]), (m2, kerns[end2]))
            else:
                raise UnsupportedCase(
                    "connected graph pieces beyond one pair or a two-edge "
                    "path are outside the numeric envelope")
        return value


class _WeightShim:
    """Ball-supported callable: coefficient times background factors,
    shaped like a test function for the decorated tensor rule."""

    def __init__(self, d, center, radius, fn):
        self.d = d
        self.center = center
        self.radius = radius
        self._fn = fn

    @classmethod
    def from_term(cls, ev: _GraphEvaluator, dk: DKTerm) -> "_WeightShim":
        coeff = dk.coefficient
        fields = [ev.phi.diff(a) for a in dk.residual]

        def fn(pts):
            vals = np.asarray(coeff(pts), dtype=float)
            for fld in fields:
                vals = vals * np.asarray(fld(pts), dtype=float)
            return vals

        return cls(coeff.d, coeff.center, coeff.radius, fn)

    def __call__(self, pts):
        return self._fn(pts)


def _components(graph: MultiGraph) -> List[Tuple[int, ...]]:
    parent = list(range(graph.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j, _ in graph.edges():
        parent[find(i)] = find(j)
    groups: Dict[int, List[int]] = {}
    for v in range(graph.n):
        groups.setdefault(find(v), []).append(v)
    return [tuple(sorted(g)) for g in sorted(groups.values())]


# -- the products ---------------------------------------------------------


def _require_pairwise_disjoint(functionals: Sequence[LocalFunctional]):
    for a, b in itertools.combinations(range(len(functionals)), 2):
        if not supports_disjoint(functionals[a], functionals[b]):
            raise DomainError(
                f"supports of arguments {a} and {b} intersect; the "
                "unrenormalized product is undefined there")


def product_expansion(functionals: Sequence[LocalFunctional],
                      phi: FieldConfiguration, m: float, order: int,
                      scheme: QuadratureScheme = DEFAULT_SCHEME,
                      rule_shift: int = 0) -> ProductResult:
    """The graph expansion of the n-fold product at a background
    configuration, with per-graph provenance.

    ``rule_shift`` offsets the ball-rule order; running the same series
    on two shifts is the cross-validation handle used by the causality
    check."""
    _require_pairwise_disjoint(functionals)
    if rule_shift:
        scheme = replace(scheme, gauss_n=scheme.gauss_n + rule_shift)
    ev = _GraphEvaluator(functionals, phi, m, scheme)
    data: Dict[int, float] = {}
    rows = []
    for term in expansion_terms(len(functionals), order):
        value = ev.term_value(term.graph)
        data[term.order] = data.get(term.order, 0.0) + float(term.weight) * value
        rows.append((term.order, term.graph, term.weight, value))
    return ProductResult(FormalSeries.from_dict(data, order), tuple(rows))


def E_n(functionals: Sequence[LocalFunctional], phi: FieldConfiguration,
        m: float, order: int,
        scheme: QuadratureScheme = DEFAULT_SCHEME,
        rule_shift: int = 0,
        renormalizer: Optional[Callable[[ScalarDistribution],
                                        ScalarDistribution]] = None) -> FormalSeries:
    """The n-fold product as a truncated series.

    The empty product is 1 and a single argument evaluates to itself.
    Without a ``renormalizer`` the supports must be pairwise disjoint.
    With one, the expansion runs through the scalar-kernel reduction at
    zero background: every kernel is passed through ``renormalizer``
    before pairing, and arbitrary supports are allowed.
    """
    if not functionals:
        return FormalSeries.constant(1.0, order)
    if renormalizer is not None:
        return _renormalized_product(functionals, phi, m, order, scheme,
                                     renormalizer)
    if len(functionals) == 1:
        return FormalSeries.constant(
            evaluate(functionals[0], phi, scheme), order)
    return product_expansion(functionals, phi, m, order, scheme,
                             rule_shift).series


def star_E(F: LocalFunctional, G: LocalFunctional, phi: FieldConfiguration,
           m: float, order: int,
           scheme: QuadratureScheme = DEFAULT_SCHEME,
           rule_shift: int = 0) -> FormalSeries:
    """The binary product: ℏ^k carries 1/k! times the k-fold
    contraction of the k-th derivative kernels."""
    return E_n([F, G], phi, m, order, scheme, rule_shift)


def _renormalized_product(functionals, phi, m, order, scheme, renormalizer):
    if not (phi.is_constant and phi.constant_value() == 0.0):
        raise UnsupportedCase(
            "the renormalized product is evaluated at zero background")
    zero_order = 1.0
    for F in functionals:
        zero_order *= evaluate(F, phi, scheme)
    data: Dict[int, float] = {0: zero_order}
    for term in wick_expansion(functionals, m, order):
        value = pair(renormalizer(term.kernel), term.tests, scheme)
        data[term.order] = data.get(term.order, 0.0) + float(term.weight) * value
    return FormalSeries.from_dict(data, order)


# -- Euclidean causality ---------------------------------------------------


def _compositions(total: int, slots: int):
    if slots == 0:
        if total == 0:
            yield ()
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, slots - 1):
            yield (head,) + rest


def _split_blocks(functionals, index_set):
    n = len(functionals)
    I = sorted(set(index_set))
    if not I or len(I) >= n or any(i < 0 or i >= n for i in I):
        raise PreconditionViolated(
            "the index set must be a nonempty proper subset of the slots")
    Ic = [j for j in range(n) if j not in I]
    for i in I:
        for j in Ic:
            if not supports_disjoint(functionals[i], functionals[j]):
                raise PreconditionViolated(
                    f"blocks are not support-disjoint: slots {i} and {j}")
    return I, Ic


def block_product(functionals: Sequence[LocalFunctional],
                  index_set: Sequence[int],
                  phi: FieldConfiguration, m: float, order: int,
                  scheme: QuadratureScheme = DEFAULT_SCHEME,
                  rule_shift: int = 0) -> FormalSeries:
    """The n-fold product assembled through a bracketing: every graph
    is re-derived as (cross edges between the blocks) x (graph inside
    the index set) x (graph inside the complement), each with its own
    block weight.  Coefficient-wise equality with the direct expansion
    is the Euclidean causality statement."""
    I, Ic = _split_blocks(functionals, index_set)
    for block in (I, Ic):
        for a, b in itertools.combinations(block, 2):
            if not supports_disjoint(functionals[a], functionals[b]):
                raise PreconditionViolated(
                    f"supports overlap inside a block: slots {a} and {b}")
    n = len(functionals)
    if rule_shift:
        scheme = replace(scheme, gauss_n=scheme.gauss_n + rule_shift)
    ev = _GraphEvaluator(functionals, phi, m, scheme)
    pairs = vertex_pairs(n)
    cross_pairs = [(min(i, j), max(i, j)) for i in I for j in Ic]
    data: Dict[int, float] = {}

    def block_terms(block, budget):
        for wt in expansion_terms(len(block), budget):
            mult = [0] * len(pairs)
            for (a, b), mv in zip(vertex_pairs(len(block)), wt.graph.mult):
                mult[pairs.index((block[a], block[b]))] = mv
            yield wt.order, wt.weight, mult

    for k in range(order + 1):
        for cross in _compositions(k, len(cross_pairs)):
            cross_weight = Fraction(1)
            for c in cross:
                cross_weight /= math.factorial(c)
            for l_i, w_i, mult_i in block_terms(I, order - k):
                for l_c, w_c, mult_c in block_terms(Ic, order - k - l_i):
                    mult = [a + b for a, b in zip(mult_i, mult_c)]
                    for (a, b), c in zip(cross_pairs, cross):
                        mult[pairs.index((a, b))] += c
                    graph = MultiGraph(n, tuple(mult))
                    weight = cross_weight * w_i * w_c
                    value = ev.term_value(graph)
                    data[k + l_i + l_c] = (data.get(k + l_i + l_c, 0.0)
                                           + float(weight) * value)

    return FormalSeries.from_dict(data, order)


def causal_factorization_check(functionals: Sequence[LocalFunctional],
                               index_set: Sequence[int],
                               phi: FieldConfiguration, m: float, order: int,
                               scheme: QuadratureScheme = DEFAULT_SCHEME) -> FormalSeries:
    """Per-order relative deviation of E_n from E_I x E_Ic.

    The right side runs through ``block_product`` on a shifted
    quadrature rule, so agreement checks the combinatorial
    factorization and the numerics at once.  Coefficient k of the
    returned series is |lhs_k - rhs_k| / max(|lhs_k|, |rhs_k|), zero
    when both vanish; the scale-invariant form keeps the pass
    threshold meaningful across amplitude choices.
    """
    rhs = block_product(functionals, index_set, phi, m, order, scheme,
                        rule_shift=3)
    lhs = product_expansion(functionals, phi, m, order, scheme).series
    truncation = min(lhs.truncation, rhs.truncation)
    data = {}
    for k in range(truncation + 1):
        a, b = lhs.coefficient(k), rhs.coefficient(k)
        scale = max(abs(a), abs(b))
        data[k] = abs(a - b) / scale if scale else 0.0
    return FormalSeries.from_dict(data, truncation)


# -- the scalar-kernel reduction -------------------------------------------


@dataclass(frozen=True)
class WickTerm:
    """One graph term of the zero-background expansion: an exact
    rational weight, the coefficient tests to integrate against, and
    the translation-invariant scalar kernel."""

    weight: Fraction
    tests: Tuple
    kernel: ScalarDistribution

    @property
    def order(self) -> int:
        return self.kernel.total_edges


def wick_expansion(functionals: Sequence[LocalFunctional], m: float,
                   order: int) -> List[WickTerm]:
    """Split the zero-background n-fold product into scalar kernels:
    graph terms whose slots are exactly saturated survive, each as a
    propagator-power product against the coefficient tests."""
    if not functionals:
        return []
    d = functionals[0].d
    out: List[WickTerm] = []
    for term in expansion_terms(len(functionals), order):
        graph = term.graph
        if graph.total_edges == 0:
            continue
        kernels = [derivative_kernel(F, graph.degree(i))
                   for i, F in enumerate(functionals)]
        if any(k.is_zero for k in kernels):
            continue
        factors = tuple(PropFactor(i, j, mult) for i, j, mult in graph.edges())
        # at zero background only fully contracted slots survive
        survivors = []
        for kern in kernels:
            live = [dk for dk in kern.terms if not dk.residual]
            survivors.append(live)
        if not all(survivors):
            continue
        for combo in itertools.product(*survivors):
            if any(sum(a) != 0 for dk in combo for a in dk.arg_derivs):
                raise UnsupportedCase(
                    "derivative-decorated scalar kernels are outside the "
                    "numeric envelope")
            weight = term.weight * math.prod(
                (dk.prefactor for dk in combo), start=Fraction(1))
            tests = tuple(dk.coefficient for dk in combo)
            kernel = ScalarDistribution(graph.n, d, m, factors)
            out.append(WickTerm(weight=weight, tests=tests, kernel=kernel))
    return out


def wick_order_pair(F: LocalFunctional, G: LocalFunctional,
                    phi: FieldConfiguration, m: float,
                    scheme: QuadratureScheme = DEFAULT_SCHEME) -> FormalSeries:
    """The inverse-ordering quadratic correction for linear arguments:
    ℏ^0 is the pointwise product, ℏ^1 subtracts the propagator pairing
    of the two smearing functions."""
    for X in (F, G):
        if len(X.terms) != 1 or X.terms[0].power != 1 or \
                any(sum(a) for a in X.terms[0].derivs):
            raise NonLinearInput(
                "ordering corrections are defined for plain linear "
                "functionals")
    d = F.d
    f = F.terms[0].coefficient
    g = G.terms[0].coefficient
    pref = float(F.terms[0].prefactor * G.terms[0].prefactor)
    cross = pair(ScalarDistribution.single_power(d, m, 1), (f, g), scheme)
    return FormalSeries.from_dict(
        {0: evaluate(F, phi, scheme) * evaluate(G, phi, scheme),
         1: -pref * cross}, 1)


def product_cross_support(F: LocalFunctional, G: LocalFunctional):
    """Support rectangles of the cross part of the second derivative
    of the pointwise product FG: one ball from each factor.  For
    disjoint arguments every rectangle misses the diagonal, which is
    the non-locality of the product in checkable form."""
    KF = derivative_kernel(F, 1)
    KG = derivative_kernel(G, 1)
    return tuple(
        ((tf.coefficient.center, tf.coefficient.radius),
         (tg.coefficient.center, tg.coefficient.radius))
        for tf in KF.terms for tg in KG.terms)
