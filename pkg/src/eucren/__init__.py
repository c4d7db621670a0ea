"""Symbolic-numeric engine for Euclidean perturbative renormalization
of scalar field theories on flat R^d.

Modules, bottom up:

- ``errors``: shared failure taxonomy and CLI exit-code table.
- ``expr``: exact symbolic atoms (bump profiles, radial maps).
- ``quadrature``: 1d/ball/tensor rules and the scheme record.
- ``bessel``: modified Bessel backends for even-dimension kernels.
- ``kernels``: translation-invariant kernel data (propagator powers,
  delta kernels, cutoffs, extension specs).
- ``propagator``: closed-form P(r), pairings, extensions of two-point
  kernels, fundamental-solution verification.
- ``triple``: the reduced three-point pairing in d = 3.
- ``functionals``: local functionals, field configurations, additivity.
- ``graphs``: labelled multigraph expansion terms with exact weights.
- ``tordered``: the partial product star_E, E_n series, causal
  factorization, Wick reduction at zero background.
- ``renorm``: scaling degrees, extension recursion, power counting.
- ``cli``: batch front-end with deterministic reports.
"""

__version__ = "0.1.0"
