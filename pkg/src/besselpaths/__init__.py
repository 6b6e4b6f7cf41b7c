"""Non-intersecting squared Bessel paths toolkit.

A numerical library for a model of n non-intersecting squared Bessel
processes that all start at a common positive value and are conditioned
to end at the hard edge x = 0.  It provides

* exact Monte-Carlo simulation through the Laguerre matrix bridge
  (:mod:`besselpaths.paths`),
* the finite-n determinantal correlation kernel built from multiple
  orthogonal polynomials with modified Bessel weights
  (:mod:`besselpaths.mop`),
* the limiting spectral curve, density and boundary of the path-filled
  region (:mod:`besselpaths.curve`),
* the universal sine / Airy / Bessel scaling limits and a convergence
  harness comparing them with the finite-n kernel
  (:mod:`besselpaths.limits`),
* from-scratch special functions used everywhere else
  (:mod:`besselpaths.specfun`),
* a command line front end (:mod:`besselpaths.cli`).
"""

__version__ = "0.1.0"

from .curve import (
    ModelParams,
    CaseLabel,
    BranchPoints,
    critical_time,
    classify_case,
    branch_points,
    zeta_at,
    density,
    boundary_curve,
)

__all__ = [
    "__version__",
    "ModelParams",
    "CaseLabel",
    "BranchPoints",
    "critical_time",
    "classify_case",
    "branch_points",
    "zeta_at",
    "density",
    "boundary_curve",
]
