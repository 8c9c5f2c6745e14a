"""Bundled test instances and reference values for the reproduction harness."""

from __future__ import annotations

from dataclasses import dataclass

from .cones import SemialgebraicSystem
from .polynomials import Polynomial, parse_polynomial

MOTZKIN_TEXT = "x1^2*x2^2*(x1^2+x2^2-1)+1/27"


def motzkin_polynomial() -> Polynomial:
    """Scaled Motzkin variant: nonnegative on R^2 but not a sum of squares.

    Degree 6, global minimum 0 at the four points (+-1/sqrt(3), +-1/sqrt(3)).
    """
    return parse_polynomial(MOTZKIN_TEXT, 2)


def free_plane() -> SemialgebraicSystem:
    """K = R^2: no generators, so every cone level is plain SOS."""
    return SemialgebraicSystem(2, ())


@dataclass(frozen=True)
class MotzkinReferenceRow:
    d: int
    lambdas: tuple[float, float, float]   # (lambda0, lambda1, lambda2)
    p: float


# Reference optima for the plain-l1 projection of the Motzkin variant onto
# the degree-2d SOS cone; the distance p is the quantity compared against,
# the lambda split is informational (the optimizer set is not a singleton).
MOTZKIN_REFERENCE: tuple[MotzkinReferenceRow, ...] = (
    MotzkinReferenceRow(3, (5.445e-3, 5.367e-3, 5.367e-3), 1.6e-2),
    MotzkinReferenceRow(4, (2.4e-4, 9.36e-4, 9.36e-4), 2.0e-3),
    MotzkinReferenceRow(5, (0.04e-5, 4.34e-5, 4.34e-5), 8.0e-5),
)

# Acceptance tolerances for the reproduction harness.
MOTZKIN_P_RELATIVE_TOL = 0.15
MOTZKIN_SYMMETRY_RELATIVE_TOL = 1e-2
