"""Truncated moment sequences and their matrix machinery.

A moment sequence stores y_alpha for every |alpha| <= max_degree.  From it
we build the Riesz functional, moment and localizing matrices, the basis
matrices that express g(x) * v_d(x) v_d(x)^T monomial by monomial, the dual
norm of the associated functional, necessary-condition checks for
representing measures on a semialgebraic set, and Carleman-style partial-sum
diagnostics.  All checks here are finite truncations: verdicts are named
"consistent up to", never "proved".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .polynomials import (
    Exponent,
    Polynomial,
    WeightSequence,
    monomial_basis,
    total_degree,
)

# A symmetric matrix is accepted as PSD iff lmin >= -PSD_TOL * max(1, lmax).
PSD_TOL = 1e-8


class MomentDataError(ValueError):
    """Raised when a moment sequence is incomplete or malformed."""


class DegreeRangeError(ValueError):
    """Raised when an operation needs moments beyond max_degree."""


class MomentSequence:
    """Values y_alpha for all alpha with |alpha| <= max_degree."""

    __slots__ = ("dimension", "max_degree", "_values")

    def __init__(self, dimension: int, max_degree: int, values: Mapping[Exponent, float]):
        if dimension < 1:
            raise MomentDataError(f"dimension must be >= 1, got {dimension}")
        if max_degree < 0:
            raise MomentDataError(f"max_degree must be >= 0, got {max_degree}")
        basis = monomial_basis(dimension, max_degree)
        vals: dict[Exponent, float] = {}
        missing = []
        for alpha in basis:
            if alpha in values:
                vals[alpha] = float(values[alpha])
            else:
                missing.append(alpha)
        if missing:
            raise MomentDataError(
                f"moment sequence missing {len(missing)} entries up to degree "
                f"{max_degree}, first missing alpha = {missing[0]}"
            )
        extra = [a for a in values if tuple(a) not in vals]
        if extra:
            raise MomentDataError(
                f"moment entry {extra[0]} exceeds max_degree {max_degree}"
            )
        self.dimension = dimension
        self.max_degree = max_degree
        self._values = vals

    @classmethod
    def from_function(
        cls, dimension: int, max_degree: int, fn: Callable[[Exponent], float]
    ) -> "MomentSequence":
        return cls(
            dimension,
            max_degree,
            {a: fn(a) for a in monomial_basis(dimension, max_degree)},
        )

    @classmethod
    def dirac(cls, point: Sequence[float], max_degree: int) -> "MomentSequence":
        p = [float(x) for x in point]

        def mono(alpha: Exponent) -> float:
            v = 1.0
            for x, a in zip(p, alpha):
                if a:
                    v *= x ** a
            return v

        return cls.from_function(len(p), max_degree, mono)

    @classmethod
    def from_atoms(
        cls,
        points: Sequence[Sequence[float]],
        weights: Sequence[float],
        max_degree: int,
    ) -> "MomentSequence":
        """Moments of the atomic measure sum_i weights[i] * delta(points[i])."""
        if len(points) != len(weights):
            raise MomentDataError("points and weights lengths differ")
        n = len(points[0])

        def mono(alpha: Exponent) -> float:
            total = 0.0
            for p, w in zip(points, weights):
                v = w
                for x, a in zip(p, alpha):
                    if a:
                        v *= float(x) ** a
                total += v
            return total

        return cls.from_function(n, max_degree, mono)

    @property
    def values(self) -> dict[Exponent, float]:
        return self._values

    def value(self, alpha: Exponent) -> float:
        alpha = tuple(alpha)
        try:
            return self._values[alpha]
        except KeyError:
            raise DegreeRangeError(
                f"moment y_{alpha} (degree {sum(alpha)}) not available; "
                f"max_degree is {self.max_degree}"
            ) from None

    def __repr__(self):
        return f"MomentSequence(n={self.dimension}, max_degree={self.max_degree})"


def riesz(y: MomentSequence, f: Polynomial) -> float:
    """Apply the Riesz functional: sum of f_alpha * y_alpha."""
    if f.degree > y.max_degree:
        worst = max(f.terms, key=total_degree)
        raise DegreeRangeError(
            f"riesz needs y_{worst} of degree {total_degree(worst)}, "
            f"max_degree is {y.max_degree}"
        )
    return sum(c * y.value(alpha) for alpha, c in f.terms.items())


def eig_range(mat: np.ndarray) -> tuple[float, float]:
    """(smallest, largest) eigenvalue of a symmetric matrix."""
    if mat.shape[0] == 0:
        return (0.0, 0.0)
    vals = np.linalg.eigvalsh((mat + mat.T) / 2.0)
    return (float(vals[0]), float(vals[-1]))


def is_psd(mat: np.ndarray, tol: float = PSD_TOL) -> bool:
    lmin, lmax = eig_range(mat)
    return lmin >= -tol * max(1.0, abs(lmax))


class BasisMatrixSet:
    """Matrices B_alpha with g(x) v_d(x) v_d(x)^T = sum_alpha x^alpha B_alpha.

    For g = 1 these reduce to the 0/1 indicator matrices of beta + gamma =
    alpha over the order-d monomial basis.
    """

    def __init__(self, generator: Polynomial, order: int):
        if order < 0:
            raise ValueError(f"order must be >= 0, got {order}")
        self.generator = generator
        self.order = order
        self.basis = monomial_basis(generator.dimension, order)
        self.side = len(self.basis)
        self.max_exponent_degree = 2 * order + generator.degree
        matrices: dict[Exponent, np.ndarray] = {}
        for bi, beta in enumerate(self.basis):
            for gi in range(bi, self.side):
                gamma = self.basis[gi]
                for delta, coeff in generator.terms.items():
                    alpha = tuple(b + g + d for b, g, d in zip(beta, gamma, delta))
                    mat = matrices.get(alpha)
                    if mat is None:
                        mat = np.zeros((self.side, self.side))
                        matrices[alpha] = mat
                    mat[bi, gi] += coeff
                    if gi != bi:
                        mat[gi, bi] += coeff
        self._matrices = matrices

    def exponents(self) -> list[Exponent]:
        """All alpha up to degree 2*order + deg(g), including zero matrices."""
        return monomial_basis(self.generator.dimension, self.max_exponent_degree)

    def nonzero_exponents(self) -> list[Exponent]:
        return sorted(self._matrices, key=lambda a: (sum(a), a))

    def matrix(self, alpha: Exponent) -> np.ndarray:
        mat = self._matrices.get(tuple(alpha))
        if mat is None:
            return np.zeros((self.side, self.side))
        return mat

    def entries(self, alpha: Exponent) -> list[tuple[int, int, float]]:
        """Upper-triangle (i, j, value) entries of B_alpha, i <= j."""
        mat = self._matrices.get(tuple(alpha))
        if mat is None:
            return []
        out = []
        for i in range(self.side):
            for j in range(i, self.side):
                v = mat[i, j]
                if v != 0.0:
                    out.append((i, j, float(v)))
        return out


def build_basis_matrices(g: Polynomial, d: int) -> BasisMatrixSet:
    return BasisMatrixSet(g, d)


def moment_matrix(y: MomentSequence, d: int) -> np.ndarray:
    """Matrix with entry (beta, gamma) = y_{beta+gamma} over the order-d basis."""
    if 2 * d > y.max_degree:
        raise DegreeRangeError(
            f"moment matrix of order {d} needs degree {2 * d}, "
            f"max_degree is {y.max_degree}"
        )
    basis = monomial_basis(y.dimension, d)
    s = len(basis)
    mat = np.empty((s, s))
    for i, beta in enumerate(basis):
        for j in range(i, s):
            gamma = basis[j]
            v = y.value(tuple(b + g for b, g in zip(beta, gamma)))
            mat[i, j] = v
            mat[j, i] = v
    return mat


def localizing_matrix(y: MomentSequence, g: Polynomial, d: int) -> np.ndarray:
    """Moment matrix of the shifted sequence z_alpha = L_y(g * x^alpha)."""
    if 2 * d + g.degree > y.max_degree:
        raise DegreeRangeError(
            f"localizing matrix of order {d} for deg-{g.degree} generator needs "
            f"degree {2 * d + g.degree}, max_degree is {y.max_degree}"
        )
    basis = monomial_basis(y.dimension, d)
    s = len(basis)
    mat = np.zeros((s, s))
    for i, beta in enumerate(basis):
        for j in range(i, s):
            gamma = basis[j]
            v = 0.0
            for delta, coeff in g.terms.items():
                v += coeff * y.value(
                    tuple(b + gg + dd for b, gg, dd in zip(beta, gamma, delta))
                )
            mat[i, j] = v
            mat[j, i] = v
    return mat


@dataclass(frozen=True)
class SupportTestVerdict:
    """Finite-truncation verdict for nonnegativity on the support."""

    consistent: bool
    order: int                 # order checked (consistent) or violating order
    min_eigenvalue: float      # most negative eigenvalue seen at that order

    def __str__(self):
        if self.consistent:
            return f"ConsistentUpTo({self.order})"
        return f"Violated(order={self.order}, eig={self.min_eigenvalue:.3e})"


def support_nonnegativity_test(
    y: MomentSequence, f: Polynomial, d: int, tol: float = PSD_TOL
) -> SupportTestVerdict:
    """Check M_k(f y) PSD for k = 0..d; first violation wins."""
    if 2 * d + f.degree > y.max_degree:
        raise DegreeRangeError(
            f"test at order {d} needs degree {2 * d + f.degree}, "
            f"max_degree is {y.max_degree}"
        )
    last_min = 0.0
    for k in range(d + 1):
        mat = localizing_matrix(y, f, k)
        lmin, lmax = eig_range(mat)
        if lmin < -tol * max(1.0, abs(lmax)):
            return SupportTestVerdict(False, k, lmin)
        last_min = lmin
    return SupportTestVerdict(True, d, last_min)


def dual_norm(y: MomentSequence, w: WeightSequence) -> float:
    """Finite truncation of sup |y_alpha| / w_alpha over stored alpha."""
    best = 0.0
    for alpha, v in y.values.items():
        best = max(best, abs(v) / w.weight(alpha))
    return best


@dataclass(frozen=True)
class GeneratorCheck:
    label: int                 # 0 is the implicit unit generator
    order: int
    min_eigenvalue: float
    max_eigenvalue: float
    psd_ok: bool
    skipped: bool = False      # order d - v_j negative; nothing to check


@dataclass(frozen=True)
class KMomentReport:
    checks: tuple[GeneratorCheck, ...]
    dual_norm_bound: float     # finite dual-norm estimate against lw weights
    necessary_conditions_hold: bool
    violated_label: int | None = None
    violated_eigenvalue: float | None = None

    def __str__(self):
        if self.necessary_conditions_hold:
            return f"NecessaryConditionsHold(M={self.dual_norm_bound:.6g})"
        return (
            f"Violated(generator={self.violated_label}, "
            f"eig={self.violated_eigenvalue:.3e})"
        )


def kmoment_condition_check(
    y: MomentSequence, system, d: int, tol: float = PSD_TOL
) -> KMomentReport:
    """Necessary conditions for y to come from a measure on the set of system.

    Checks PSD-ness of the moment matrix at order d and of each localizing
    matrix at order d - v_j, plus the finite dual-norm bound.  Only the
    truncated, necessary direction is decided here.
    """
    generators: list[Polynomial] = list(system.generators)
    checks: list[GeneratorCheck] = []
    violated: GeneratorCheck | None = None
    for j in range(len(generators) + 1):
        if j == 0:
            g = Polynomial.constant(y.dimension, 1.0)
            order = d
        else:
            g = generators[j - 1]
            order = d - (g.degree + 1) // 2
        if order < 0:
            checks.append(GeneratorCheck(j, order, 0.0, 0.0, True, skipped=True))
            continue
        mat = localizing_matrix(y, g, order)
        lmin, lmax = eig_range(mat)
        ok = lmin >= -tol * max(1.0, abs(lmax))
        check = GeneratorCheck(j, order, lmin, lmax, ok)
        checks.append(check)
        if not ok and violated is None:
            violated = check
    bound = dual_norm(y, WeightSequence.lw())
    if violated is None:
        return KMomentReport(tuple(checks), bound, True)
    return KMomentReport(
        tuple(checks), bound, False, violated.label, violated.min_eigenvalue
    )


@dataclass(frozen=True)
class CarlemanVariableReport:
    variable: int                      # 1-based
    terms: tuple[float, ...]           # L_z(x_i^{2k})^(-1/2k), 0.0 where flagged
    flagged: tuple[bool, ...]          # True where L_z(x_i^{2k}) <= 0
    partial_sums: tuple[float, ...]    # running sums of terms


@dataclass(frozen=True)
class CarlemanReport:
    shift: Polynomial                  # the multiplier f (1 for the plain case)
    num_terms: int
    variables: tuple[CarlemanVariableReport, ...]
    bound_m: float                     # max_k L_y(x_i^{2k}) / (2k)! on the base y

    def partial_sum(self, variable: int) -> float:
        return self.variables[variable - 1].partial_sums[-1]


def carleman_diagnostic(
    y: MomentSequence, f: Polynomial | None = None, num_terms: int = 8
) -> CarlemanReport:
    """Partial sums of L_z(x_i^{2k})^(-1/2k), z_alpha = L_y(x^alpha * f).

    Divergence of the full series cannot be certified numerically; this
    reports the first num_terms terms and the growth they show.  Terms with
    nonpositive L_z are flagged and contribute zero.
    """
    n = y.dimension
    if f is None:
        f = Polynomial.constant(n, 1.0)
    if 2 * num_terms + f.degree > y.max_degree:
        raise DegreeRangeError(
            f"{num_terms} terms with deg-{f.degree} shift need degree "
            f"{2 * num_terms + f.degree}, max_degree is {y.max_degree}"
        )
    reports = []
    for i in range(n):
        terms = []
        flagged = []
        sums = []
        running = 0.0
        for k in range(1, num_terms + 1):
            shift_alpha = tuple(2 * k if t == i else 0 for t in range(n))
            z = sum(
                c * y.value(tuple(a + b for a, b in zip(alpha, shift_alpha)))
                for alpha, c in f.terms.items()
            )
            if z > 0.0:
                term = z ** (-1.0 / (2 * k))
                terms.append(term)
                flagged.append(False)
                running += term
            else:
                terms.append(0.0)
                flagged.append(True)
            sums.append(running)
        reports.append(
            CarlemanVariableReport(i + 1, tuple(terms), tuple(flagged), tuple(sums))
        )
    bound = 0.0
    for i in range(n):
        for k in range(1, num_terms + 1):
            alpha = tuple(2 * k if t == i else 0 for t in range(n))
            if 2 * k <= y.max_degree:
                bound = max(bound, y.value(alpha) / math.factorial(2 * k))
    return CarlemanReport(f, num_terms, tuple(reports), bound)


# ---------------------------------------------------------------------------
# Moment sequence text format: header "n <n> degree <D>", then one line
# "a_1 ... a_n value" per entry.  Completeness is required on read.
# ---------------------------------------------------------------------------

def format_moment_text(y: MomentSequence) -> str:
    lines = [f"n {y.dimension} degree {y.max_degree}"]
    for alpha in monomial_basis(y.dimension, y.max_degree):
        coords = " ".join(str(a) for a in alpha)
        lines.append(f"{coords} {y.value(alpha)!r}")
    return "\n".join(lines) + "\n"


def parse_moment_text(text: str) -> MomentSequence:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MomentDataError("empty moment file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "n" or header[2] != "degree":
        raise MomentDataError(
            f"bad header {lines[0]!r}; expected 'n <n> degree <D>'"
        )
    n, deg = int(header[1]), int(header[3])
    values: dict[Exponent, float] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != n + 1:
            raise MomentDataError(f"bad moment line {ln!r}; expected {n + 1} fields")
        alpha = tuple(int(p) for p in parts[:n])
        values[alpha] = float(parts[n])
    return MomentSequence(n, deg, values)
