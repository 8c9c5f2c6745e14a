"""Semialgebraic systems and Gram parameterizations of truncated cones.

A system holds the generators g_1..g_m of the set K = {x : g_j(x) >= 0}
together with the cone flavor: quadratic module (one SOS weight per
generator plus the unit) or preordering (one SOS weight per subset product
of generators).  A truncation at level k keeps, for each retained product
g_J, the Gram block of side s(k - v_J) with v_J = ceil(deg(g_J)/2), and the
basis matrices needed to express sums blockwise, monomial by monomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Sequence

import numpy as np

from .moments import BasisMatrixSet, build_basis_matrices
from .polynomials import Exponent, Polynomial

# Subset products blow up as 2^m; refuse preorderings past this many generators.
PREORDER_CAP = 12


class ConeKind(Enum):
    QUADRATIC_MODULE = "quadratic"
    PREORDERING = "preorder"


class ConeModelError(ValueError):
    pass


@dataclass(frozen=True)
class SemialgebraicSystem:
    """Generators of K and the cone flavor used to certify over it."""

    dimension: int
    generators: tuple[Polynomial, ...] = ()
    cone_kind: ConeKind = ConeKind.QUADRATIC_MODULE

    def __post_init__(self):
        if self.dimension < 1:
            raise ConeModelError(f"dimension must be >= 1, got {self.dimension}")
        object.__setattr__(self, "generators", tuple(self.generators))
        for g in self.generators:
            if g.dimension != self.dimension:
                raise ConeModelError(
                    f"generator dimension {g.dimension} != system dimension "
                    f"{self.dimension}"
                )
        if (
            self.cone_kind is ConeKind.PREORDERING
            and len(self.generators) > PREORDER_CAP
        ):
            raise ConeModelError(
                f"preordering with {len(self.generators)} generators exceeds "
                f"cap {PREORDER_CAP} (2^m products)"
            )

    @property
    def num_generators(self) -> int:
        return len(self.generators)

    def labels(self) -> list[tuple[int, ...]]:
        """Block labels: () is the unit; otherwise 1-based generator subsets."""
        m = len(self.generators)
        if self.cone_kind is ConeKind.QUADRATIC_MODULE:
            return [()] + [(j,) for j in range(1, m + 1)]
        out: list[tuple[int, ...]] = [()]
        for size in range(1, m + 1):
            out.extend(combinations(range(1, m + 1), size))
        return out

    def product(self, label: tuple[int, ...]) -> Polynomial:
        g = Polynomial.constant(self.dimension, 1.0)
        for j in label:
            g = g * self.generators[j - 1]
        return g

    def contains(self, point, tol: float = 0.0) -> bool:
        return all(g.evaluate(point) >= -tol for g in self.generators)


@dataclass(frozen=True)
class ConeBlock:
    label: tuple[int, ...]
    product: Polynomial
    sos_order: int
    basis: BasisMatrixSet

    @property
    def side(self) -> int:
        return self.basis.side


@dataclass(frozen=True)
class ConeTruncation:
    """Level-k truncation: Gram blocks plus the degree-excluded labels."""

    system: SemialgebraicSystem
    level: int
    blocks: tuple[ConeBlock, ...]
    excluded: tuple[tuple[tuple[int, ...], int], ...]  # (label, v_J) pairs

    @property
    def degree(self) -> int:
        return 2 * self.level

    def block_by_label(self, label: tuple[int, ...]) -> ConeBlock:
        for b in self.blocks:
            if b.label == tuple(label):
                return b
        raise KeyError(f"no block with label {label}")


def half_degree(g: Polynomial) -> int:
    """v = ceil(deg(g) / 2)."""
    return (g.degree + 1) // 2


def build_truncation(system: SemialgebraicSystem, k: int) -> ConeTruncation:
    """Blocks for the level-k cone; labels with k - v_J < 0 are excluded."""
    if k < 0:
        raise ConeModelError(f"level must be >= 0, got {k}")
    blocks = []
    excluded = []
    for label in system.labels():
        product = system.product(label)
        v = half_degree(product)
        order = k - v
        if order < 0:
            excluded.append((label, v))
            continue
        blocks.append(
            ConeBlock(label, product, order, build_basis_matrices(product, order))
        )
    return ConeTruncation(system, k, tuple(blocks), tuple(excluded))


def gram_reconstruct(
    truncation: ConeTruncation, grams: Sequence[np.ndarray]
) -> Polynomial:
    """Polynomial with h_alpha = sum_J <X_J, B^J_alpha> from PSD blocks X_J.

    By construction h lies in the truncated cone whenever every X_J is PSD.
    """
    if len(grams) != len(truncation.blocks):
        raise ConeModelError(
            f"expected {len(truncation.blocks)} Gram matrices, got {len(grams)}"
        )
    n = truncation.system.dimension
    coeffs: dict[Exponent, float] = {}
    for block, gram in zip(truncation.blocks, grams):
        gram = np.asarray(gram, dtype=float)
        if gram.shape != (block.side, block.side):
            raise ConeModelError(
                f"Gram for block {block.label} has shape {gram.shape}, "
                f"expected ({block.side}, {block.side})"
            )
        for alpha in block.basis.nonzero_exponents():
            v = float(np.tensordot(gram, block.basis.matrix(alpha)))
            if v != 0.0:
                coeffs[alpha] = coeffs.get(alpha, 0.0) + v
    return Polynomial(n, coeffs)


# ---------------------------------------------------------------------------
# System file format: "n <n>", optional "cone quadratic|preorder", then one
# "g: <polynomial>" line per generator.  '#' starts a comment.
# ---------------------------------------------------------------------------

def format_system_text(system: SemialgebraicSystem) -> str:
    lines = [f"n {system.dimension}", f"cone {system.cone_kind.value}"]
    for g in system.generators:
        lines.append(f"g: {g}")
    return "\n".join(lines) + "\n"


def parse_system_text(text: str) -> SemialgebraicSystem:
    from .polynomials import parse_polynomial

    n = None
    kind = ConeKind.QUADRATIC_MODULE
    gen_texts: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("n "):
            n = int(line.split()[1])
        elif line.startswith("cone "):
            kind = ConeKind(line.split()[1])
        elif line.startswith("g:"):
            gen_texts.append(line[2:].strip())
        else:
            raise ConeModelError(f"unrecognized system line {line!r}")
    if n is None:
        raise ConeModelError("system file missing 'n <dimension>' line")
    generators = tuple(parse_polynomial(t, n) for t in gen_texts)
    return SemialgebraicSystem(n, generators, kind)
