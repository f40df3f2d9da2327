"""Interval contractions, Vitali-style measure quotients, and dyadic martingales.

Derivatives of one measure against another are estimated two ways: quotients
over a sequence of closed intervals shrinking onto a point, and conditional
quotients on refining half-open dyadic partitions.  Both converge to the
density ratio almost everywhere; both are restricted to atomless measures on
the windows they touch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AtomlessRequiredError,
    DegenerateContractionError,
    DomainError,
    NumericDomainError,
    PositivityError,
    ResolutionError,
)
from .measures import (
    AnyMeasure,
    DensityMeasure,
    IntervalUnion,
    ensure_same_grid,
    integrate,
)

__all__ = [
    "VitaliSystem1D",
    "ContractionSequence",
    "VitaliQuotients",
    "DyadicPartitionTree",
    "MartingaleEstimate",
    "make_contraction",
    "vitali_derivative",
    "martingale_estimate",
    "refine",
    "levels_table",
]


@dataclass(frozen=True)
class VitaliSystem1D:
    """The closed-interval Vitali system, with a resolution floor.

    In one dimension the closed intervals form a Vitali system whose borders
    are the two endpoints, a null set for atomless measures.  ``min_length``
    guards against intervals below the grid resolution of the measures being
    differentiated.
    """

    kind: str = "closed-intervals"
    min_length: float = 0.0

    def admits(self, measure: AnyMeasure) -> bool:
        return self.min_length >= measure.grid.spacing


@dataclass(frozen=True)
class ContractionSequence:
    """Intervals shrinking onto a point, mass-comparable to Vitali sets.

    ``side`` selects symmetric windows (the default, comparability constant
    1) or one-sided windows ``[xi, xi+r]`` / ``[xi-r, xi]`` whose enclosing
    symmetric Vitali interval gives constant 1/2.
    """

    center: float
    radii: np.ndarray
    comparability_constant: float
    side: str = "both"
    vitali: VitaliSystem1D = VitaliSystem1D()
    domain: tuple = (-np.inf, np.inf)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or r.size < 1 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise NumericDomainError("radii must be strictly decreasing and positive")
        r.setflags(write=False)
        object.__setattr__(self, "radii", r)
        if self.side not in ("both", "left", "right"):
            raise NumericDomainError(f"unknown side {self.side!r}")

    @property
    def n_max(self) -> int:
        return self.radii.size

    def set_at(self, n: int) -> IntervalUnion:
        """The n-th window (1-based), clipped to the measure domain."""
        if not 1 <= n <= self.n_max:
            raise DomainError(f"level {n} outside 1..{self.n_max}")
        r = self.radii[n - 1]
        lo, hi = self.domain
        if self.side == "both":
            a, b = self.center - r, self.center + r
        elif self.side == "left":
            a, b = self.center - r, self.center
        else:
            a, b = self.center, self.center + r
        return IntervalUnion.of((max(a, lo), min(b, hi)))

    def sets(self):
        return [self.set_at(n) for n in range(1, self.n_max + 1)]


def make_contraction(
    xi: float,
    r0: float,
    ratio: float,
    n_max: int,
    mu: DensityMeasure,
    side: str = "both",
) -> ContractionSequence:
    """Build and validate a geometric contraction ``r_n = r0 * ratio**(n-1)``.

    Parameters
    ----------
    xi : center, strictly inside the domain of ``mu``.
    r0, ratio, n_max : geometric radius schedule; the smallest radius must
        stay at or above the grid spacing.
    mu : reference measure; every window must carry positive mass.
    side : "both" for symmetric windows, "left"/"right" for one-sided ones.
    """
    g = mu.grid
    if not (g.lower < xi < g.upper):
        raise DomainError(f"center {xi} is not interior to [{g.lower}, {g.upper}]")
    if not (0.0 < ratio < 1.0):
        raise NumericDomainError("ratio must lie in (0, 1)")
    if r0 <= 0 or n_max < 1:
        raise NumericDomainError("need r0 > 0 and n_max >= 1")
    radii = r0 * ratio ** np.arange(n_max)
    if radii[-1] < g.spacing:
        raise ResolutionError(
            f"smallest radius {radii[-1]:.3g} is below the grid spacing {g.spacing:.3g}"
        )
    cs = ContractionSequence(
        center=float(xi),
        radii=radii,
        comparability_constant=1.0 if side == "both" else 0.5,
        side=side,
        vitali=VitaliSystem1D(min_length=float(radii[-1])),
        domain=(g.lower, g.upper),
    )
    _require_atomless_on(mu, cs.set_at(1))
    for n in range(1, n_max + 1):
        if not integrate(mu, cs.set_at(n)) > 0.0:
            raise DegenerateContractionError(f"window {n} has zero mass")
    return cs


def _require_atomless_on(m: AnyMeasure, window: IntervalUnion) -> None:
    for loc, _ in m.atoms:
        if window.contains(loc):
            raise AtomlessRequiredError(f"atom at {loc} inside the differentiation window")


def _oscillation_flag(values: np.ndarray) -> bool:
    """Increments strictly increasing over the last three steps."""
    if values.size < 4:
        return False
    d = np.abs(np.diff(values))[-3:]
    return bool(d[0] < d[1] < d[2])


@dataclass(frozen=True)
class VitaliQuotients:
    """Quotient trail nu(E_n)/mu(E_n); the last entry estimates the derivative."""

    values: np.ndarray
    oscillation_flagged: bool
    sequence: ContractionSequence

    @property
    def derivative(self):
        return self.values[-1]


def vitali_derivative(
    nu: AnyMeasure, mu: DensityMeasure, cs: ContractionSequence
) -> VitaliQuotients:
    """Measure quotients of ``nu`` against ``mu`` along a contraction.

    Requires ``nu << mu`` (not re-verified here) and atomless measures on the
    largest window.  A non-convergent tail is flagged, not fatal: the
    almost-everywhere guarantee admits exceptional points.
    """
    ensure_same_grid(nu.grid, mu.grid)
    _require_atomless_on(mu, cs.set_at(1))
    _require_atomless_on(nu, cs.set_at(1))
    out = np.empty(cs.n_max, dtype=complex if nu._dtype is complex else float)
    for n in range(1, cs.n_max + 1):
        window = cs.set_at(n)
        denom = integrate(mu, window)
        if not denom > 0.0:
            raise DegenerateContractionError(f"window {n} has zero mass")
        out[n - 1] = integrate(nu, window) / denom
    out.setflags(write=False)
    return VitaliQuotients(out, _oscillation_flag(out), cs)


class DyadicPartitionTree:
    """Refining dyadic partitions of a half-open root interval.

    Level k splits ``[lower, upper)`` into 2**k half-open cells.  Every cell
    down to ``depth`` must carry positive base mass and must not be narrower
    than the grid spacing.
    """

    def __init__(self, base_measure: DensityMeasure, depth: int,
                 lower: float | None = None, upper: float | None = None):
        if depth < 1:
            raise NumericDomainError("depth must be at least 1")
        g = base_measure.grid
        self.lower = g.lower if lower is None else float(lower)
        self.upper = g.upper if upper is None else float(upper)
        if not self.upper > self.lower:
            raise NumericDomainError("root interval is empty")
        self.base_measure = base_measure
        self.depth = int(depth)
        _require_atomless_on(base_measure, IntervalUnion.of((self.lower, self.upper)))
        width = (self.upper - self.lower) / 2 ** depth
        if width < g.spacing:
            raise ResolutionError(
                f"depth-{depth} cells of width {width:.3g} fall below spacing {g.spacing:.3g}"
            )
        for level in range(1, depth + 1):
            for a, b in self.cells(level):
                if not self.cell_mass(self.base_measure, a, b) > 0.0:
                    raise PositivityError(
                        f"cell [{a:g}, {b:g}) at level {level} has zero base mass"
                    )

    def cells(self, level: int):
        if not 1 <= level <= self.depth:
            raise DomainError(f"level {level} outside 1..{self.depth}")
        k = 2 ** level
        edges = self.lower + (self.upper - self.lower) * np.arange(k + 1) / k
        return [(edges[i], edges[i + 1]) for i in range(k)]

    def cell_containing(self, level: int, lam: float):
        if not (self.lower <= lam < self.upper):
            raise DomainError(f"{lam} outside the root interval [{self.lower}, {self.upper})")
        k = 2 ** level
        i = min(int((lam - self.lower) / (self.upper - self.lower) * k), k - 1)
        width = (self.upper - self.lower) / k
        return (self.lower + i * width, self.lower + (i + 1) * width)

    @staticmethod
    def cell_mass(m: AnyMeasure, a: float, b: float):
        # Half-open [a, b); identical to the closed value for atomless measures.
        return m.density_part(IntervalUnion.of((a, b))) + m.atom_part(
            IntervalUnion.of((a, b)), half_open=True
        )


def refine(tree: DyadicPartitionTree) -> DyadicPartitionTree:
    """One more level of dyadic refinement, re-verifying all invariants."""
    return DyadicPartitionTree(
        tree.base_measure, tree.depth + 1, lower=tree.lower, upper=tree.upper
    )


@dataclass(frozen=True)
class MartingaleEstimate:
    """Conditional quotients X_k = nu(F_k)/mu(F_k) down the cell chain at a point."""

    point: float
    values: np.ndarray
    cells: tuple

    @property
    def final(self):
        return self.values[-1]


def martingale_estimate(
    nu: AnyMeasure, tree: DyadicPartitionTree, lam: float
) -> MartingaleEstimate:
    """Partition-conditional derivative estimates of ``nu`` at ``lam``.

    Requires ``nu`` absolutely continuous with respect to the tree's base
    measure and atomless on the root interval.
    """
    ensure_same_grid(nu.grid, tree.base_measure.grid)
    _require_atomless_on(nu, IntervalUnion.of((tree.lower, tree.upper)))
    values = np.empty(tree.depth, dtype=complex if nu._dtype is complex else float)
    cells = []
    for level in range(1, tree.depth + 1):
        a, b = tree.cell_containing(level, lam)
        cells.append((a, b))
        values[level - 1] = tree.cell_mass(nu, a, b) / tree.cell_mass(
            tree.base_measure, a, b
        )
    values.setflags(write=False)
    return MartingaleEstimate(float(lam), values, tuple(cells))


def levels_table(values: np.ndarray, reference) -> list:
    """Per-level rows ``(n, value, |value - reference|)`` for CSV emission."""
    return [
        (n + 1, complex(v), float(abs(v - reference)))
        for n, v in enumerate(np.asarray(values))
    ]
