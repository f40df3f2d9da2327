"""Scalar and complex measures on a 1-D interval, with densities and atoms.

A measure is a nonnegative (or complex) density sampled on a uniform grid,
plus a finite list of point atoms.  Between grid points the density is the
linear interpolant, and :func:`integrate` evaluates the exact integral of
that interpolant, so set additivity holds to machine precision.

Two integration conventions coexist in the package and both live here:

* :func:`integrate` - the measure-level value, exact for the piecewise
  linear density, used by the differentiation module.
* :func:`quad_discrete` - indicator-masked trapezoid weights, used by the
  operator modules so that projection calculus and Parseval-type identities
  close exactly.  Atoms enter it only when they sit on grid points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    DomainError,
    GridMismatchError,
    NumericDomainError,
    SingularPointError,
)

__all__ = [
    "Grid1D",
    "IntervalUnion",
    "DensityMeasure",
    "ComplexMeasure",
    "MeasureTypeOrder",
    "as_interval_union",
    "same_grid",
    "integrate",
    "absolutely_continuous",
    "rn_derivative_analytic",
    "linear_combination",
    "effective_density",
    "quad_discrete",
    "set_mass_discrete",
    "measure_to_record",
    "measure_from_record",
]

#: Default tolerance for deciding that a density value is numerically null.
NULL_TOL = 1e-12

_RELATIONS = ("equivalent", "dominates", "dominated", "incomparable")


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Uniform grid of at least 3 points covering a closed interval."""

    lower: float
    upper: float
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 3:
            raise NumericDomainError("grid needs at least 3 points")
        if not np.all(np.isfinite(pts)):
            raise NumericDomainError("grid points must be finite")
        if not (pts[0] == self.lower and pts[-1] == self.upper):
            raise NumericDomainError("grid endpoints must match lower/upper")
        steps = np.diff(pts)
        if np.any(steps <= 0):
            raise NumericDomainError("grid points must be strictly increasing")
        h = (self.upper - self.lower) / (pts.size - 1)
        if np.max(np.abs(steps - h)) > 1e-12 * max(abs(h), 1.0):
            raise NumericDomainError("grid spacing must be uniform to 1e-12 relative")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_spacing", float(h))
        w = np.full(pts.size, h)
        w[0] = w[-1] = h / 2.0
        w.setflags(write=False)
        object.__setattr__(self, "_weights", w)

    @classmethod
    def regular(cls, lower: float, upper: float, n: int) -> "Grid1D":
        if n < 3:
            raise NumericDomainError("grid needs at least 3 points")
        if not upper > lower:
            raise NumericDomainError("upper must exceed lower")
        return cls(float(lower), float(upper), np.linspace(lower, upper, int(n)))

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def spacing(self) -> float:
        return self._spacing

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights (h, halved at the two endpoints)."""
        return self._weights

    @property
    def span(self) -> float:
        return self.upper - self.lower

    def index_of(self, x: float, tol: float = 1e-9) -> int:
        """Index of the grid point coinciding with ``x``; error if none does."""
        i = int(round((x - self.lower) / self.spacing))
        i = min(max(i, 0), self.n - 1)
        if abs(self.points[i] - x) > tol * max(self.span, 1.0):
            raise DomainError(f"{x} is not a grid point")
        return i


def same_grid(a: Grid1D, b: Grid1D) -> bool:
    return a is b or (a.n == b.n and a.lower == b.lower and a.upper == b.upper)


def ensure_same_grid(a: Grid1D, b: Grid1D) -> None:
    if not same_grid(a, b):
        raise GridMismatchError("operands live on different grids")


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of closed intervals, kept sorted and merged."""

    intervals: tuple = ()

    def __post_init__(self):
        ivs = []
        for a, b in self.intervals:
            a, b = float(a), float(b)
            if not (np.isfinite(a) and np.isfinite(b)):
                raise NumericDomainError("interval endpoints must be finite")
            if b < a:
                raise NumericDomainError(f"interval [{a}, {b}] is reversed")
            ivs.append((a, b))
        ivs.sort()
        merged = []
        for a, b in ivs:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def of(cls, *pairs) -> "IntervalUnion":
        return cls(tuple(pairs))

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def span(cls, lower: float, upper: float) -> "IntervalUnion":
        return cls(((lower, upper),))

    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def length(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def contains(self, x: float) -> bool:
        return any(a <= x <= b for a, b in self.intervals)

    def mask(self, points: np.ndarray, half_open: bool = False) -> np.ndarray:
        """Boolean membership of each point; ``half_open`` drops right endpoints."""
        m = np.zeros(points.shape, dtype=bool)
        for a, b in self.intervals:
            if half_open:
                m |= (points >= a) & (points < b)
            else:
                m |= (points >= a) & (points <= b)
        return m

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if lo <= hi:
                    out.append((lo, hi))
        return IntervalUnion(tuple(out))

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(self.intervals + other.intervals)

    def clip(self, lower: float, upper: float) -> "IntervalUnion":
        return self.intersect(IntervalUnion.span(lower, upper))


SetLike = Union[IntervalUnion, Sequence]


def as_interval_union(E: SetLike) -> IntervalUnion:
    if isinstance(E, IntervalUnion):
        return E
    if len(E) == 2 and np.isscalar(E[0]):
        return IntervalUnion.of(tuple(E))
    return IntervalUnion(tuple(tuple(p) for p in E))


class _BaseMeasure:
    """Shared machinery of density-plus-atoms measures."""

    _dtype = float

    def __init__(self, grid: Grid1D, density, atoms: Iterable = ()):
        dens = np.asarray(density, dtype=self._dtype)
        if dens.shape != (grid.n,):
            raise GridMismatchError(
                f"density has shape {dens.shape}, grid has {grid.n} points"
            )
        if not np.all(np.isfinite(dens)):
            raise NumericDomainError("density samples must be finite")
        self._validate_density(dens)
        atom_list = []
        for loc, mass in atoms:
            loc = float(loc)
            mass = self._dtype(mass)
            if not (np.isfinite(loc) and np.isfinite(mass)):
                raise NumericDomainError("atom data must be finite")
            if not (grid.lower <= loc <= grid.upper):
                raise DomainError(f"atom at {loc} lies outside the domain")
            self._validate_mass(mass)
            atom_list.append((loc, mass))
        atom_list.sort(key=lambda t: t[0])
        for (l1, _), (l2, _) in zip(atom_list, atom_list[1:]):
            if abs(l2 - l1) <= 1e-12 * max(grid.span, 1.0):
                raise NumericDomainError("atom locations must be distinct")
        dens.setflags(write=False)
        self.grid = grid
        self.density = dens
        self.atoms = tuple(atom_list)
        # Antiderivative of the linear interpolant at grid points.
        cells = 0.5 * (dens[:-1] + dens[1:]) * grid.spacing
        cum = np.concatenate(([0.0 if self._dtype is float else 0.0 + 0.0j], np.cumsum(cells)))
        cum.setflags(write=False)
        self._cumulative = cum

    def _validate_density(self, dens):
        pass

    def _validate_mass(self, mass):
        pass

    def _antiderivative(self, x: float):
        """Integral of the interpolated density from ``lower`` to ``x``."""
        g = self.grid
        x = min(max(x, g.lower), g.upper)
        i = min(int((x - g.lower) / g.spacing), g.n - 2)
        t = x - g.points[i]
        d0, d1 = self.density[i], self.density[i + 1]
        return self._cumulative[i] + d0 * t + (d1 - d0) * t * t / (2.0 * g.spacing)

    def density_part(self, E: SetLike):
        """Exact integral of the interpolated density over ``E``."""
        total = self._dtype(0)
        for a, b in as_interval_union(E).clip(self.grid.lower, self.grid.upper).intervals:
            total += self._antiderivative(b) - self._antiderivative(a)
        return total

    def atom_part(self, E: SetLike, half_open: bool = False):
        union = as_interval_union(E)
        total = self._dtype(0)
        for loc, mass in self.atoms:
            if half_open:
                if any(a <= loc < b for a, b in union.intervals):
                    total += mass
            elif union.contains(loc):
                total += mass
        return total

    @property
    def total_mass(self):
        return self._cumulative[-1] + sum(m for _, m in self.atoms)

    def is_atomless(self) -> bool:
        return not self.atoms

    def density_at(self, x: float):
        """Linearly interpolated density at ``x`` (atoms not included)."""
        g = self.grid
        if not (g.lower <= x <= g.upper):
            raise DomainError(f"{x} lies outside [{g.lower}, {g.upper}]")
        if self._dtype is complex:
            re = np.interp(x, g.points, self.density.real)
            im = np.interp(x, g.points, self.density.imag)
            return re + 1j * im
        return float(np.interp(x, g.points, self.density))

    def support_mask(self, tol: float = NULL_TOL) -> np.ndarray:
        m = np.abs(self.density) > tol
        for loc, _ in self.atoms:
            i = int(round((loc - self.grid.lower) / self.grid.spacing))
            if 0 <= i < self.grid.n and abs(self.grid.points[i] - loc) <= 1e-9 * max(self.grid.span, 1.0):
                m[i] = True
        return m


class DensityMeasure(_BaseMeasure):
    """Sigma-finite nonnegative measure: density samples plus positive atoms."""

    _dtype = float

    def _validate_density(self, dens):
        if np.any(dens < 0):
            raise NumericDomainError("density samples must be nonnegative")

    def _validate_mass(self, mass):
        if not mass > 0:
            raise NumericDomainError("atom masses must be positive")


class ComplexMeasure(_BaseMeasure):
    """Complex measure: complex density samples plus complex atoms."""

    _dtype = complex

    def conj(self) -> "ComplexMeasure":
        return ComplexMeasure(
            self.grid,
            np.conj(self.density),
            [(loc, np.conj(m)) for loc, m in self.atoms],
        )

    def as_density(self, tol: float = 1e-10) -> DensityMeasure:
        """Reinterpret as a nonnegative measure; error if genuinely complex."""
        scale = max(np.max(np.abs(self.density)), 1.0)
        if np.max(np.abs(self.density.imag)) > tol * scale:
            raise NumericDomainError("measure has a non-real density")
        atoms = []
        for loc, m in self.atoms:
            if abs(m.imag) > tol * max(abs(m), 1.0):
                raise NumericDomainError("measure has a non-real atom")
            atoms.append((loc, m.real))
        dens = np.clip(self.density.real, 0.0, None)
        if np.min(self.density.real) < -tol * scale:
            raise NumericDomainError("measure has a negative density")
        return DensityMeasure(self.grid, dens, atoms)


AnyMeasure = Union[DensityMeasure, ComplexMeasure]


@dataclass(frozen=True)
class MeasureTypeOrder:
    """Outcome of an absolute-continuity comparison between two measure types."""

    relation: str
    tolerance: float
    nu_dominated: bool = field(default=False)  # nu << mu
    mu_dominated: bool = field(default=False)  # mu << nu

    def __post_init__(self):
        if self.relation not in _RELATIONS:
            raise NumericDomainError(f"unknown relation {self.relation!r}")


def integrate(m: AnyMeasure, E: SetLike):
    """Measure of a finite union of closed intervals.

    The density contributes the exact integral of its linear interpolant
    (composite trapezoid with interpolated partial cells); atoms on a closed
    boundary count fully.  Disjoint-set additivity is exact because the value
    is a difference of antiderivatives.
    """
    return m.density_part(E) + m.atom_part(E)


def _atom_locations(m: AnyMeasure) -> np.ndarray:
    return np.array([loc for loc, _ in m.atoms]) if m.atoms else np.empty(0)


def _has_atom_at(locs: np.ndarray, x: float, atol: float) -> bool:
    return bool(locs.size) and bool(np.min(np.abs(locs - x)) <= atol)


def _null_cells(m: AnyMeasure, tol: float) -> np.ndarray:
    """Cells whose interpolated density stays below tolerance end to end.

    A single vanishing sample between positive neighbours is a null *point*
    (zero measure), so nullity is decided per cell, not per sample.
    """
    below = np.abs(m.density) < tol
    return below[:-1] & below[1:]


def _one_sided_ac(nu: AnyMeasure, mu: DensityMeasure, tol: float) -> bool:
    """Check nu << mu: mu-null cells are nu-null and nu-atoms sit on mu-atoms."""
    atol = 1e-12 * max(mu.grid.span, 1.0)
    mu_locs = _atom_locations(mu)
    nu_locs = _atom_locations(nu)
    for loc in nu_locs:
        if not _has_atom_at(mu_locs, loc, atol):
            return False
    nu_null = _null_cells(nu, tol)
    pts = mu.grid.points
    for i in np.nonzero(_null_cells(mu, tol))[0]:
        a, b = pts[i], pts[i + 1]
        if mu_locs.size and np.any((mu_locs >= a) & (mu_locs <= b)):
            continue
        if not nu_null[i]:
            return False
        if nu_locs.size and np.any((nu_locs >= a) & (nu_locs <= b)):
            return False
    return True


def absolutely_continuous(
    nu: AnyMeasure, mu: DensityMeasure, tol: float = NULL_TOL
) -> MeasureTypeOrder:
    """Compare the types of two measures on a shared grid.

    ``nu << mu`` is declared when every grid point that is mu-null (density
    below ``tol``, no atom) is also nu-null, and every nu-atom coincides with
    a mu-atom.  The relation combines the two one-sided checks.
    """
    ensure_same_grid(nu.grid, mu.grid)
    fwd = _one_sided_ac(nu, mu, tol)
    rev = isinstance(nu, DensityMeasure) and _one_sided_ac(mu, nu, tol)
    if fwd and rev:
        relation = "equivalent"
    elif fwd:
        relation = "dominated"
    elif rev:
        relation = "dominates"
    else:
        relation = "incomparable"
    return MeasureTypeOrder(relation, tol, nu_dominated=fwd, mu_dominated=rev)


def rn_derivative_analytic(
    nu: AnyMeasure, mu: DensityMeasure, lam: float, tol: float = NULL_TOL
):
    """Pointwise density ratio d(nu)/d(mu) at ``lam``.

    Densities are interpolated linearly between grid points.  The caller is
    responsible for ``nu << mu``; this routine only rejects singular points
    (mu-density below ``tol``), atom locations, and points outside the domain.
    """
    g = mu.grid
    ensure_same_grid(nu.grid, g)
    if not (g.lower <= lam <= g.upper):
        raise DomainError(f"{lam} lies outside [{g.lower}, {g.upper}]")
    atol = 1e-12 * max(g.span, 1.0)
    if _has_atom_at(_atom_locations(mu), lam, atol) or _has_atom_at(
        _atom_locations(nu), lam, atol
    ):
        raise SingularPointError(f"{lam} is an atom location")
    md = mu.density_at(lam)
    if md < tol:
        raise SingularPointError(f"reference density at {lam} is below tolerance")
    return nu.density_at(lam) / md


def linear_combination(terms: Sequence) -> ComplexMeasure:
    """Complex measure ``sum(coef * measure)`` over ``(coef, measure)`` pairs."""
    if not terms:
        raise NumericDomainError("need at least one term")
    grid = terms[0][1].grid
    dens = np.zeros(grid.n, dtype=complex)
    atoms: dict = {}
    for coef, m in terms:
        ensure_same_grid(m.grid, grid)
        dens += complex(coef) * m.density
        for loc, mass in m.atoms:
            key = round(loc / (1e-12 * max(grid.span, 1.0)))
            prev_loc, prev_mass = atoms.get(key, (loc, 0.0 + 0.0j))
            atoms[key] = (prev_loc, prev_mass + complex(coef) * mass)
    alist = [(loc, mass) for loc, mass in atoms.values() if abs(mass) > 0]
    return ComplexMeasure(grid, dens, alist)


# ---------------------------------------------------------------------------
# Discrete (operator-level) convention
# ---------------------------------------------------------------------------

def effective_density(m: AnyMeasure) -> np.ndarray:
    """Density with on-grid atoms folded in as point weights mass/w_i.

    This makes ``sum(w * effective_density * values)`` the exact discrete
    integral including atoms.  Atoms must coincide with grid points; measures
    with off-grid atoms are not representable in the operator convention.
    """
    dens = np.array(m.density, dtype=m._dtype)
    w = m.grid.weights
    for loc, mass in m.atoms:
        i = m.grid.index_of(loc)
        dens[i] += mass / w[i]
    return dens


def quad_discrete(
    m: AnyMeasure,
    values: np.ndarray,
    E: SetLike | None = None,
    half_open: bool = False,
):
    """Masked trapezoid quadrature of grid ``values`` against the measure.

    With ``E`` given, grid points outside the union contribute nothing; this
    is the set-integral convention of the operator modules (full trapezoid
    weight at interior set boundaries).
    """
    eff = effective_density(m)
    integrand = m.grid.weights * eff * np.asarray(values)
    if E is None:
        return integrand.sum()
    mask = as_interval_union(E).mask(m.grid.points, half_open=half_open)
    return integrand[mask].sum()


def set_mass_discrete(m: AnyMeasure, E: SetLike, half_open: bool = False):
    """Discrete mass of a set under the masked-trapezoid convention."""
    return quad_discrete(m, np.ones(m.grid.n), E, half_open=half_open)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def measure_to_record(m: AnyMeasure) -> dict:
    """Structured record {grid: {lower, upper, n}, density: [...], atoms: [...]}."""
    complex_valued = isinstance(m, ComplexMeasure)
    if complex_valued:
        density = [[float(v.real), float(v.imag)] for v in m.density]
        atoms = [[loc, [float(mass.real), float(mass.imag)]] for loc, mass in m.atoms]
    else:
        density = [float(v) for v in m.density]
        atoms = [[loc, float(mass)] for loc, mass in m.atoms]
    return {
        "grid": {"lower": m.grid.lower, "upper": m.grid.upper, "n": m.grid.n},
        "density": density,
        "atoms": atoms,
        "complex": complex_valued,
    }


def measure_from_record(record: dict) -> AnyMeasure:
    try:
        g = record["grid"]
        grid = Grid1D.regular(g["lower"], g["upper"], g["n"])
        if record.get("complex", False):
            dens = np.array([complex(re, im) for re, im in record["density"]])
            atoms = [(loc, complex(m[0], m[1])) for loc, m in record["atoms"]]
            return ComplexMeasure(grid, dens, atoms)
        dens = np.asarray(record["density"], dtype=float)
        atoms = [(loc, mass) for loc, mass in record["atoms"]]
        return DensityMeasure(grid, dens, atoms)
    except (KeyError, TypeError, ValueError) as exc:
        raise NumericDomainError(f"malformed measure record: {exc}") from exc
