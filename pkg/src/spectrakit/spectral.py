"""Spectral measure spaces on 1-D grids.

A model bundles the domain grid, a reference weight measure, a multiplicity
profile, and the action of the projections P(E) and of the multiplier
calculus.  Four concrete actions are provided:

* ``multiplication`` - P(E) masks samples by the indicator of E; the model
  is already in diagonal form.
* ``conjugated`` - samples are carried to diagonal coordinates by a dense
  unitary matrix (unitary with respect to the weighted discrete products),
  P(E) = U^-1 (chi_E .) U.
* ``atomic`` - the weight is purely atomic at the eigenvalue locations, so
  P({eigenvalue}) are the finite-dimensional eigenprojections.
* ``diffeo`` - the spectral variable is a smooth increasing reparametrization
  s of a multiplication model's variable; P(F) masks by chi_F(s(lam)),
  which is exact, and spectral densities carry the 1/s' Jacobian.

All operations are pure; models and vectors are immutable after construction.
The discrete set calculus (masks at grid points against trapezoid weights)
makes projection algebra and the multiplier identities close at machine
precision; quadrature error enters only against continuum closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AbsoluteContinuityError,
    ChannelError,
    GridMismatchError,
    InapplicableError,
    NumericDomainError,
    UnboundedMultiplierError,
)
from .measures import (
    ComplexMeasure,
    DensityMeasure,
    Grid1D,
    IntervalUnion,
    NULL_TOL,
    SetLike,
    absolutely_continuous,
    as_interval_union,
    effective_density,
    ensure_same_grid,
    quad_discrete,
    same_grid,
)

__all__ = [
    "HilbertVector",
    "SpectralModel",
    "GeneratingSystem",
    "MultiplicityFunction",
    "apply_projection",
    "apply_multiplier",
    "correlation_measure",
    "verify_generating_system",
    "multiplicity_function",
    "decompose_vector",
    "reconstruct",
    "probe_family",
    "masks_to_intervals",
]

DEFAULT_MULTIPLIER_BOUND = 1e12


@dataclass(frozen=True, eq=False)
class HilbertVector:
    """Complex samples on a grid, one column per channel."""

    grid: Grid1D
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] != self.grid.n:
            raise GridMismatchError(
                f"samples of shape {s.shape} do not fit a grid of {self.grid.n} points"
            )
        if not np.all(np.isfinite(s)):
            raise NumericDomainError("vector samples must be finite")
        s = np.array(s)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def channels(self) -> int:
        return self.samples.shape[1]

    def channel(self, j: int) -> np.ndarray:
        return self.samples[:, j]

    def __add__(self, other: "HilbertVector") -> "HilbertVector":
        ensure_same_grid(self.grid, other.grid)
        return HilbertVector(self.grid, self.samples + other.samples)

    def __sub__(self, other: "HilbertVector") -> "HilbertVector":
        ensure_same_grid(self.grid, other.grid)
        return HilbertVector(self.grid, self.samples - other.samples)

    def __mul__(self, scalar) -> "HilbertVector":
        return HilbertVector(self.grid, self.samples * complex(scalar))

    __rmul__ = __mul__


def _interp_columns(xq: np.ndarray, xp: np.ndarray, cols: np.ndarray) -> np.ndarray:
    out = np.empty((xq.size, cols.shape[1]), dtype=complex)
    for j in range(cols.shape[1]):
        out[:, j] = np.interp(xq, xp, cols[:, j].real) + 1j * np.interp(
            xq, xp, cols[:, j].imag
        )
    return out


class SpectralModel:
    """An evaluatable spectral measure space over a 1-D grid.

    Build instances through :meth:`multiplication`, :meth:`conjugated`,
    :meth:`atomic`, or :meth:`diffeo`.
    """

    def __init__(
        self,
        variant: str,
        grid: Grid1D,
        weight: DensityMeasure,
        multiplicity: np.ndarray,
        physical_grid: Grid1D,
        physical_weight: DensityMeasure,
        *,
        matrix: np.ndarray | None = None,
        physical_channels: int | None = None,
        forward_map: Callable | None = None,
        inverse_map: Callable | None = None,
        jacobian_inverse: Callable | None = None,
    ):
        self.variant = variant
        self.grid = grid
        self.weight = weight
        mult = np.asarray(multiplicity, dtype=int)
        if mult.shape != (grid.n,) or np.any(mult < 1):
            raise NumericDomainError("multiplicity profile must be >= 1 per grid point")
        mult.setflags(write=False)
        self.multiplicity = mult
        self.m_max = int(mult.max())
        self.physical_grid = physical_grid
        self.physical_weight = physical_weight
        self.physical_channels = (
            self.m_max if physical_channels is None else int(physical_channels)
        )
        self._matrix = matrix
        self._s = forward_map
        self._s_inv = inverse_map
        self._jac_inv = jacobian_inverse
        self._s_prime = None
        self._phys_cellw = physical_grid.weights * effective_density(physical_weight)
        self._spec_cellw = grid.weights * effective_density(weight)
        # The unitary acts on channel-flattened samples (row-major), so one
        # matrix covers both plain and channel-mixing transports.
        self._phys_cellw_flat = np.repeat(self._phys_cellw, self.physical_channels)
        self._spec_cellw_flat = np.repeat(self._spec_cellw, self.m_max)
        if variant == "diffeo":
            self._lam_of_xi = np.asarray(inverse_map(grid.points), dtype=float)
            self._s_of_lam = np.asarray(forward_map(physical_grid.points), dtype=float)

    # -- constructors ------------------------------------------------------

    @classmethod
    def multiplication(
        cls,
        grid: Grid1D,
        weight: DensityMeasure | None = None,
        multiplicity=1,
    ) -> "SpectralModel":
        """Diagonal model: P(E) masks samples by the indicator of E."""
        if weight is None:
            weight = DensityMeasure(grid, np.ones(grid.n))
        ensure_same_grid(grid, weight.grid)
        mult = np.full(grid.n, multiplicity) if np.isscalar(multiplicity) else multiplicity
        return cls("multiplication", grid, weight, mult, grid, weight)

    @classmethod
    def atomic(
        cls,
        grid: Grid1D,
        eigenvalues: Sequence,
        multiplicity=1,
    ) -> "SpectralModel":
        """Discrete model: pure-atom weight, P({eigenvalue}) are eigenprojections.

        Eigenvalue locations must coincide with grid points so the discrete
        calculus represents them exactly.
        """
        locs = [(grid.points[grid.index_of(loc)], mass) for loc, mass in eigenvalues]
        weight = DensityMeasure(grid, np.zeros(grid.n), atoms=locs)
        mult = np.full(grid.n, multiplicity) if np.isscalar(multiplicity) else multiplicity
        return cls("atomic", grid, weight, mult, grid, weight)

    @classmethod
    def conjugated(
        cls,
        physical_grid: Grid1D,
        physical_weight: DensityMeasure,
        spectral_grid: Grid1D,
        spectral_weight: DensityMeasure,
        matrix: np.ndarray,
        multiplicity=1,
        physical_channels: int = 1,
    ) -> "SpectralModel":
        """Model diagonalized by a dense matrix unitary for the weighted products.

        The matrix acts on channel-flattened samples (grid index major), so
        it may mix channels: shape (spectral points x spectral channels,
        physical points x physical channels).
        """
        matrix = np.asarray(matrix, dtype=complex)
        mult = (
            np.full(spectral_grid.n, multiplicity)
            if np.isscalar(multiplicity)
            else np.asarray(multiplicity)
        )
        m_spec = int(np.max(mult))
        expect = (spectral_grid.n * m_spec, physical_grid.n * physical_channels)
        if matrix.shape != expect:
            raise GridMismatchError(
                f"unitary matrix shape {matrix.shape} does not match {expect}"
            )
        return cls(
            "conjugated",
            spectral_grid,
            spectral_weight,
            mult,
            physical_grid,
            physical_weight,
            matrix=matrix,
            physical_channels=physical_channels,
        )

    @classmethod
    def diffeo(
        cls,
        base: "SpectralModel",
        spectral_grid: Grid1D,
        forward_map: Callable,
        inverse_map: Callable,
        derivative: Callable,
    ) -> "SpectralModel":
        """Reparametrize a multiplication model by a smooth increasing map s.

        ``spectral_grid`` covers [s(lower), s(upper)].  Projections pull sets
        back through s exactly; spectral densities are pushforwards with the
        analytic Jacobian 1/s'(s^-1(.)).
        """
        if base.variant != "multiplication":
            raise InapplicableError("diffeo models reparametrize multiplication models")
        jac_inv = lambda xi: 1.0 / derivative(inverse_map(xi))
        lam_of_xi = inverse_map(spectral_grid.points)
        w_dens = (
            np.interp(lam_of_xi, base.grid.points, base.weight.density)
            * jac_inv(spectral_grid.points)
        )
        weight = DensityMeasure(spectral_grid, np.clip(w_dens, 0.0, None))
        mult = np.full(spectral_grid.n, base.m_max)
        model = cls(
            "diffeo",
            spectral_grid,
            weight,
            mult,
            base.physical_grid,
            base.physical_weight,
            forward_map=forward_map,
            inverse_map=inverse_map,
            jacobian_inverse=jac_inv,
        )
        model._s_prime = derivative
        return model

    # -- vector plumbing ---------------------------------------------------

    def vector(self, samples) -> HilbertVector:
        """Wrap samples, zeroing channels above the local multiplicity."""
        v = HilbertVector(self.physical_grid, samples)
        if v.channels > self.physical_channels:
            raise ChannelError(
                f"{v.channels} channels exceed the model maximum {self.physical_channels}"
            )
        if self.variant in ("multiplication", "atomic") and v.channels > 1:
            s = np.array(v.samples)
            for j in range(1, v.channels):
                s[self.multiplicity < j + 1, j] = 0.0
            return HilbertVector(self.physical_grid, s)
        return v

    def validate(self, f: HilbertVector) -> None:
        ensure_same_grid(f.grid, self.physical_grid)
        if f.channels > self.physical_channels:
            raise ChannelError(
                f"{f.channels} channels exceed the model maximum {self.physical_channels}"
            )

    def _pad(self, samples: np.ndarray) -> np.ndarray:
        if samples.shape[1] == self.physical_channels:
            return samples
        out = np.zeros((samples.shape[0], self.physical_channels), dtype=complex)
        out[:, : samples.shape[1]] = samples
        return out

    # -- transport to and from diagonal coordinates -------------------------

    def spectral_samples(self, f: HilbertVector) -> np.ndarray:
        """Samples of f in the model's diagonal coordinates, on ``self.grid``."""
        self.validate(f)
        s = self._pad(f.samples)
        if self.variant in ("multiplication", "atomic"):
            return s
        if self.variant == "conjugated":
            return (self._matrix @ s.reshape(-1)).reshape(self.grid.n, self.m_max)
        return _interp_columns(self._lam_of_xi, self.physical_grid.points, s)

    def from_spectral(self, x: np.ndarray) -> HilbertVector:
        x = np.asarray(x, dtype=complex)
        if x.ndim == 1:
            x = x[:, None]
        if self.variant in ("multiplication", "atomic"):
            return HilbertVector(self.physical_grid, x)
        if self.variant == "conjugated":
            return HilbertVector(self.physical_grid, self._u_inverse(x))
        raise InapplicableError("diffeo models have no exact inverse transport")

    def _u_inverse(self, y: np.ndarray) -> np.ndarray:
        # Inverse of a weighted-unitary U: U^-1 = D^-1 U^H D' with D, D' the
        # flattened physical/spectral cell weights.
        scaled = self._spec_cellw_flat * y.reshape(-1)
        back = np.conj(np.conj(scaled) @ self._matrix)
        return (back / self._phys_cellw_flat).reshape(
            self.physical_grid.n, self.physical_channels
        )

    # -- the measure-space operations ---------------------------------------

    def indicator(self, E: SetLike, half_open: bool = False) -> np.ndarray:
        """Indicator of E at the spectral grid points."""
        return as_interval_union(E).mask(self.grid.points, half_open=half_open)

    def physical_indicator(self, E: SetLike, half_open: bool = False) -> np.ndarray:
        """Indicator of the preimage of E at the physical grid points."""
        union = as_interval_union(E)
        if self.variant == "diffeo":
            return union.mask(self._s_of_lam, half_open=half_open)
        return union.mask(self.physical_grid.points, half_open=half_open)

    def project(self, E: SetLike, f: HilbertVector, half_open: bool = False) -> HilbertVector:
        self.validate(f)
        if self.variant in ("multiplication", "atomic", "diffeo"):
            mask = self.physical_indicator(E, half_open)
            return HilbertVector(self.physical_grid, f.samples * mask[:, None])
        mask = self.indicator(E, half_open)
        return self.from_spectral(mask[:, None] * self.spectral_samples(f))

    def multiply(self, phi: np.ndarray, f: HilbertVector,
                 bound: float | None = DEFAULT_MULTIPLIER_BOUND) -> HilbertVector:
        """Apply the multiplier calculus for phi sampled on the spectral grid."""
        self.validate(f)
        phi = np.asarray(phi)
        if phi.shape != (self.grid.n,):
            raise GridMismatchError("multiplier must be sampled on the spectral grid")
        if bound is not None:
            second_moment = self.correlation_density(f, f)[0]
            total = quad_discrete(
                DensityMeasure(self.grid, np.ones(self.grid.n)),
                np.abs(phi) ** 2 * second_moment.real,
            )
            if not total <= bound:
                raise UnboundedMultiplierError(
                    f"second moment {total:.3g} exceeds the domain bound {bound:.3g}"
                )
        if self.variant in ("multiplication", "atomic"):
            return HilbertVector(self.physical_grid, f.samples * phi[:, None])
        if self.variant == "conjugated":
            return self.from_spectral(phi[:, None] * self.spectral_samples(f))
        phi_pulled = np.interp(self._s_of_lam, self.grid.points, phi.real) + 1j * np.interp(
            self._s_of_lam, self.grid.points, phi.imag
        )
        return HilbertVector(self.physical_grid, f.samples * phi_pulled[:, None])

    def inner(self, f: HilbertVector, g: HilbertVector) -> complex:
        """Scalar product, antilinear in the first argument."""
        self.validate(f)
        self.validate(g)
        prod = (np.conj(self._pad(f.samples)) * self._pad(g.samples)).sum(axis=1)
        return complex((self._phys_cellw * prod).sum())

    def norm(self, f: HilbertVector) -> float:
        return float(np.sqrt(max(self.inner(f, f).real, 0.0)))

    def correlation_density(self, f: HilbertVector, g: HilbertVector):
        """Density (and atoms) of E -> (f, P(E)g) on the spectral grid.

        The returned arrays use the interpolant convention for the density
        part; atoms come from atoms of the weight measure.
        """
        self.validate(f)
        self.validate(g)
        fs = self.spectral_samples(f)
        gs = self.spectral_samples(g)
        pointwise = (np.conj(fs) * gs).sum(axis=1)
        if self.variant == "diffeo":
            w_phys = np.interp(
                self._lam_of_xi, self.physical_grid.points, self.physical_weight.density
            )
            dens = pointwise * w_phys * self._jac_inv(self.grid.points)
            return dens, []
        dens = pointwise * self.weight.density
        atoms = []
        for loc, mass in self.weight.atoms:
            i = self.grid.index_of(loc)
            atoms.append((loc, pointwise[i] * mass))
        return dens, atoms

    def correlation_measure(self, f: HilbertVector, g: HilbertVector) -> ComplexMeasure:
        dens, atoms = self.correlation_density(f, g)
        return ComplexMeasure(self.grid, dens, atoms)

    def vector_measure(self, g: HilbertVector, tol: float = 1e-10) -> DensityMeasure:
        """The nonnegative measure E -> (g, P(E)g)."""
        return self.correlation_measure(g, g).as_density(tol)

    def commutes_with(self, other: "SpectralModel", probes, sets_a, sets_b,
                      tol: float = 1e-8) -> bool:
        """Probe-based commutation check of the two projection calculi."""
        for f in probes:
            nf = max(self.norm(f), 1e-30)
            for Ea in sets_a:
                for Eb in sets_b:
                    lhs = other.project(Eb, self.project(Ea, f))
                    rhs = self.project(Ea, other.project(Eb, f))
                    if self.norm(lhs - rhs) > tol * nf:
                        return False
        return True


# -- module-level operation wrappers ----------------------------------------

def apply_projection(model: SpectralModel, E: SetLike, f: HilbertVector) -> HilbertVector:
    """P(E) f."""
    return model.project(E, f)


def apply_multiplier(
    model: SpectralModel,
    phi: np.ndarray,
    f: HilbertVector,
    bound: float | None = DEFAULT_MULTIPLIER_BOUND,
) -> HilbertVector:
    """The spectral calculus applied to f for a grid-sampled multiplier.

    Checks the domain condition: the second moment of the multiplier against
    the correlation measure of f must not exceed ``bound``.
    """
    return model.multiply(phi, f, bound)


def correlation_measure(model: SpectralModel, f: HilbertVector, g: HilbertVector) -> ComplexMeasure:
    """The complex measure E -> (f, P(E)g)."""
    return model.correlation_measure(f, g)


def masks_to_intervals(grid: Grid1D, mask: np.ndarray) -> IntervalUnion:
    """Closed intervals spanned by maximal runs of marked grid points."""
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return IntervalUnion.empty()
    pairs = []
    start = prev = idx[0]
    for i in idx[1:]:
        if i == prev + 1:
            prev = i
            continue
        pairs.append((grid.points[start], grid.points[prev]))
        start = prev = i
    pairs.append((grid.points[start], grid.points[prev]))
    return IntervalUnion(tuple(pairs))


@dataclass(frozen=True)
class GeneratingSystem:
    """A verified (or diagnosed) generating family for a spectral model.

    ``failures`` lists the clauses that did not hold; an empty tuple means
    the family passed orthogonality, completeness, the decreasing type
    chain, and the chain-normalization needed by the structural isomorphism.
    """

    vectors: tuple
    measures: tuple
    support_masks: tuple
    supports: tuple
    type_chain_verified: bool
    orthogonality_verified: bool
    completeness_verified: bool
    chain_measures_consistent: bool
    failures: tuple

    @property
    def size(self) -> int:
        return len(self.vectors)

    @property
    def verified(self) -> bool:
        return not self.failures


def verify_generating_system(
    model: SpectralModel,
    vectors: Sequence[HilbertVector],
    probes: Sequence[HilbertVector] | None = None,
    *,
    tol_orthogonal: float = 1e-8,
    tol_complete: float = 1e-6,
    null_tol: float = NULL_TOL,
) -> GeneratingSystem:
    """Check a candidate family clause by clause.

    Returns the structure with diagnosis rather than raising: a failed clause
    appears in ``failures`` and the corresponding flag is False.
    """
    if not vectors:
        raise NumericDomainError("need at least one candidate vector")
    vectors = tuple(vectors)
    failures = []

    measures = tuple(model.vector_measure(g) for g in vectors)
    eff = [effective_density(m) for m in measures]
    masks = tuple(e > null_tol * max(e.max(), 1e-300) for e in eff)
    supports = tuple(masks_to_intervals(model.grid, m) for m in masks)

    orthogonal = True
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            dens, atoms = model.correlation_density(vectors[i], vectors[j])
            scale = np.sqrt(max(eff[i].max(), 1e-300) * max(eff[j].max(), 1e-300))
            worst = np.max(np.abs(dens)) if dens.size else 0.0
            if atoms:
                worst = max(worst, max(abs(m) for _, m in atoms))
            if worst > tol_orthogonal * scale:
                orthogonal = False
                failures.append(f"spectral orthogonality fails for pair ({i}, {j})")

    chain = True
    for j in range(len(vectors) - 1):
        order = absolutely_continuous(measures[j + 1], measures[j], tol=null_tol)
        if not order.nu_dominated:
            chain = False
            failures.append(f"type chain fails between members {j} and {j + 1}")

    consistent = True
    for j in range(len(vectors)):
        for k in range(j + 1, len(vectors)):
            on_k = masks[k]
            if not on_k.any():
                continue
            scale = max(eff[j].max(), 1e-300)
            if np.max(np.abs(eff[j][on_k] - eff[k][on_k])) > 1e-8 * scale:
                consistent = False
                failures.append(
                    f"member {j} does not restrict to member {k} on its support"
                )

    gs = GeneratingSystem(
        vectors, measures, masks, supports,
        type_chain_verified=chain,
        orthogonality_verified=orthogonal,
        completeness_verified=False,
        chain_measures_consistent=consistent,
        failures=tuple(failures),
    )

    complete = orthogonal and chain
    if complete:
        if probes is None:
            probes = probe_family(model.physical_grid, model.m_max,
                                  multiplicity=_physical_multiplicity(model))
        for p, h in enumerate(probes):
            h = model.vector(h.samples)
            coeffs = decompose_vector(model, gs, h, null_tol=null_tol)
            err = model.norm(reconstruct(model, gs, coeffs) - h)
            if err > tol_complete * max(model.norm(h), 1e-30):
                complete = False
                failures.append(f"orthogonal-sum completeness fails on probe {p}")
                break

    return GeneratingSystem(
        vectors, measures, masks, supports,
        type_chain_verified=chain,
        orthogonality_verified=orthogonal,
        completeness_verified=complete,
        chain_measures_consistent=consistent,
        failures=tuple(failures),
    )


def _physical_multiplicity(model: SpectralModel) -> np.ndarray | None:
    if model.variant in ("multiplication", "atomic"):
        return model.multiplicity
    return None


@dataclass(frozen=True)
class MultiplicityFunction:
    """Piecewise-constant multiplicity labels derived from a generating chain."""

    labels: np.ndarray
    partition: tuple
    essential_sup: int


def multiplicity_function(model: SpectralModel, gs: GeneratingSystem) -> MultiplicityFunction:
    """Assemble the multiplicity labels from the support chain.

    Label k marks the part of support(g_k) outside support(g_{k+1}); the
    intersection of all supports carries the top label.
    """
    m = gs.size
    labels = np.zeros(model.grid.n, dtype=int)
    parts = []
    inter = np.ones(model.grid.n, dtype=bool)
    for mask in gs.support_masks:
        inter &= mask
    for k in range(m - 1):
        region = gs.support_masks[k] & ~gs.support_masks[k + 1]
        labels[region] = k + 1
        parts.append((masks_to_intervals(model.grid, region), k + 1))
    labels[inter] = m
    parts.append((masks_to_intervals(model.grid, inter), m))
    labels.setflags(write=False)
    return MultiplicityFunction(labels, tuple(parts), m)


def decompose_vector(
    model: SpectralModel,
    gs: GeneratingSystem,
    h: HilbertVector,
    *,
    null_tol: float = NULL_TOL,
) -> list:
    """Coefficient functions of h along the generating chain.

    The j-th coefficient is the density ratio of the correlation measure of
    (g_j, h) against the measure of g_j, zero off the support.  Correlation
    mass over a null region of g_j is an absolute-continuity violation.
    """
    model.validate(h)
    coeffs = []
    for j, g in enumerate(gs.vectors):
        corr = model.correlation_measure(g, h)
        num = effective_density(corr)
        den = effective_density(gs.measures[j])
        mask = gs.support_masks[j]
        corr_scale = max(np.max(np.abs(num)), 1e-300)
        if np.any(np.abs(num[~mask]) > 1e-8 * corr_scale):
            raise AbsoluteContinuityError(
                f"correlation mass outside the support of generator {j}"
            )
        c = np.zeros(model.grid.n, dtype=complex)
        c[mask] = num[mask] / den[mask]
        coeffs.append(c)
    return coeffs


def reconstruct(model: SpectralModel, gs: GeneratingSystem, coeffs: Sequence[np.ndarray]) -> HilbertVector:
    """Sum of the multiplier calculus applied to each generator."""
    total = None
    for c, g in zip(coeffs, gs.vectors):
        term = model.multiply(np.asarray(c), g, bound=None)
        total = term if total is None else total + term
    return total


def probe_family(
    grid: Grid1D,
    channels: int = 1,
    count: int = 8,
    seed: int = 20260810,
    multiplicity: np.ndarray | None = None,
) -> list:
    """Deterministic family of smooth probe vectors.

    Each channel is a random cubic (complex coefficients) under a Gaussian
    envelope centered in the middle half of the domain, so probes vanish to
    roundoff at the domain ends.  Channels above the local multiplicity are
    zeroed when a profile is given.
    """
    rng = np.random.default_rng(seed)
    x = (grid.points - grid.lower) / grid.span * 2.0 - 1.0
    probes = []
    for _ in range(count):
        cols = np.empty((grid.n, channels), dtype=complex)
        for j in range(channels):
            c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            center = rng.uniform(-0.5, 0.5)
            width = rng.uniform(0.12, 0.2)
            poly = c[0] + c[1] * x + c[2] * x**2 + c[3] * x**3
            cols[:, j] = poly * np.exp(-((x - center) ** 2) / (2.0 * width**2))
        if multiplicity is not None:
            for j in range(1, channels):
                cols[multiplicity < j + 1, j] = 0.0
        probes.append(HilbertVector(grid, cols))
    return probes


def canonical_generators(model: SpectralModel, support_masks: Sequence[np.ndarray] | None = None) -> list:
    """Channel-indicator generators: member j is one on channel j over {N >= j+1}.

    For conjugated models the indicators are transported back from diagonal
    coordinates, so the family stays canonical in the spectral picture.
    """
    gens = []
    for j in range(model.m_max):
        alive = model.multiplicity >= j + 1 if support_masks is None else support_masks[j]
        x = np.zeros((model.grid.n, model.m_max), dtype=complex)
        x[alive, j] = 1.0
        if model.variant in ("multiplication", "atomic"):
            gens.append(HilbertVector(model.physical_grid, x))
        elif model.variant == "conjugated":
            gens.append(model.from_spectral(x))
        else:
            raise InapplicableError("diffeo models take generators in physical form")
    return gens
