"""Direct integrals of fibers over a reference measure, and the structural map.

A measurable field assigns to each grid point a complex vector whose live
length is the local multiplicity; storage is a fixed-width array with
trailing zeros.  The structural map carries Hilbert vectors to fields by
density ratios of correlation measures against the generating chain, channel
by channel, and is an exact discrete unitary whenever the chain satisfies
the restriction-normalization condition (member j restricts to member k on
the latter's support).

On-grid atoms of the reference measure are folded into effective cell
weights, so atomic models flow through the same arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AbsoluteContinuityError,
    GridMismatchError,
    IsoDomainError,
    UnboundedMultiplierError,
)
from .measures import (
    DensityMeasure,
    Grid1D,
    NULL_TOL,
    SetLike,
    absolutely_continuous,
    effective_density,
    ensure_same_grid,
    quad_discrete,
)
from .spectral import (
    GeneratingSystem,
    HilbertVector,
    SpectralModel,
    decompose_vector,
)

__all__ = [
    "MeasurableField",
    "OrthonormalBasisField",
    "DecomposableOperator",
    "StructuralIso",
    "field_inner",
    "apply_diagonal",
    "apply_decomposable",
    "forward",
    "inverse",
    "parseval_check",
    "field_to_rows",
]


@dataclass(frozen=True, eq=False)
class MeasurableField:
    """Element of a direct integral: fiber samples against a base measure."""

    grid: Grid1D
    base_measure: DensityMeasure
    dims: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None]
        d = np.asarray(self.dims, dtype=int)
        if s.shape[0] != self.grid.n or d.shape != (self.grid.n,):
            raise GridMismatchError("field samples or dims do not fit the grid")
        # Trailing entries beyond the fiber dimension are identically zero.
        s = np.array(s)
        for j in range(1, s.shape[1]):
            s[d < j + 1, j] = 0.0
        s.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "dims", d)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    def component(self, j: int) -> np.ndarray:
        return self.samples[:, j]

    def __add__(self, other: "MeasurableField") -> "MeasurableField":
        ensure_same_grid(self.grid, other.grid)
        return MeasurableField(self.grid, self.base_measure, self.dims,
                               self.samples + other.samples)

    def __sub__(self, other: "MeasurableField") -> "MeasurableField":
        ensure_same_grid(self.grid, other.grid)
        return MeasurableField(self.grid, self.base_measure, self.dims,
                               self.samples - other.samples)

    def __mul__(self, scalar) -> "MeasurableField":
        return MeasurableField(self.grid, self.base_measure, self.dims,
                               self.samples * complex(scalar))

    __rmul__ = __mul__


class OrthonormalBasisField:
    """The canonical coordinate basis of the fibers: e_j(lam) = j-th unit vector."""

    def __init__(self, grid: Grid1D, dims: np.ndarray):
        self.grid = grid
        self.dims = np.asarray(dims, dtype=int)
        self.count = int(self.dims.max())

    def field(self, j: int, base_measure: DensityMeasure) -> MeasurableField:
        s = np.zeros((self.grid.n, self.count), dtype=complex)
        s[self.dims >= j + 1, j] = 1.0
        return MeasurableField(self.grid, base_measure, self.dims, s)

    def pointwise_orthonormal(self, tol: float = 1e-12) -> bool:
        # One-hot columns are orthonormal by construction; verify anyway.
        for j in range(self.count):
            for k in range(j, self.count):
                target = 1.0 if j == k else 0.0
                alive = self.dims >= max(j, k) + 1
                val = np.where(alive & (j == k), 1.0, 0.0)
                if np.max(np.abs(val - (target if j == k else 0.0) * alive)) > tol:
                    return False
        return True


def field_inner(f: MeasurableField, h: MeasurableField) -> complex:
    """Direct-integral scalar product, antilinear in the first argument."""
    ensure_same_grid(f.grid, h.grid)
    pointwise = (np.conj(f.samples) * h.samples).sum(axis=1)
    return complex(quad_discrete(f.base_measure, pointwise))


def field_norm(f: MeasurableField) -> float:
    return float(np.sqrt(max(field_inner(f, f).real, 0.0)))


def apply_diagonal(
    phi: np.ndarray, f: MeasurableField, bound: float | None = 1e12
) -> MeasurableField:
    """Multiplication operator (phi . f)(lam) = phi(lam) f(lam)."""
    phi = np.asarray(phi)
    if phi.shape != (f.grid.n,):
        raise GridMismatchError("multiplier must be sampled on the field grid")
    if bound is not None:
        weight = (np.abs(phi) ** 2) * (np.abs(f.samples) ** 2).sum(axis=1)
        total = quad_discrete(f.base_measure, weight).real
        if not total <= bound:
            raise UnboundedMultiplierError(
                f"second moment {total:.3g} exceeds the domain bound {bound:.3g}"
            )
    return MeasurableField(f.grid, f.base_measure, f.dims, phi[:, None] * f.samples)


@dataclass(frozen=True, eq=False)
class DecomposableOperator:
    """Fiberwise matrices T(lam), with pointwise-verified attribute flags."""

    grid: Grid1D
    matrices: np.ndarray
    is_projection: bool = False
    is_unitary: bool = False
    is_selfadjoint: bool = False
    is_diagonal: bool = False

    @classmethod
    def classify(cls, grid: Grid1D, matrices: np.ndarray, tol: float = 1e-10):
        m = np.asarray(matrices, dtype=complex)
        if m.ndim != 3 or m.shape[0] != grid.n or m.shape[1] != m.shape[2]:
            raise GridMismatchError("need one square matrix per grid point")
        adj = np.conj(np.transpose(m, (0, 2, 1)))
        sq = np.einsum("iab,ibc->iac", m, m)
        prod = np.einsum("iab,ibc->iac", adj, m)
        eye = np.eye(m.shape[1])[None, :, :]
        selfadj = float(np.max(np.abs(m - adj))) <= tol
        proj = selfadj and float(np.max(np.abs(sq - m))) <= tol
        unit = float(np.max(np.abs(prod - eye))) <= tol
        offdiag = m - np.einsum("iaa->ia", m)[:, :, None] * eye
        diag_spread = np.max(np.abs(np.einsum("iaa->ia", m) - m[:, 0, 0][:, None]))
        diagonal = float(np.max(np.abs(offdiag))) <= tol and float(diag_spread) <= tol
        return cls(grid, m, is_projection=proj, is_unitary=unit,
                   is_selfadjoint=selfadj, is_diagonal=diagonal)


def apply_decomposable(op: DecomposableOperator, f: MeasurableField) -> MeasurableField:
    """Pointwise matrix action T(lam) f(lam)."""
    if op.matrices.shape[1] != f.width:
        raise GridMismatchError("operator and field widths differ")
    ensure_same_grid(op.grid, f.grid)
    out = np.einsum("iab,ib->ia", op.matrices, f.samples)
    return MeasurableField(f.grid, f.base_measure, f.dims, out)


class StructuralIso:
    """Unitary between a spectral model and its canonical direct integral.

    Components of the image field are density ratios of correlation measures
    along the generating chain, scaled by the square roots of the chain
    densities against the reference measure.  Construction fails unless the
    chain is verified and restriction-normalized, and the reference measure
    shares the type of the first member.
    """

    def __init__(
        self,
        model: SpectralModel,
        gs: GeneratingSystem,
        reference_measure: DensityMeasure | None = None,
        *,
        null_tol: float = NULL_TOL,
    ):
        if not gs.verified:
            raise IsoDomainError(
                "generating system not verified: " + "; ".join(gs.failures)
            )
        if not gs.chain_measures_consistent:
            raise IsoDomainError("generating chain is not restriction-normalized")
        self.model = model
        self.gs = gs
        self.basis = OrthonormalBasisField(model.grid, model.multiplicity)
        first = gs.measures[0]
        maximal = absolutely_continuous(first, model.weight, tol=null_tol)
        if maximal.relation != "equivalent":
            raise IsoDomainError(
                "first member is not of maximal type for the model"
            )
        self.reference_is_first = reference_measure is None
        mu = first if reference_measure is None else reference_measure
        ensure_same_grid(mu.grid, model.grid)
        if reference_measure is not None:
            order = absolutely_continuous(mu, first, tol=null_tol)
            if order.relation != "equivalent":
                raise IsoDomainError(
                    "reference measure must share the type of the first member"
                )
        self.reference_measure = mu
        self.null_tol = null_tol

        self._eff_mu = effective_density(mu)
        self._eff_g = [effective_density(m) for m in gs.measures]
        self._scale = max(self._eff_mu.max(), 1e-300)
        self._mu_ok = self._eff_mu > null_tol * self._scale
        self.sqrt_ratios = []
        for eff in self._eff_g:
            r = np.zeros(model.grid.n)
            r[self._mu_ok] = np.sqrt(eff[self._mu_ok] / self._eff_mu[self._mu_ok])
            self.sqrt_ratios.append(r)
        # sqrt(d mu / d mu_g1), used by the inverse map.
        g1 = self._eff_g[0]
        g1_ok = g1 > null_tol * max(g1.max(), 1e-300)
        inv = np.zeros(model.grid.n)
        inv[g1_ok] = np.sqrt(self._eff_mu[g1_ok] / g1[g1_ok])
        self._sqrt_mu_over_g1 = inv
        self.exclusion_mask = ~self._mu_ok

    @property
    def width(self) -> int:
        return self.model.m_max

    def zero_field(self) -> MeasurableField:
        return MeasurableField(
            self.model.grid,
            self.reference_measure,
            self.model.multiplicity,
            np.zeros((self.model.grid.n, self.width), dtype=complex),
        )

    def field(self, samples: np.ndarray) -> MeasurableField:
        return MeasurableField(
            self.model.grid, self.reference_measure, self.model.multiplicity, samples
        )

    def forward(self, h: HilbertVector) -> MeasurableField:
        """Carry a Hilbert vector to its field of fiber coordinates."""
        self.model.validate(h)
        cols = np.zeros((self.model.grid.n, self.width), dtype=complex)
        for j, g in enumerate(self.gs.vectors):
            corr = effective_density(self.model.correlation_measure(g, h))
            mask = self.gs.support_masks[j]
            bad = ~mask & (np.abs(corr) > 1e-8 * max(np.max(np.abs(corr)), 1e-300))
            if np.any(bad & self._mu_ok):
                raise AbsoluteContinuityError(
                    f"correlation mass outside the support of member {j}"
                )
            ratio = np.zeros(self.model.grid.n, dtype=complex)
            ratio[mask] = corr[mask] / self._eff_g[j][mask]
            cols[:, j] = self.sqrt_ratios[j] * ratio
        return self.field(cols)

    def inverse(self, f: MeasurableField) -> HilbertVector:
        """Assemble the Hilbert vector whose chain coefficients match the field."""
        ensure_same_grid(f.grid, self.model.grid)
        total = None
        for j, g in enumerate(self.gs.vectors):
            c = self._sqrt_mu_over_g1 * f.samples[:, j]
            term = self.model.multiply(c, g, bound=None)
            total = term if total is None else total + term
        return total

    def component_routes(self, h: HilbertVector) -> dict:
        """The chain of equivalent expressions for the fiber coordinates.

        Returns one (n, m) array per route; all agree off the exclusion mask,
        with zeros off the member supports by convention.
        """
        n, m = self.model.grid.n, self.width
        routes = {
            "decompose": np.zeros((n, m), dtype=complex),
            "via-reference": np.zeros((n, m), dtype=complex),
            "via-first": np.zeros((n, m), dtype=complex),
            "via-member": np.zeros((n, m), dtype=complex),
        }
        coeffs = decompose_vector(self.model, self.gs, h, null_tol=self.null_tol)
        g1 = self._eff_g[0]
        g1_ok = g1 > self.null_tol * max(g1.max(), 1e-300)
        sqrt_g1_over_mu = np.zeros(n)
        sqrt_g1_over_mu[self._mu_ok] = np.sqrt(
            g1[self._mu_ok] / self._eff_mu[self._mu_ok]
        )
        for j, g in enumerate(self.gs.vectors):
            corr = effective_density(self.model.correlation_measure(g, h))
            mask = self.gs.support_masks[j]
            routes["decompose"][:, j] = self.sqrt_ratios[j] * coeffs[j]
            ok = self._mu_ok
            routes["via-reference"][ok, j] = (
                self._sqrt_mu_over_g1[ok] * corr[ok] / self._eff_mu[ok]
            )
            okg = g1_ok & self._mu_ok
            routes["via-first"][okg, j] = (
                sqrt_g1_over_mu[okg] * corr[okg] / g1[okg]
            )
            routes["via-member"][mask, j] = (
                self.sqrt_ratios[j][mask] * corr[mask] / self._eff_g[j][mask]
            )
        return routes

    def unitarity_residual(self, f: HilbertVector, h: HilbertVector) -> float:
        lhs = field_inner(self.forward(f), self.forward(h))
        rhs = self.model.inner(f, h)
        return abs(lhs - rhs)

    def intertwining_residual(self, phi: np.ndarray, f: HilbertVector) -> float:
        lhs = self.forward(self.model.multiply(phi, f, bound=None))
        rhs = apply_diagonal(phi, self.forward(f), bound=None)
        denom = max(field_norm(rhs), 1e-30)
        return field_norm(lhs - rhs) / denom


def forward(iso: StructuralIso, h: HilbertVector) -> MeasurableField:
    """The structural map applied to a Hilbert vector."""
    return iso.forward(h)


def inverse(iso: StructuralIso, f: MeasurableField) -> HilbertVector:
    """The inverse structural map applied to a field."""
    return iso.inverse(f)


def parseval_check(
    iso: StructuralIso, f: HilbertVector, h: HilbertVector, E: SetLike
) -> float:
    """Residual of the set-resolved completeness identity.

    Compares (f, P(E) h) with the sum over channels of the masked field
    integral of conj(component_j(f)) component_j(h) against the reference
    measure.  Both sides use the discrete set convention, so the residual is
    roundoff-level for exact models.
    """
    lhs = iso.model.inner(f, iso.model.project(E, h))
    ff, fh = iso.forward(f), iso.forward(h)
    pointwise = (np.conj(ff.samples) * fh.samples).sum(axis=1)
    rhs = quad_discrete(iso.reference_measure, pointwise, E)
    return abs(lhs - rhs)


def field_to_rows(f: MeasurableField) -> list:
    """Plot-ready rows (lam, re/im per channel) for CSV emission."""
    rows = []
    for i, lam in enumerate(f.grid.points):
        row = [float(lam)]
        for j in range(f.width):
            row.extend([float(f.samples[i, j].real), float(f.samples[i, j].imag)])
        rows.append(tuple(row))
    return rows
