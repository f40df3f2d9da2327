"""Cross-basis transformation functionals between two expansions of one space.

Given two spectral models over the same underlying Hilbert representation,
with verified generating chains and structural maps, the fiber coordinate of
a vector in the second expansion at a point xi is recovered as the limit of
integral functionals over the first expansion: projections of the target
generator onto shrinking windows around xi, paired channel by channel with
the coordinates of the argument, normalized by the window mass.  Windows
come either from an interval contraction or from the dyadic cell chain of a
refining partition; at matched sets the two variants are the same
arithmetic.

Conventions.  Scalar products are antilinear in the first slot.  The
Hilbert-flavor functional pairs coefficient fields with conjugated argument
coordinates and converges to the pairing (coordinate field at xi, basis
vector), i.e. to the conjugate of the raw coordinate.  The ket flavor is
reported on the linear side: its values conjugate the coefficient field
instead, so the limit is the ket pairing itself.  Set masses and masked
integrals on both sides use the discrete indicator convention, numerator and
denominator alike, so window quotients are true discrete averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .differentiation import ContractionSequence, DyadicPartitionTree, _oscillation_flag
from .direct_integral import StructuralIso, field_norm
from .errors import (
    AtomlessRequiredError,
    DegenerateContractionError,
    DecompositionError,
    DomainError,
    GridMismatchError,
    InapplicableError,
    IsoDomainError,
    NotProjectionError,
    NumericDomainError,
)
from .measures import (
    DensityMeasure,
    IntervalUnion,
    SetLike,
    as_interval_union,
    effective_density,
    quad_discrete,
    rn_derivative_analytic,
    same_grid,
    set_mass_discrete,
)
from .rigging import TestFunction
from .spectral import (
    GeneratingSystem,
    HilbertVector,
    SpectralModel,
    decompose_vector,
    probe_family,
)

__all__ = [
    "ExpansionSide",
    "TransformScenario",
    "ApproxFunctionalLabel",
    "ConvergenceRecord",
    "make_scenario",
    "cross_measure_identity",
    "gamma_tilde",
    "gamma_ket",
    "vitali_transform_limit",
    "ket_transform_limit",
    "simple_spectrum_transform",
    "decomposable_transform",
    "martingale_transform",
    "strong_divergence_diagnostic",
]

FLAVORS = ("vitali-hilbert", "vitali-ket", "martingale-hilbert", "martingale-ket")


@dataclass(frozen=True, eq=False)
class ExpansionSide:
    """One expansion: model, verified generating chain, structural map."""

    model: SpectralModel
    gs: GeneratingSystem
    iso: StructuralIso


@dataclass(frozen=True, eq=False)
class TransformScenario:
    """Two expansions of the same Hilbert representation, verified together.

    ``commute`` records whether the two projection calculi commute on the
    probe family; the simple-spectrum and decomposable specializations
    require it.  ``verification`` holds the residuals measured at build time.
    """

    p: ExpansionSide
    q: ExpansionSide
    commute: bool
    probes: tuple
    verification: dict
    verify_tol: float


def _grid_thirds(grid) -> list:
    lo, span = grid.lower, grid.span
    return [
        IntervalUnion.of((lo, lo + span / 3.0)),
        IntervalUnion.of((lo + span / 3.0, lo + 2.0 * span / 3.0)),
        IntervalUnion.of((lo + 0.2 * span, lo + 0.8 * span)),
    ]


def make_scenario(
    p_model: SpectralModel,
    p_gs: GeneratingSystem,
    q_model: SpectralModel,
    q_gs: GeneratingSystem,
    *,
    p_reference: DensityMeasure | None = None,
    q_reference: DensityMeasure | None = None,
    probes=None,
    verify_tol: float = 1e-8,
    commute_tol: float = 1e-8,
) -> TransformScenario:
    """Assemble and verify a two-expansion scenario.

    Both models must share the physical representation.  Unitarity and
    intertwining of both structural maps are measured on the probe family
    and must stay below ``verify_tol`` (relative); pullback-variant models
    carry quadrature-grade residuals, so callers pass a matching tolerance.
    """
    if not same_grid(p_model.physical_grid, q_model.physical_grid):
        raise GridMismatchError("the two sides do not share a physical grid")
    gap = np.max(
        np.abs(
            effective_density(p_model.physical_weight)
            - effective_density(q_model.physical_weight)
        )
    )
    if gap > 1e-12 * max(np.max(effective_density(p_model.physical_weight)), 1.0):
        raise GridMismatchError("the two sides do not share the physical weight")

    p_iso = StructuralIso(p_model, p_gs, reference_measure=p_reference)
    q_iso = StructuralIso(q_model, q_gs, reference_measure=q_reference)
    p_side = ExpansionSide(p_model, p_gs, p_iso)
    q_side = ExpansionSide(q_model, q_gs, q_iso)

    if probes is None:
        probes = probe_family(p_model.physical_grid, 1)
    probes = tuple(p_model.vector(pr.samples) for pr in probes)

    verification = {}
    worst_u = worst_i = 0.0
    phi_p = np.exp(1j * np.linspace(0.0, 2.0, p_model.grid.n))
    phi_q = np.exp(1j * np.linspace(0.0, 2.0, q_model.grid.n))
    for side, phi, tag in ((p_side, phi_p, "p"), (q_side, phi_q, "q")):
        worst_u = worst_i = 0.0
        for f in probes[:4]:
            for h in probes[4:6]:
                scale = max(side.model.norm(f) * side.model.norm(h), 1e-30)
                worst_u = max(worst_u, side.iso.unitarity_residual(f, h) / scale)
            worst_i = max(worst_i, side.iso.intertwining_residual(phi, f))
        verification[f"{tag}_unitarity"] = worst_u
        verification[f"{tag}_intertwining"] = worst_i
    for key, residual in verification.items():
        if residual > verify_tol:
            raise IsoDomainError(
                f"scenario verification failed: {key} residual {residual:.3g} "
                f"exceeds {verify_tol:.3g}"
            )

    commute = p_model.commutes_with(
        q_model, probes[:3], _grid_thirds(p_model.grid), _grid_thirds(q_model.grid),
        tol=commute_tol,
    )
    return TransformScenario(
        p=p_side, q=q_side, commute=commute, probes=probes,
        verification=verification, verify_tol=verify_tol,
    )


# ---------------------------------------------------------------------------
# Window plumbing
# ---------------------------------------------------------------------------

def _q_window_mass(sc: TransformScenario, F: SetLike, half_open: bool) -> float:
    """Discrete mass of a window under the quotient convention.

    For pullback models the mass is accumulated on the physical grid with
    the pulled-back reference density, so numerator and denominator of every
    window quotient share one mask and boundary offsets cancel.
    """
    model = sc.q.model
    mu = sc.q.iso.reference_measure
    if model.variant == "diffeo":
        mask = model.physical_indicator(F, half_open)
        pulled = np.interp(model._s_of_lam, mu.grid.points, mu.density) * model._s_prime(
            model.physical_grid.points
        )
        mass = float((model.physical_grid.weights * pulled * mask).sum())
    else:
        mass = float(set_mass_discrete(mu, F, half_open=half_open).real)
    if not mass > 0.0:
        raise DegenerateContractionError("window carries no discrete mass")
    return mass


def _q_project(sc: TransformScenario, F: SetLike, vec: HilbertVector,
               half_open: bool, spec_cache: np.ndarray | None = None) -> HilbertVector:
    model = sc.q.model
    if model.variant == "conjugated" and spec_cache is not None:
        mask = model.indicator(F, half_open)
        return model.from_spectral(mask[:, None] * spec_cache)
    return model.project(F, vec, half_open=half_open)


def _require_atomless_near(sc: TransformScenario, xi: float, radius: float) -> None:
    window = IntervalUnion.of((xi - 1.05 * radius, xi + 1.05 * radius))
    for loc, _ in sc.q.iso.reference_measure.atoms:
        if window.contains(loc):
            raise AtomlessRequiredError(
                f"reference measure has an atom at {loc} near the target {xi}"
            )


def _prefactor(sc: TransformScenario, xi: float, k: int) -> float:
    """Normalization sqrt(d mu' / d mu_{g'_k})(xi); one when mu' is that measure."""
    if k < 1 or k > sc.q.gs.size:
        raise NumericDomainError(f"channel {k} outside the generating chain")
    if sc.q.iso.reference_is_first and k == 1:
        return 1.0
    ratio = rn_derivative_analytic(
        sc.q.iso.reference_measure, sc.q.gs.measures[k - 1], xi
    )
    if not ratio > 0.0:
        raise DegenerateContractionError(f"normalization ratio vanishes at {xi}")
    return float(np.sqrt(ratio))


def _interp_component(iso: StructuralIso, samples: np.ndarray, xi: float, k: int) -> complex:
    pts = iso.model.grid.points
    col = samples[:, k - 1]
    return complex(np.interp(xi, pts, col.real) + 1j * np.interp(xi, pts, col.imag))


def _channel_integrals(sc: TransformScenario, coeff: np.ndarray, argument: np.ndarray) -> np.ndarray:
    """Per-channel p-side integrals of coeff_j * conj(argument_j) d mu."""
    mu = sc.p.iso.reference_measure
    eff = sc.p.iso._eff_mu
    w = mu.grid.weights
    width = min(coeff.shape[1], argument.shape[1])
    return (
        (w * eff)[:, None] * coeff[:, :width] * np.conj(argument[:, :width])
    ).sum(axis=0)


# ---------------------------------------------------------------------------
# Labels, records
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ApproxFunctionalLabel:
    """Which approximate functional: target, window index, truncation, flavor."""

    xi: float
    k: int
    n: int
    l: int
    flavor: str
    sets: object = None  # ContractionSequence or DyadicPartitionTree

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise NumericDomainError(f"unknown flavor {self.flavor!r}")
        if self.l < 1 or self.n < 1:
            raise NumericDomainError("window and truncation indices are 1-based")


@dataclass(eq=False)
class ConvergenceRecord:
    """Functional values over a (window, truncation) sweep with a reference.

    ``values[n-1, i]`` is the functional at window n and truncation
    ``l_schedule[i]``; errors are absolute distances to the independently
    computed reference.  ``form_gaps`` tracks the agreement of the two
    stated forms of the window formula (or of a specialization against the
    general path).  ``dual_norms`` carries representer norms when the
    simple commuting reduction applies.
    """

    flavor: str
    xi: float
    k: int
    l_schedule: tuple
    values: np.ndarray
    reference: complex
    reference_source: str
    errors: np.ndarray = field(init=False)
    form_gaps: np.ndarray | None = None
    dual_norms: np.ndarray | None = None
    oscillation_flagged: bool = False
    rejected: str | None = None

    def __post_init__(self):
        self.errors = np.abs(self.values - self.reference)

    @property
    def n_max(self) -> int:
        return self.values.shape[0]

    @property
    def final_value(self) -> complex:
        return complex(self.values[-1, -1])

    @property
    def final_error(self) -> float:
        return float(self.errors[-1, -1])

    @property
    def form_gap(self) -> float:
        """Worst disagreement of the two stated forms at full truncation.

        The theorem's two window formulas are full channel sums; at partial
        truncation they legitimately differ whenever the window operator
        mixes channels, so the binding figure is the last column.
        """
        return 0.0 if self.form_gaps is None else float(np.max(self.form_gaps[:, -1]))

    def rows(self) -> list:
        out = []
        for n in range(self.values.shape[0]):
            for i, l in enumerate(self.l_schedule):
                v = self.values[n, i]
                dn = float("nan") if self.dual_norms is None else float(self.dual_norms[n])
                out.append(
                    (self.flavor, self.xi, self.k, n + 1, int(l),
                     float(v.real), float(v.imag), float(self.errors[n, i]), dn)
                )
        return out


# ---------------------------------------------------------------------------
# The cross-measure identity
# ---------------------------------------------------------------------------

def cross_measure_identity(
    sc: TransformScenario, f: HilbertVector, h: HilbertVector, F: SetLike
):
    """Residuals of the two coordinate expansions of (f, Q(F) h).

    Both expansions integrate p-side coordinate products, once with the
    window projection on f, once on h; the direct value is computed on the
    q side.  Returns the two absolute residuals.
    """
    direct = sc.q.model.inner(f, sc.q.model.project(F, h))
    field_f = sc.p.iso.forward(f).samples
    field_h = sc.p.iso.forward(h).samples
    field_qf = sc.p.iso.forward(sc.q.model.project(F, f)).samples
    field_qh = sc.p.iso.forward(sc.q.model.project(F, h)).samples
    form1 = _channel_integrals(sc, field_h, field_qf).sum()
    form2 = np.conj(_channel_integrals(sc, field_f, field_qh).sum())
    return abs(direct - form1), abs(direct - form2)


# ---------------------------------------------------------------------------
# Single-label functionals
# ---------------------------------------------------------------------------

def _window_of(label: ApproxFunctionalLabel):
    sets = label.sets
    if isinstance(sets, ContractionSequence):
        return sets.set_at(label.n), False
    if isinstance(sets, DyadicPartitionTree):
        a, b = sets.cell_containing(label.n, label.xi)
        return IntervalUnion.of((a, b)), True
    raise NumericDomainError("label carries no window source")


def gamma_tilde(sc: TransformScenario, label: ApproxFunctionalLabel, h: HilbertVector) -> complex:
    """Hilbert-flavor approximate functional at one (window, truncation) label.

    Pairs the coordinates of the window-projected target generator with the
    conjugated coordinates of ``h``, truncated to the first ``l`` channels,
    normalized by the discrete window mass and the channel prefactor.  As an
    element of the antidual it is antilinear in ``h``.
    """
    if label.flavor not in ("vitali-hilbert", "martingale-hilbert"):
        raise NumericDomainError(f"flavor {label.flavor!r} is not Hilbert-valued")
    F, half_open = _window_of(label)
    mass = _q_window_mass(sc, F, half_open)
    pre = _prefactor(sc, label.xi, label.k)
    g_k = sc.q.gs.vectors[label.k - 1]
    coeff = sc.p.iso.forward(_q_project(sc, F, g_k, half_open)).samples
    arg = sc.p.iso.forward(h).samples
    terms = _channel_integrals(sc, coeff, arg)
    return complex(pre * terms[: label.l].sum() / mass)


def gamma_ket(sc: TransformScenario, label: ApproxFunctionalLabel, phi: TestFunction) -> complex:
    """Ket-flavor approximate functional, reported on the linear side.

    The coefficient field of the window-projected generator is assembled
    through the chain decomposition and conjugated against the ket values of
    the test function, so the sweep limit is the ket pairing itself.
    """
    if label.flavor not in ("vitali-ket", "martingale-ket"):
        raise NumericDomainError(f"flavor {label.flavor!r} is not ket-valued")
    if not phi.verified_pointwise_rn:
        raise IsoDomainError("test function failed pointwise verification")
    F, half_open = _window_of(label)
    mass = _q_window_mass(sc, F, half_open)
    pre = _prefactor(sc, label.xi, label.k)
    g_k = sc.q.gs.vectors[label.k - 1]
    tilde = decompose_vector(sc.p.model, sc.p.gs, _q_project(sc, F, g_k, half_open))
    coeff = np.stack(
        [sc.p.iso.sqrt_ratios[j] * tilde[j] for j in range(sc.p.gs.size)], axis=1
    )
    ketvals = sc.p.iso.forward(phi.underlying).samples
    # Linear-side pairing: conjugate the coefficient, not the ket value.
    terms = _channel_integrals(sc, ketvals, coeff)
    return complex(pre * terms[: label.l].sum() / mass)


# ---------------------------------------------------------------------------
# Sweep drivers
# ---------------------------------------------------------------------------

def _windows_from(source, xi: float):
    if isinstance(source, ContractionSequence):
        return [(source.set_at(n), False) for n in range(1, source.n_max + 1)]
    if isinstance(source, DyadicPartitionTree):
        out = []
        for level in range(1, source.depth + 1):
            a, b = source.cell_containing(level, xi)
            out.append((IntervalUnion.of((a, b)), True))
        return out
    raise NumericDomainError("window source must be a contraction or a partition tree")


def _hilbert_reference(sc: TransformScenario, xi: float, k: int, h: HilbertVector):
    fieldq = sc.q.iso.forward(h)
    return np.conj(_interp_component(sc.q.iso, fieldq.samples, xi, k)), "q-side forward"


def _ket_reference(sc: TransformScenario, xi: float, k: int, phi: TestFunction):
    fieldq = sc.q.iso.forward(phi.underlying)
    return _interp_component(sc.q.iso, fieldq.samples, xi, k), "q-side ket"


def _sweep(
    sc: TransformScenario,
    xi: float,
    k: int,
    windows,
    l_schedule,
    *,
    hilbert_arg: HilbertVector | None = None,
    ket_arg: TestFunction | None = None,
    flavor: str,
    reference,
    reference_source: str,
    with_dual_norms: bool = True,
) -> ConvergenceRecord:
    """Evaluate a functional family over windows and truncations.

    Computes both stated forms of the window formula per label and keeps the
    worst gap; the primary value projects the generator (second form), whose
    limit statement drives the convergence tests.
    """
    m = sc.p.gs.size
    l_schedule = tuple(l_schedule) if l_schedule else tuple(range(1, m + 1))
    if max(l_schedule) > m:
        raise NumericDomainError("truncation beyond the generating chain length")
    pre = _prefactor(sc, xi, k)
    g_k = sc.q.gs.vectors[k - 1]
    spec_g = spec_arg = None
    if sc.q.model.variant == "conjugated":
        spec_g = sc.q.model.spectral_samples(g_k)
    field_g = sc.p.iso.forward(g_k).samples

    values = np.zeros((len(windows), len(l_schedule)), dtype=complex)
    gaps = np.zeros_like(values, dtype=float)
    ket_flavor = ket_arg is not None
    if ket_flavor:
        arg_field = sc.p.iso.forward(ket_arg.underlying).samples
    else:
        arg_field = sc.p.iso.forward(hilbert_arg).samples
        if sc.q.model.variant == "conjugated":
            spec_arg = sc.q.model.spectral_samples(hilbert_arg)

    norms = _representer_norms(sc, xi, k, windows) if with_dual_norms else None

    for idx, (F, half_open) in enumerate(windows):
        mass = _q_window_mass(sc, F, half_open)
        qf_g = _q_project(sc, F, g_k, half_open, spec_cache=spec_g)
        coeff = sc.p.iso.forward(qf_g).samples
        if ket_flavor:
            # Main route assembles the coefficient field via the chain
            # decomposition; the forward route cross-checks it.
            tilde = decompose_vector(sc.p.model, sc.p.gs, qf_g)
            coeff_dec = np.stack(
                [sc.p.iso.sqrt_ratios[j] * tilde[j] for j in range(m)], axis=1
            )
            main_terms = _channel_integrals(sc, arg_field, coeff_dec)
            alt_terms = _channel_integrals(sc, arg_field, coeff)
            if sc.commute:
                qf_phi = _q_project(sc, F, ket_arg.underlying, half_open)
                field_qphi = sc.p.iso.forward(qf_phi).samples
                cross_terms = _channel_integrals(sc, field_qphi, field_g)
            else:
                cross_terms = None
        else:
            main_terms = _channel_integrals(sc, coeff, arg_field)
            qf_arg = _q_project(sc, F, hilbert_arg, half_open, spec_cache=spec_arg)
            field_qarg = sc.p.iso.forward(qf_arg).samples
            alt_terms = _channel_integrals(sc, field_g, field_qarg)
            cross_terms = None
        for i, l in enumerate(l_schedule):
            main = pre * main_terms[:l].sum() / mass
            alt = pre * alt_terms[:l].sum() / mass
            values[idx, i] = main
            gaps[idx, i] = abs(main - alt)
            if cross_terms is not None:
                cross = pre * cross_terms[:l].sum() / mass
                gaps[idx, i] = max(gaps[idx, i], abs(main - cross))
    tail = values[:, -1]
    return ConvergenceRecord(
        flavor=flavor,
        xi=xi,
        k=k,
        l_schedule=l_schedule,
        values=values,
        reference=complex(reference),
        reference_source=reference_source,
        form_gaps=gaps,
        dual_norms=norms,
        oscillation_flagged=_oscillation_flag(tail),
    )


def _representer_norms(sc: TransformScenario, xi: float, k: int, windows):
    """Norms of the Hilbert representers in the simple commuting reduction."""
    if not (sc.commute and sc.p.gs.size == 1):
        return None
    try:
        simple = _simple_reduction(sc, k)
    except (InapplicableError, NotProjectionError):
        return None
    mu = sc.p.iso.reference_measure
    w_eff = mu.grid.weights * sc.p.iso._eff_mu
    density = np.abs(sc.p.iso.sqrt_ratios[0] * simple["gtilde"]) ** 2
    norms = np.empty(len(windows))
    for idx, (F, half_open) in enumerate(windows):
        mask = simple["multiplier_mask"](F, half_open)
        mass = _q_window_mass(sc, F, half_open)
        norms[idx] = np.sqrt(float((w_eff * density * mask).sum())) / mass
    return norms


def vitali_transform_limit(
    sc: TransformScenario,
    xi: float,
    k: int,
    h: HilbertVector,
    cs: ContractionSequence,
    l_schedule=None,
) -> ConvergenceRecord:
    """Window sweep of the Hilbert-flavor functional along a contraction.

    The reference is the q-side pairing (coordinate field of h at xi, basis
    vector k), computed through the q-side structural map, never through the
    functional machinery.  Both stated forms of the window formula must
    agree; their gap is recorded per label.
    """
    _require_atomless_near(sc, xi, cs.radii[0])
    ref, src = _hilbert_reference(sc, xi, k, h)
    return _sweep(
        sc, xi, k, _windows_from(cs, xi), l_schedule,
        hilbert_arg=h, flavor="vitali-hilbert", reference=ref, reference_source=src,
    )


def ket_transform_limit(
    sc: TransformScenario,
    xi: float,
    k: int,
    phi: TestFunction,
    cs: ContractionSequence,
    l_schedule=None,
) -> ConvergenceRecord:
    """Window sweep of the ket-flavor functional along a contraction.

    The reference is the q-side ket pairing of phi at (xi, k).  In commuting
    scenarios the generator-side and argument-side window placements are
    cross-checked per label on top of the decomposition/forward agreement.
    """
    if not phi.verified_pointwise_rn:
        raise IsoDomainError("test function failed pointwise verification")
    _require_atomless_near(sc, xi, cs.radii[0])
    ref, src = _ket_reference(sc, xi, k, phi)
    return _sweep(
        sc, xi, k, _windows_from(cs, xi), l_schedule,
        ket_arg=phi, flavor="vitali-ket", reference=ref, reference_source=src,
    )


def martingale_transform(
    sc: TransformScenario,
    xi: float,
    k: int,
    target,
    tree: DyadicPartitionTree,
    l_schedule=None,
) -> ConvergenceRecord:
    """Partition-cell sweep of the functional: the cell containing xi per level.

    Same integrand arithmetic as the contraction flavors with the level cell
    in place of the window, so values on matched sets coincide exactly.
    """
    if not (tree.lower <= xi < tree.upper):
        raise DomainError(f"{xi} outside the partition root [{tree.lower}, {tree.upper})")
    _require_atomless_near(sc, xi, 0.5 * (tree.upper - tree.lower))
    windows = _windows_from(tree, xi)
    if isinstance(target, TestFunction):
        ref, src = _ket_reference(sc, xi, k, target)
        return _sweep(sc, xi, k, windows, l_schedule, ket_arg=target,
                      flavor="martingale-ket", reference=ref, reference_source=src)
    ref, src = _hilbert_reference(sc, xi, k, target)
    return _sweep(sc, xi, k, windows, l_schedule, hilbert_arg=target,
                  flavor="martingale-hilbert", reference=ref, reference_source=src)


# ---------------------------------------------------------------------------
# Commuting specializations
# ---------------------------------------------------------------------------

def _simple_reduction(sc: TransformScenario, k: int, tol: float = 1e-8) -> dict:
    """Data of the simple commuting reduction: multiplier masks and g-tilde.

    Every window projection of the q side is multiplication by a 0/1-valued
    function in the p calculus; the extraction probes with the single
    generator and thresholds at one half.
    """
    if not sc.commute:
        raise InapplicableError("the two projection calculi do not commute")
    if sc.p.gs.size != 1:
        raise InapplicableError("the first expansion is not simple")
    u = sc.p.gs.vectors[0]
    u_col = u.samples[:, 0]
    alive = np.abs(u_col) > 1e-12

    def multiplier_mask(F, half_open):
        proj = sc.q.model.project(F, u, half_open=half_open)
        gamma = np.zeros(sc.p.model.grid.n)
        gamma[alive] = (proj.samples[:, 0][alive] / u_col[alive]).real
        imag = np.max(np.abs((proj.samples[:, 0][alive] / u_col[alive]).imag))
        dist = np.max(np.minimum(np.abs(gamma[alive]), np.abs(gamma[alive] - 1.0)))
        if max(dist, imag) > tol:
            raise NotProjectionError(
                f"multiplier is not 0/1-valued to {tol:g} (distance {max(dist, imag):.3g})"
            )
        return gamma > 0.5

    gtilde = decompose_vector(sc.p.model, sc.p.gs, sc.q.gs.vectors[k - 1])[0]
    return {"multiplier_mask": multiplier_mask, "gtilde": gtilde}


def simple_spectrum_transform(
    sc: TransformScenario,
    xi: float,
    k: int,
    target,
    cs: ContractionSequence,
) -> ConvergenceRecord:
    """Simple commuting reduction of the window sweep.

    Each window acts through the extracted 0/1 multiplier set, the generator
    enters only through its chain coefficient, and the general path is
    recomputed per window as a cross-check (recorded in ``form_gaps``).
    """
    simple = _simple_reduction(sc, k)
    _require_atomless_near(sc, xi, cs.radii[0])
    pre = _prefactor(sc, xi, k)
    mu = sc.p.iso.reference_measure
    w_eff = mu.grid.weights * sc.p.iso._eff_mu
    sqrt_ratio = sc.p.iso.sqrt_ratios[0]
    gtilde = simple["gtilde"]
    windows = _windows_from(cs, xi)
    ket_flavor = isinstance(target, TestFunction)
    if ket_flavor:
        ref, src = _ket_reference(sc, xi, k, target)
        argvals = sc.p.iso.forward(target.underlying).samples[:, 0]
        flavor = "vitali-ket"
    else:
        ref, src = _hilbert_reference(sc, xi, k, target)
        argvals = sc.p.iso.forward(target).samples[:, 0]
        flavor = "vitali-hilbert"

    values = np.zeros((len(windows), 1), dtype=complex)
    gaps = np.zeros((len(windows), 1))
    for idx, (F, half_open) in enumerate(windows):
        mask = simple["multiplier_mask"](F, half_open)
        mass = _q_window_mass(sc, F, half_open)
        if ket_flavor:
            integrand = np.conj(sqrt_ratio * gtilde) * argvals
        else:
            integrand = sqrt_ratio * gtilde * np.conj(argvals)
        values[idx, 0] = pre * (w_eff * integrand * mask).sum() / mass
        label = ApproxFunctionalLabel(xi, k, idx + 1, 1, flavor, sets=cs)
        general = (
            gamma_ket(sc, label, target) if ket_flavor else gamma_tilde(sc, label, target)
        )
        gaps[idx, 0] = abs(values[idx, 0] - general)
    return ConvergenceRecord(
        flavor=flavor, xi=xi, k=k, l_schedule=(1,), values=values,
        reference=complex(ref), reference_source=src, form_gaps=gaps,
        dual_norms=_representer_norms(sc, xi, k, windows),
        oscillation_flagged=_oscillation_flag(values[:, 0]),
    )


def _extract_fibers(sc: TransformScenario, F: SetLike, half_open: bool,
                    tol: float = 1e-10) -> np.ndarray:
    """Fiberwise matrices of a window projection in the p-side coordinates.

    Column b is the coordinate field of the window projection of the b-th
    p-side generator, normalized by that generator's own coordinate; the
    matrices must pass the pointwise projection test.
    """
    if not sc.commute:
        raise InapplicableError("the two projection calculi do not commute")
    m = sc.p.gs.size
    n = sc.p.model.grid.n
    mats = np.zeros((n, m, m), dtype=complex)
    for b in range(m):
        g_b = sc.p.gs.vectors[b]
        base = sc.p.iso.forward(g_b).samples[:, b]
        ok = np.abs(base) > 1e-12
        cols = sc.p.iso.forward(sc.q.model.project(F, g_b, half_open=half_open)).samples
        for a in range(m):
            mats[ok, a, b] = cols[ok, a] / base[ok]
    adj = np.conj(np.transpose(mats, (0, 2, 1)))
    sq = np.einsum("iab,ibc->iac", mats, mats)
    gap = max(float(np.max(np.abs(mats - adj))), float(np.max(np.abs(sq - mats))))
    if gap > tol:
        raise DecompositionError(
            f"extracted fiber matrices fail the projection test (gap {gap:.3g})"
        )
    return mats


def decomposable_transform(
    sc: TransformScenario,
    xi: float,
    k: int,
    h: HilbertVector,
    cs: ContractionSequence,
    l_schedule=None,
) -> ConvergenceRecord:
    """Commuting multi-channel reduction: windows act as fiberwise projectors.

    Evaluates both fiber-matrix placements (on the argument and on the
    generator) and cross-checks against the general window functional; the
    worst disagreement lands in ``form_gaps``.
    """
    _require_atomless_near(sc, xi, cs.radii[0])
    m = sc.p.gs.size
    l_schedule = tuple(l_schedule) if l_schedule else tuple(range(1, m + 1))
    pre = _prefactor(sc, xi, k)
    windows = _windows_from(cs, xi)
    field_g = sc.p.iso.forward(sc.q.gs.vectors[k - 1]).samples
    field_h = sc.p.iso.forward(h).samples
    ref, src = _hilbert_reference(sc, xi, k, h)
    values = np.zeros((len(windows), len(l_schedule)), dtype=complex)
    gaps = np.zeros_like(values, dtype=float)
    for idx, (F, half_open) in enumerate(windows):
        mats = _extract_fibers(sc, F, half_open)
        mass = _q_window_mass(sc, F, half_open)
        t_h = np.einsum("iab,ib->ia", mats, field_h)
        t_g = np.einsum("iab,ib->ia", mats, field_g)
        form1 = _channel_integrals(sc, field_g, t_h)
        form2 = _channel_integrals(sc, t_g, field_h)
        for i, l in enumerate(l_schedule):
            v1 = pre * form1[:l].sum() / mass
            v2 = pre * form2[:l].sum() / mass
            label = ApproxFunctionalLabel(xi, k, idx + 1, int(l), "vitali-hilbert", sets=cs)
            general = gamma_tilde(sc, label, h)
            values[idx, i] = v2
            gaps[idx, i] = max(abs(v1 - v2), abs(v2 - general))
    return ConvergenceRecord(
        flavor="vitali-hilbert", xi=xi, k=k, l_schedule=l_schedule, values=values,
        reference=complex(ref), reference_source=src, form_gaps=gaps,
        oscillation_flagged=_oscillation_flag(values[:, -1]),
    )


def strong_divergence_diagnostic(sc: TransformScenario, xi: float, k: int, windows) -> np.ndarray:
    """Hilbert norms of the functional representers over a window family.

    Applicable in the simple commuting reduction, where each functional is
    represented by the masked chain coefficient over the window mass; the
    norms grow like the inverse square root of the window mass, which is the
    obstruction to strong convergence.  ``windows`` may be a contraction, a
    partition tree, or an explicit list of interval unions.
    """
    if isinstance(windows, (ContractionSequence, DyadicPartitionTree)):
        windows = _windows_from(windows, xi)
    else:
        windows = [(as_interval_union(F), False) for F in windows]
    norms = _representer_norms(sc, xi, k, windows)
    if norms is None:
        raise InapplicableError(
            "representer norms require the simple commuting reduction"
        )
    return norms
