"""Minimal rigging of a spectral measure space: test functions and Dirac kets.

Membership in the test class is checked pointwise: every density ratio of
the correlation measures against the generating chain must be finite at
every grid point outside a null exclusion set.  A ket is a label (point,
channel) evaluated as the corresponding fiber coordinate of the structural
map; the pairing is linear in the test function.

No topology object exists here: convergence statements downstream are
tested pointwise, matching the weak-dual semantics of the minimal rigging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .direct_integral import StructuralIso
from .errors import ChannelError, DomainError, ExclusionSetError, IsoDomainError
from .measures import NULL_TOL, SetLike, effective_density, quad_discrete
from .spectral import HilbertVector

__all__ = [
    "TestFunction",
    "KetFunctional",
    "verify_test_function",
    "ket_evaluate",
    "completeness_check",
    "ket_rows",
]


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A Hilbert vector admitted to the test class of a rigging.

    ``verified_pointwise_rn`` certifies that all chain density ratios exist
    and are finite off the exclusion mask, which collects the 0/0 points.
    """

    underlying: HilbertVector
    smoothness: str
    verified_pointwise_rn: bool
    exclusion_mask: np.ndarray
    failures: tuple = ()


def verify_test_function(
    iso: StructuralIso, v: HilbertVector, *, null_tol: float = NULL_TOL
) -> TestFunction:
    """Admit a vector to the test class, or report why it cannot be.

    The exclusion set gathers grid points where a required ratio is 0/0 at
    tolerance; a ratio diverging (finite correlation mass over a null chain
    density) disqualifies the vector instead.
    """
    iso.model.validate(v)
    n = iso.model.grid.n
    exclusion = np.array(iso.exclusion_mask)
    failures = []
    ok = True
    for j, g in enumerate(iso.gs.vectors):
        corr = effective_density(iso.model.correlation_measure(g, v))
        den = iso._eff_g[j]
        den_scale = max(den.max(), 1e-300)
        corr_scale = max(np.max(np.abs(corr)), 1e-300)
        null_den = den <= null_tol * den_scale
        live = iso.model.multiplicity >= j + 1
        diverging = null_den & live & (np.abs(corr) > 1e-8 * corr_scale)
        if np.any(diverging):
            ok = False
            failures.append(
                f"ratio against member {j} diverges at {int(diverging.sum())} points"
            )
        exclusion |= null_den & live & ~diverging
    exclusion.setflags(write=False)
    return TestFunction(
        underlying=v,
        smoothness="grid-smooth",
        verified_pointwise_rn=ok,
        exclusion_mask=exclusion,
        failures=tuple(failures),
    )


@dataclass(frozen=True, eq=False)
class KetFunctional:
    """A generalized eigenvector label (point, channel) over a structural map."""

    iso: StructuralIso
    point: float
    channel: int

    def __post_init__(self):
        g = self.iso.model.grid
        if not (g.lower <= self.point <= g.upper):
            raise DomainError(f"{self.point} outside [{g.lower}, {g.upper}]")
        i = min(int((self.point - g.lower) / g.spacing), g.n - 2)
        local_mult = min(
            int(self.iso.model.multiplicity[i]), int(self.iso.model.multiplicity[i + 1])
        )
        if not 1 <= self.channel <= local_mult:
            raise ChannelError(
                f"channel {self.channel} exceeds the local multiplicity {local_mult}"
            )
        if self.iso.exclusion_mask[i] or self.iso.exclusion_mask[i + 1]:
            raise ExclusionSetError(
                f"{self.point} falls in the exclusion set of the rigging"
            )


def _component_at(iso: StructuralIso, field_samples: np.ndarray, lam: float, k: int) -> complex:
    pts = iso.model.grid.points
    col = field_samples[:, k - 1]
    return complex(np.interp(lam, pts, col.real) + 1j * np.interp(lam, pts, col.imag))


def ket_evaluate(ket: KetFunctional, phi: TestFunction) -> complex:
    """The pairing of a test function with a ket: the fiber coordinate at the label.

    Linear in the test function; values between grid points interpolate the
    coordinate field linearly.
    """
    if not phi.verified_pointwise_rn:
        raise IsoDomainError("test function failed pointwise verification")
    field = ket.iso.forward(phi.underlying)
    return _component_at(ket.iso, field.samples, ket.point, ket.channel)


def completeness_check(
    iso: StructuralIso, phi: TestFunction, psi: TestFunction, E: SetLike
) -> float:
    """Residual of the ket resolution of (phi, P(E) psi).

    The integrand pairs the conjugated phi-coordinate with the psi-coordinate
    so that E = full domain reduces to the scalar product (antilinear in its
    first slot).
    """
    for tf in (phi, psi):
        if not tf.verified_pointwise_rn:
            raise IsoDomainError("test function failed pointwise verification")
    lhs = iso.model.inner(phi.underlying, iso.model.project(E, psi.underlying))
    fphi = iso.forward(phi.underlying)
    fpsi = iso.forward(psi.underlying)
    pointwise = (np.conj(fphi.samples) * fpsi.samples).sum(axis=1)
    rhs = quad_discrete(iso.reference_measure, pointwise, E)
    return abs(lhs - rhs)


def ket_rows(iso: StructuralIso, phi: TestFunction, channels=None, points=None) -> list:
    """Evaluation table rows (lam, k, re, im) for CSV emission."""
    field = iso.forward(phi.underlying)
    pts = iso.model.grid.points if points is None else np.asarray(points)
    ks = range(1, iso.width + 1) if channels is None else channels
    rows = []
    for lam in pts:
        for k in ks:
            val = _component_at(iso, field.samples, float(lam), int(k))
            rows.append((float(lam), int(k), val.real, val.imag))
    return rows
