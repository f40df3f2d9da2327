"""Built-in formula catalog, keyed by id.

Scenario files reference densities, probes, multipliers, generating vectors
and diffeomorphisms by name; the tables here are the only place those names
resolve, which keeps the configuration surface small and every formula
auditable.  Parameters scale with the domain so one id works on any grid.
"""

from __future__ import annotations

import numpy as np

from .errors import ScenarioError
from .measures import DensityMeasure, Grid1D, effective_density
from .spectral import HilbertVector, SpectralModel, canonical_generators

__all__ = [
    "density",
    "multiplier",
    "probe_vector",
    "generators",
    "diffeo_maps",
    "fourier_pair",
    "DENSITY_IDS",
    "MULTIPLIER_IDS",
    "PROBE_IDS",
    "GENERATOR_IDS",
    "DIFFEO_IDS",
]


def _t(grid: Grid1D) -> np.ndarray:
    return (grid.points - grid.lower) / grid.span


_DENSITIES = {
    "lebesgue": lambda g: np.ones(g.n),
    "tilt": lambda g: 2.0 * _t(g),
    "cosine-positive": lambda g: 1.0 + 0.5 * np.cos(2.0 * np.pi * _t(g)),
    "ramp-up": lambda g: 0.5 + _t(g),
}

DENSITY_IDS = tuple(sorted(_DENSITIES)) + ("two-atoms",)


def density(name: str, grid: Grid1D) -> DensityMeasure:
    if name == "two-atoms":
        return DensityMeasure(
            grid,
            np.zeros(grid.n),
            atoms=[
                (grid.points[grid.index_of(grid.lower + 0.25 * grid.span, tol=1.0)], 0.5),
                (grid.points[grid.index_of(grid.lower + 0.75 * grid.span, tol=1.0)], 0.5),
            ],
        )
    try:
        return DensityMeasure(grid, _DENSITIES[name](grid))
    except KeyError:
        raise ScenarioError(f"unknown density id {name!r}") from None


_MULTIPLIERS = {
    "one": lambda g: np.ones(g.n, dtype=complex),
    "coordinate": lambda g: g.points.astype(complex),
    "gauss-bump": lambda g: np.exp(-((_t(g) - 0.5) ** 2) / (2 * 0.15**2)).astype(complex),
    "phase": lambda g: np.exp(1j * np.pi * _t(g)),
}

MULTIPLIER_IDS = tuple(sorted(_MULTIPLIERS))


def multiplier(name: str, grid: Grid1D) -> np.ndarray:
    try:
        return _MULTIPLIERS[name](grid)
    except KeyError:
        raise ScenarioError(f"unknown multiplier id {name!r}") from None


def _gauss(grid: Grid1D, center_frac: float, width_frac: float, amp=1.0) -> np.ndarray:
    c = grid.lower + center_frac * grid.span
    s = width_frac * grid.span
    return amp * np.exp(-((grid.points - c) ** 2) / (2.0 * s * s))


_PROBES = {
    "coordinate": lambda g: g.points.astype(complex),
    "gauss-mid": lambda g: _gauss(g, 0.5, 0.08).astype(complex),
    "gauss-left": lambda g: _gauss(g, 0.35, 0.06).astype(complex),
    # Localized complex probe for transform scenarios: small center offset so
    # its spectral image carries a mild phase, amplitude (1 + 0.2i).
    "fourier-probe": lambda g: (1.0 + 0.2j)
    * _gauss(g, 0.5 + 1.0 / 640.0, 1.0 / 128.0),
}

PROBE_IDS = tuple(sorted(_PROBES))


def probe_vector(name: str, grid: Grid1D, channels: int = 1) -> HilbertVector:
    try:
        col = _PROBES[name](grid)
    except KeyError:
        raise ScenarioError(f"unknown probe id {name!r}") from None
    cols = np.zeros((grid.n, channels), dtype=complex)
    cols[:, 0] = col
    return HilbertVector(grid, cols)


GENERATOR_IDS = ("canonical", "spectral-gauss", "spectral-one")


def generators(name: str, model: SpectralModel) -> list:
    """Generating-vector family for a model.

    ``canonical`` yields channel indicators over the multiplicity profile.
    ``spectral-gauss`` yields one vector whose diagonal-coordinate samples
    are a wide positive Gaussian (nonvanishing over the whole band), for
    conjugated models whose first generator should have full spectral type.
    ``spectral-one`` transports the constant one back from the diagonal
    coordinates, making the generator measure equal to the spectral weight.
    """
    if name == "canonical":
        return canonical_generators(model)
    if name == "spectral-gauss":
        ghat = _gauss(model.grid, 0.5, 1.0 / 5.1).astype(complex)
        return [model.from_spectral(ghat[:, None])]
    if name == "spectral-one":
        ones = np.ones((model.grid.n, model.m_max), dtype=complex)
        return [model.from_spectral(ones)]
    raise ScenarioError(f"unknown generator id {name!r}")


_DIFFEOS = {}


def _register_quad_stretch():
    def maps_for(grid: Grid1D):
        a, span = grid.lower, grid.span

        def s(lam):
            return lam + (lam - a) ** 2 / (4.0 * span)

        def s_inv(xi):
            v = np.asarray(xi) - a
            u = 2.0 * span * (np.sqrt(1.0 + v / span) - 1.0)
            return a + u

        def s_prime(lam):
            return 1.0 + (np.asarray(lam) - a) / (2.0 * span)

        return s, s_inv, s_prime

    _DIFFEOS["quad-stretch"] = maps_for


_register_quad_stretch()

DIFFEO_IDS = tuple(sorted(_DIFFEOS))


def diffeo_maps(name: str, grid: Grid1D):
    """Forward map, inverse, and derivative, parametrized by the base grid."""
    try:
        return _DIFFEOS[name](grid)
    except KeyError:
        raise ScenarioError(f"unknown diffeomorphism id {name!r}") from None


def fourier_pair(physical_grid: Grid1D, physical_weight: DensityMeasure):
    """Frequency grid, Lebesgue band weight, and an exactly-unitary transform.

    The kernel matrix W with entries sqrt(h*dxi/2pi) * exp(-i xi lam) is
    unitary in the plain Euclidean sense because dxi * h = 2pi/n; sandwiching
    it between the square roots of the discrete cell weights makes the result
    unitary for the weighted products, at the cost of distorting the two
    endpoint samples (immaterial for probes vanishing at the domain ends).
    The frequency band is symmetric about zero with spacing 2pi/(n h).
    """
    n = physical_grid.n
    h = physical_grid.spacing
    dxi = 2.0 * np.pi / (n * h)
    xi = (np.arange(n) - (n - 1) / 2.0) * dxi
    spectral_grid = Grid1D(xi[0], xi[-1], xi)
    spectral_weight = DensityMeasure(spectral_grid, np.ones(n))
    w_mat = np.sqrt(h * dxi / (2.0 * np.pi)) * np.exp(
        -1j * np.outer(xi, physical_grid.points)
    )
    d_phys = physical_grid.weights * effective_density(physical_weight)
    d_spec = spectral_grid.weights * np.ones(n)
    matrix = (1.0 / np.sqrt(d_spec))[:, None] * w_mat * np.sqrt(d_phys)[None, :]
    return spectral_grid, spectral_weight, matrix


def branch_pair(physical_grid: Grid1D, physical_weight: DensityMeasure,
                theta0: float = 0.3, theta1: float = 0.7):
    """Two-channel commuting second measure with genuinely mixed fibers.

    Each fiber carries an orthonormal pair rotated by a position-dependent
    angle; the two eigenvalue branches are the coordinate itself and the
    coordinate shifted past the domain by one spacing, so the spectral grid
    doubles the points without branch collisions and the flattened kernel is
    a permutation-sparse Euclidean unitary.  Projections of the resulting
    measure act fiberwise, hence commute with every coordinate projection.
    """
    n = physical_grid.n
    h = physical_grid.spacing
    lam = physical_grid.points
    xi = physical_grid.lower + h * np.arange(2 * n)
    spectral_grid = Grid1D(xi[0], xi[-1], xi)
    spectral_weight = DensityMeasure(spectral_grid, np.ones(2 * n))
    theta = theta0 + theta1 * (lam - physical_grid.lower) / physical_grid.span
    w_mat = np.zeros((2 * n, 2 * n), dtype=complex)
    cos, sin = np.cos(theta), np.sin(theta)
    rows = np.arange(n)
    # Branch 1 projects onto (cos, sin); branch 2 onto (-sin, cos).
    w_mat[rows, 2 * rows] = cos
    w_mat[rows, 2 * rows + 1] = sin
    w_mat[n + rows, 2 * rows] = -sin
    w_mat[n + rows, 2 * rows + 1] = cos
    d_phys = np.repeat(physical_grid.weights * effective_density(physical_weight), 2)
    d_spec = spectral_grid.weights
    matrix = (1.0 / np.sqrt(d_spec))[:, None] * w_mat * np.sqrt(d_phys)[None, :]
    return spectral_grid, spectral_weight, matrix
