"""Spectral measure spaces: projections, multiplier calculus, generating systems."""

import numpy as np
import pytest

from spectrakit.catalog import fourier_pair
from spectrakit.errors import (
    AbsoluteContinuityError,
    GridMismatchError,
    UnboundedMultiplierError,
)
from spectrakit.measures import (
    DensityMeasure,
    Grid1D,
    IntervalUnion,
    integrate,
    quad_discrete,
)
from spectrakit.spectral import (
    HilbertVector,
    SpectralModel,
    apply_multiplier,
    apply_projection,
    canonical_generators,
    correlation_measure,
    decompose_vector,
    multiplicity_function,
    probe_family,
    reconstruct,
    verify_generating_system,
)

GRID = Grid1D.regular(0.0, 1.0, 1025)


@pytest.fixture(scope="module")
def model():
    return SpectralModel.multiplication(GRID)


@pytest.fixture(scope="module")
def block_model():
    # Channel 2 alive on the lower half only.
    mult = np.where(GRID.points <= 0.5, 2, 1)
    return SpectralModel.multiplication(GRID, multiplicity=mult)


@pytest.fixture(scope="module")
def fourier_model():
    g = Grid1D.regular(-16.0, 16.0, 512)
    w = DensityMeasure(g, np.ones(g.n))
    sg, sw, mat = fourier_pair(g, w)
    return SpectralModel.conjugated(g, w, sg, sw, mat)


@pytest.fixture(scope="module")
def atomic_model():
    return SpectralModel.atomic(GRID, [(0.25, 0.5), (0.75, 1.5)])


def ones(model):
    return model.vector(np.ones(model.physical_grid.n))


class TestProjection:
    def test_completeness(self, model):
        f = probe_family(GRID)[0]
        g = apply_projection(model, [(0.0, 1.0)], f)
        assert np.array_equal(g.samples, f.samples)

    def test_empty_set(self, model):
        f = probe_family(GRID)[1]
        g = apply_projection(model, IntervalUnion.empty(), f)
        assert np.all(g.samples == 0)

    def test_half_interval_norm(self, model):
        f = ones(model)
        p = apply_projection(model, [(0.0, 0.5)], f)
        # Boundary grid point carries full trapezoid weight: O(h) oracle gap.
        assert model.inner(p, p).real == pytest.approx(0.5, abs=2 * GRID.spacing)

    def test_idempotent_selfadjoint_additive(self, model):
        f, g = probe_family(GRID)[:2]
        E, F = [(0.1, 0.4)], [(0.45, 0.8)]
        pe = lambda v: apply_projection(model, E, v)
        assert model.norm(pe(pe(f)) - pe(f)) == 0.0
        lhs = model.inner(f, pe(g))
        rhs = np.conj(model.inner(g, pe(f)))
        assert lhs == pytest.approx(rhs, abs=1e-12)
        both = apply_projection(model, [E[0], F[0]], f)
        summed = pe(f) + apply_projection(model, F, f)
        assert model.norm(both - summed) == 0.0

    def test_intersection_composition(self, model):
        f = probe_family(GRID)[2]
        E, F = IntervalUnion.of((0.1, 0.6)), IntervalUnion.of((0.4, 0.9))
        once = apply_projection(model, E.intersect(F), f)
        twice = apply_projection(model, E, apply_projection(model, F, f))
        assert model.norm(once - twice) == 0.0

    def test_conjugated_projection_unitary(self, fourier_model):
        m = fourier_model
        f = probe_family(m.physical_grid)[0]
        full = apply_projection(m, [(m.grid.lower, m.grid.upper)], f)
        assert m.norm(full - f) <= 1e-10 * m.norm(f)
        pe = lambda v: apply_projection(m, [(-3.0, 2.0)], v)
        assert m.norm(pe(pe(f)) - pe(f)) <= 1e-10 * m.norm(f)


class TestCorrelation:
    def test_diagonal_is_positive(self, model):
        f = probe_family(GRID)[3]
        mu = correlation_measure(model, f, f)
        assert np.max(np.abs(mu.density.imag)) < 1e-14
        assert np.min(mu.density.real) > -1e-14
        assert quad_discrete(mu, np.ones(GRID.n)) == pytest.approx(
            model.inner(f, f), abs=1e-12
        )

    def test_disjoint_supports_vanish(self, model):
        left = np.where(GRID.points < 0.4, 1.0, 0.0)
        right = np.where(GRID.points > 0.6, 1.0, 0.0)
        mu = correlation_measure(
            model, model.vector(left), model.vector(right)
        )
        assert np.max(np.abs(mu.density)) == 0.0

    def test_closed_form_inner_product(self, model):
        f = ones(model)
        g = model.vector(GRID.points)
        # (f, g) = integral of lam = 0.5, exact for the trapezoid rule.
        assert model.inner(f, g) == pytest.approx(0.5, abs=1e-13)
        mu = correlation_measure(model, f, g)
        assert integrate(mu, [(0.0, 1.0)]) == pytest.approx(0.5, abs=1e-13)

    def test_conjugate_symmetry(self, model, atomic_model):
        for m in (model, atomic_model):
            f, g = probe_family(GRID)[:2]
            f, g = m.vector(f.samples), m.vector(g.samples)
            fw = correlation_measure(m, f, g)
            bw = correlation_measure(m, g, f).conj()
            assert np.allclose(fw.density, bw.density, atol=1e-14)
            for (l1, m1), (l2, m2) in zip(fw.atoms, bw.atoms):
                assert l1 == l2 and m1 == pytest.approx(m2)


class TestMultiplier:
    def test_identity_multiplier(self, model):
        f = probe_family(GRID)[0]
        g = apply_multiplier(model, np.ones(GRID.n), f)
        assert model.norm(g - f) == 0.0

    def test_indicator_equals_projection(self, model):
        f = probe_family(GRID)[1]
        E = IntervalUnion.of((0.2, 0.7))
        chi = model.indicator(E).astype(complex)
        assert model.norm(
            apply_multiplier(model, chi, f) - apply_projection(model, E, f)
        ) == 0.0

    def test_coordinate_norm(self, model):
        f = ones(model)
        g = apply_multiplier(model, GRID.points.astype(complex), f)
        # Trapezoid of lam^2 differs from 1/3 by h^2/6.
        assert model.inner(g, g).real == pytest.approx(1.0 / 3.0, abs=1e-5)

    def test_moment_identities_exact(self, model):
        # (f, J_phi g) = integral of phi against the correlation density, and
        # the squared norm identity, both closed under the same quadrature.
        f, g = probe_family(GRID)[:2]
        phi = np.exp(1j * np.pi * GRID.points)
        jg = apply_multiplier(model, phi, g)
        mu_fg = correlation_measure(model, f, g)
        lhs = model.inner(f, jg)
        rhs = quad_discrete(mu_fg, phi)
        assert lhs == pytest.approx(rhs, abs=1e-12)
        mu_g = correlation_measure(model, g, g)
        assert model.inner(jg, jg) == pytest.approx(
            quad_discrete(mu_g, np.abs(phi) ** 2), abs=1e-12
        )

    def test_moment_identities_conjugated(self, fourier_model):
        m = fourier_model
        f, g = probe_family(m.physical_grid)[:2]
        phi = np.exp(-(m.grid.points**2) / 40.0).astype(complex)
        jg = apply_multiplier(m, phi, g)
        lhs = m.inner(f, jg)
        rhs = quad_discrete(correlation_measure(m, f, g), phi)
        assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)

    def test_norm_bound(self, model):
        for f in probe_family(GRID)[:4]:
            phi = np.exp(1j * GRID.points) * (1.0 + 0.3 * GRID.points)
            jf = apply_multiplier(model, phi, f)
            assert model.norm(jf) <= np.max(np.abs(phi)) * model.norm(f) + 1e-8

    def test_reduction_keeps_orthogonality(self, block_model):
        m = block_model
        gs = canonical_generators(m)
        phi = np.exp(1j * GRID.points)
        jg2 = apply_multiplier(m, phi, gs[1])
        mu = correlation_measure(m, gs[0], jg2)
        assert np.max(np.abs(mu.density)) <= 1e-8

    def test_domain_bound_enforced(self, model):
        f = ones(model)
        with pytest.raises(UnboundedMultiplierError):
            apply_multiplier(model, 1e9 * np.ones(GRID.n), f, bound=1.0)

    def test_grid_mismatch(self, model):
        f = ones(model)
        with pytest.raises(GridMismatchError):
            apply_multiplier(model, np.ones(17), f)


class TestGeneratingSystem:
    def test_simple_verified(self, model):
        gs = verify_generating_system(model, canonical_generators(model))
        assert gs.verified
        assert gs.supports[0].intervals == ((0.0, 1.0),)

    def test_block_chain(self, block_model):
        gs = verify_generating_system(block_model, canonical_generators(block_model))
        assert gs.verified
        assert gs.type_chain_verified
        lo, hi = gs.supports[1].intervals[0]
        assert lo == 0.0 and hi == pytest.approx(0.5, abs=GRID.spacing)

    def test_chain_violation_reported(self, block_model):
        g1, g2 = canonical_generators(block_model)
        gs = verify_generating_system(block_model, [g2, g1])
        assert not gs.verified
        assert any("type chain" in f for f in gs.failures)

    def test_multiplicity_function(self, model, block_model):
        gs1 = verify_generating_system(model, canonical_generators(model))
        nf = multiplicity_function(model, gs1)
        assert np.all(nf.labels == 1)
        gs2 = verify_generating_system(block_model, canonical_generators(block_model))
        nf2 = multiplicity_function(block_model, gs2)
        flagged = nf2.labels != block_model.multiplicity
        assert flagged.sum() <= 2  # at most the support boundary cell
        assert nf2.essential_sup == 2

    def test_degenerate_chain(self, model):
        g = canonical_generators(model)[0]
        gs = verify_generating_system(model, [g])
        nf = multiplicity_function(model, gs)
        assert nf.essential_sup == 1


class TestDecompose:
    def test_generator_decomposes_to_indicator(self, block_model):
        gs = verify_generating_system(block_model, canonical_generators(block_model))
        coeffs = decompose_vector(block_model, gs, gs.vectors[0])
        assert np.allclose(coeffs[0], 1.0, atol=1e-12)
        assert np.max(np.abs(coeffs[1])) == 0.0

    def test_multiplier_image(self, model):
        gs = verify_generating_system(model, canonical_generators(model))
        phi = np.exp(1j * 2 * np.pi * GRID.points)
        h = apply_multiplier(model, phi, gs.vectors[0])
        coeffs = decompose_vector(model, gs, h)
        assert np.allclose(coeffs[0], phi, atol=1e-10)

    def test_coordinate_vector(self, model):
        gs = verify_generating_system(model, canonical_generators(model))
        h = model.vector(GRID.points)
        coeffs = decompose_vector(model, gs, h)
        assert np.allclose(coeffs[0], GRID.points, atol=1e-8)

    def test_reconstruction_roundtrip(self, block_model):
        gs = verify_generating_system(block_model, canonical_generators(block_model))
        for h in probe_family(GRID, 2, multiplicity=block_model.multiplicity)[:4]:
            h = block_model.vector(h.samples)
            rec = reconstruct(block_model, gs, decompose_vector(block_model, gs, h))
            assert block_model.norm(rec - h) <= 1e-10 * block_model.norm(h)

    def test_ac_violation(self, model):
        # Generator density below tolerance on the upper half while the
        # correlation with h stays order one there.
        g = model.vector(np.where(GRID.points <= 0.5, 1.0, 1e-13))
        gs = verify_generating_system(model, [g], probes=[g])
        h = model.vector(np.where(GRID.points > 0.5, 1e13, 0.0))
        with pytest.raises(AbsoluteContinuityError):
            decompose_vector(model, gs, h)


class TestConjugatedUnitary:
    def test_inner_product_preserved(self, fourier_model):
        m = fourier_model
        f, g = probe_family(m.physical_grid)[:2]
        spec_f, spec_g = m.spectral_samples(f), m.spectral_samples(g)
        d = m.grid.weights
        spec_inner = complex((d * (np.conj(spec_f[:, 0]) * spec_g[:, 0])).sum())
        assert spec_inner == pytest.approx(m.inner(f, g), abs=1e-10)

    def test_roundtrip(self, fourier_model):
        m = fourier_model
        f = probe_family(m.physical_grid)[0]
        back = m.from_spectral(m.spectral_samples(f))
        assert m.norm(back - f) <= 1e-10 * m.norm(f)

    def test_transform_matches_quadrature_oracle(self, fourier_model):
        # Spectral samples of a centered Gaussian against the direct
        # quadrature of the integral transform with kernel exp(-i xi lam).
        m = fourier_model
        lam = m.physical_grid.points
        f = m.vector(np.exp(-(lam**2) / (2 * 0.5**2)))
        fhat = m.spectral_samples(f)[:, 0]
        for k in range(200, 312, 25):
            xi = m.grid.points[k]
            oracle = np.trapezoid(
                f.samples[:, 0] * np.exp(-1j * xi * lam), lam
            ) / np.sqrt(2 * np.pi)
            assert fhat[k] == pytest.approx(oracle, abs=1e-8)


class TestAtomic:
    def test_eigenprojection(self, atomic_model):
        m = atomic_model
        f = ones(m)
        p = apply_projection(m, [(0.2, 0.3)], f)
        assert m.inner(p, p).real == pytest.approx(0.5)
        assert m.inner(f, f).real == pytest.approx(2.0)

    def test_moment_identity(self, atomic_model):
        m = atomic_model
        f = m.vector(np.sin(GRID.points * 3.0) + 0.5j * GRID.points)
        phi = GRID.points.astype(complex)
        jf = apply_multiplier(m, phi, f)
        mu = correlation_measure(m, f, f)
        assert m.inner(f, jf) == pytest.approx(quad_discrete(mu, phi), abs=1e-12)

    def test_generating_system(self, atomic_model):
        gs = verify_generating_system(atomic_model, canonical_generators(atomic_model))
        assert gs.verified
