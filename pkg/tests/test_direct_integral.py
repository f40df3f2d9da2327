"""Direct integrals and the structural isomorphism."""

import numpy as np
import pytest

from spectrakit.catalog import fourier_pair
from spectrakit.direct_integral import (
    DecomposableOperator,
    MeasurableField,
    OrthonormalBasisField,
    StructuralIso,
    apply_decomposable,
    apply_diagonal,
    field_inner,
    field_norm,
    field_to_rows,
    forward,
    inverse,
    parseval_check,
)
from spectrakit.errors import IsoDomainError
from spectrakit.measures import DensityMeasure, Grid1D
from spectrakit.spectral import (
    SpectralModel,
    apply_multiplier,
    canonical_generators,
    probe_family,
    verify_generating_system,
)

GRID = Grid1D.regular(0.0, 1.0, 1025)
LEB = DensityMeasure(GRID, np.ones(GRID.n))


@pytest.fixture(scope="module")
def simple_iso():
    model = SpectralModel.multiplication(GRID)
    gs = verify_generating_system(model, canonical_generators(model))
    return StructuralIso(model, gs)


@pytest.fixture(scope="module")
def block_iso():
    mult = np.where(GRID.points <= 0.5, 2, 1)
    model = SpectralModel.multiplication(GRID, multiplicity=mult)
    gs = verify_generating_system(model, canonical_generators(model))
    return StructuralIso(model, gs)


@pytest.fixture(scope="module")
def weighted_iso():
    # Reference measure equivalent to, but different from, the first member.
    model = SpectralModel.multiplication(GRID)
    gs = verify_generating_system(model, canonical_generators(model))
    mu = DensityMeasure(GRID, 1.0 + 0.5 * np.cos(2 * np.pi * GRID.points))
    return StructuralIso(model, gs, reference_measure=mu)


@pytest.fixture(scope="module")
def fourier_iso():
    g = Grid1D.regular(-16.0, 16.0, 512)
    w = DensityMeasure(g, np.ones(g.n))
    sg, sw, mat = fourier_pair(g, w)
    model = SpectralModel.conjugated(g, w, sg, sw, mat)
    ghat = np.exp(-((sg.points) ** 2) / (2 * (sg.span / 5.1) ** 2))
    gvec = model.from_spectral(ghat[:, None].astype(complex))
    gs = verify_generating_system(model, [gvec])
    return StructuralIso(model, gs, reference_measure=sw)


def dims1():
    return np.ones(GRID.n, dtype=int)


class TestFieldBasics:
    def test_basis_inner_products(self):
        basis = OrthonormalBasisField(GRID, np.full(GRID.n, 2))
        e1 = basis.field(0, LEB)
        e2 = basis.field(1, LEB)
        assert field_inner(e1, e1) == pytest.approx(1.0)
        assert field_inner(e1, e2) == 0.0
        assert basis.pointwise_orthonormal()

    def test_closed_form_inner(self):
        f = MeasurableField(GRID, LEB, dims1(), GRID.points.astype(complex))
        h = MeasurableField(GRID, LEB, dims1(), np.ones(GRID.n, dtype=complex))
        assert field_inner(f, h) == pytest.approx(0.5, abs=1e-13)

    def test_trailing_channels_zeroed(self):
        mult = np.where(GRID.points <= 0.5, 2, 1)
        s = np.ones((GRID.n, 2), dtype=complex)
        f = MeasurableField(GRID, LEB, mult, s)
        assert np.all(f.samples[GRID.points > 0.5, 1] == 0.0)


class TestDiagonal:
    def test_identity(self):
        f = MeasurableField(GRID, LEB, dims1(), np.exp(1j * GRID.points))
        g = apply_diagonal(np.ones(GRID.n), f)
        assert np.array_equal(g.samples, f.samples)

    def test_indicator_is_projection(self):
        f = MeasurableField(GRID, LEB, dims1(), np.ones(GRID.n, dtype=complex))
        chi = ((GRID.points >= 0.25) & (GRID.points <= 0.5)).astype(complex)
        g = apply_diagonal(chi, f)
        assert np.array_equal(g.samples[:, 0], chi)

    def test_coordinate_norm(self):
        f = MeasurableField(GRID, LEB, dims1(), np.ones(GRID.n, dtype=complex))
        g = apply_diagonal(GRID.points, f)
        assert field_inner(g, g).real == pytest.approx(1.0 / 3.0, abs=1e-5)


class TestDecomposable:
    def test_identity_matrices(self):
        mats = np.broadcast_to(np.eye(2), (GRID.n, 2, 2)).copy()
        op = DecomposableOperator.classify(GRID, mats)
        assert op.is_projection and op.is_unitary and op.is_diagonal
        f = MeasurableField(GRID, LEB, np.full(GRID.n, 2),
                            np.ones((GRID.n, 2), dtype=complex))
        assert np.array_equal(apply_decomposable(op, f).samples, f.samples)

    def test_rank_one_projection(self):
        mats = np.zeros((GRID.n, 2, 2))
        mats[:, 0, 0] = 1.0
        op = DecomposableOperator.classify(GRID, mats)
        assert op.is_projection and not op.is_unitary
        f = MeasurableField(GRID, LEB, np.full(GRID.n, 2),
                            np.ones((GRID.n, 2), dtype=complex))
        out = apply_decomposable(op, f)
        assert np.all(out.samples[:, 1] == 0.0)

    def test_rotation_second_component(self):
        lam = GRID.points
        mats = np.empty((GRID.n, 2, 2))
        mats[:, 0, 0] = np.cos(lam)
        mats[:, 0, 1] = -np.sin(lam)
        mats[:, 1, 0] = np.sin(lam)
        mats[:, 1, 1] = np.cos(lam)
        op = DecomposableOperator.classify(GRID, mats)
        assert op.is_unitary and not op.is_selfadjoint
        e1 = np.zeros((GRID.n, 2), dtype=complex)
        e1[:, 0] = 1.0
        f = MeasurableField(GRID, LEB, np.full(GRID.n, 2), e1)
        out = apply_decomposable(op, f)
        assert np.allclose(out.samples[:, 1], np.sin(lam), atol=1e-14)

    def test_projection_commutes_with_diagonal(self):
        # Rank-one projector onto (1,1)/sqrt(2) in every fiber.
        mats = np.full((GRID.n, 2, 2), 0.5)
        op = DecomposableOperator.classify(GRID, mats)
        assert op.is_projection
        chi = ((GRID.points >= 0.3) & (GRID.points <= 0.7)).astype(complex)
        f = MeasurableField(GRID, LEB, np.full(GRID.n, 2),
                            probe_family(GRID, 2)[0].samples)
        a = apply_diagonal(chi, apply_decomposable(op, f), bound=None)
        b = apply_decomposable(op, apply_diagonal(chi, f, bound=None))
        assert field_norm(a - b) <= 1e-10


class TestForwardInverse:
    def test_generator_maps_to_unit_component(self, simple_iso):
        field = forward(simple_iso, simple_iso.gs.vectors[0])
        assert np.allclose(field.samples[:, 0], 1.0, atol=1e-12)

    def test_coordinate_vector(self, simple_iso):
        h = simple_iso.model.vector(GRID.points)
        field = forward(simple_iso, h)
        assert np.allclose(field.samples[:, 0], GRID.points, atol=1e-10)

    def test_zero_vector(self, simple_iso):
        z = simple_iso.model.vector(np.zeros(GRID.n))
        assert field_norm(forward(simple_iso, z)) == 0.0

    @pytest.mark.parametrize("iso_name", ["simple_iso", "block_iso", "weighted_iso", "fourier_iso"])
    def test_roundtrip(self, iso_name, request):
        iso = request.getfixturevalue(iso_name)
        probes = probe_family(
            iso.model.physical_grid,
            iso.model.m_max if iso.model.variant == "multiplication" else 1,
            multiplicity=iso.model.multiplicity
            if iso.model.variant == "multiplication"
            else None,
        )
        for h in probes[:4]:
            h = iso.model.vector(h.samples)
            back = inverse(iso, forward(iso, h))
            assert iso.model.norm(back - h) <= 1e-8 * max(iso.model.norm(h), 1e-30)

    def test_unit_component_field_maps_to_generator(self, weighted_iso):
        iso = weighted_iso
        # Reading the inverse formula directly: the field e_1 * sqrt(g1/mu)
        # returns the first generator.
        s = np.zeros((GRID.n, 1), dtype=complex)
        s[:, 0] = iso.sqrt_ratios[0]
        g1 = inverse(iso, iso.field(s))
        assert iso.model.norm(g1 - iso.gs.vectors[0]) <= 1e-10

    @pytest.mark.parametrize("iso_name", ["simple_iso", "block_iso", "weighted_iso", "fourier_iso"])
    def test_unitarity(self, iso_name, request):
        iso = request.getfixturevalue(iso_name)
        probes = probe_family(iso.model.physical_grid, 1)
        for f in probes[:3]:
            for h in probes[3:5]:
                f2, h2 = iso.model.vector(f.samples), iso.model.vector(h.samples)
                scale = max(iso.model.norm(f2) * iso.model.norm(h2), 1e-30)
                assert iso.unitarity_residual(f2, h2) <= 1e-10 * scale

    @pytest.mark.parametrize("iso_name", ["simple_iso", "weighted_iso", "fourier_iso"])
    def test_intertwining(self, iso_name, request):
        iso = request.getfixturevalue(iso_name)
        phi = np.exp(1j * np.linspace(0, 2, iso.model.grid.n))
        for f in probe_family(iso.model.physical_grid, 1)[:3]:
            assert iso.intertwining_residual(phi, iso.model.vector(f.samples)) <= 1e-10

    def test_component_routes_agree(self, weighted_iso):
        iso = weighted_iso
        h = iso.model.vector(probe_family(GRID, 1)[5].samples)
        routes = iso.component_routes(h)
        names = list(routes)
        defined = ~iso.exclusion_mask
        assert defined.mean() >= 0.99
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                gap = np.abs(routes[names[a]][defined] - routes[names[b]][defined])
                assert np.max(gap) <= 1e-10

    def test_unverified_chain_rejected(self):
        model = SpectralModel.multiplication(GRID)
        g = model.vector(np.where(GRID.points <= 0.5, 1.0, 0.0))
        gs = verify_generating_system(model, [g], probes=[g])
        with pytest.raises(IsoDomainError):
            StructuralIso(model, gs)

    def test_inequivalent_reference_rejected(self, simple_iso):
        half = DensityMeasure(GRID, np.where(GRID.points <= 0.5, 1.0, 0.0))
        with pytest.raises(IsoDomainError):
            StructuralIso(simple_iso.model, simple_iso.gs, reference_measure=half)


class TestParseval:
    def test_full_domain_norm(self, simple_iso):
        f = simple_iso.model.vector(probe_family(GRID, 1)[0].samples)
        res = parseval_check(simple_iso, f, f, [(0.0, 1.0)])
        assert res <= 1e-10

    def test_disjoint_supports(self, simple_iso):
        m = simple_iso.model
        left = m.vector(np.where(GRID.points < 0.4, 1.0, 0.0))
        right = m.vector(np.where(GRID.points > 0.6, 1.0, 0.0))
        assert parseval_check(simple_iso, left, right, [(0.0, 1.0)]) <= 1e-12

    def test_closed_form_half_interval(self, simple_iso):
        m = simple_iso.model
        f = m.vector(np.ones(GRID.n))
        h = m.vector(GRID.points)
        res = parseval_check(simple_iso, f, h, [(0.0, 0.5)])
        assert res <= 1e-12
        lhs = m.inner(f, m.project([(0.0, 0.5)], h))
        assert lhs.real == pytest.approx(0.125, abs=1e-3)

    @pytest.mark.parametrize("iso_name", ["block_iso", "weighted_iso", "fourier_iso"])
    def test_random_sets(self, iso_name, request):
        iso = request.getfixturevalue(iso_name)
        lo, hi = iso.model.grid.lower, iso.model.grid.upper
        span = hi - lo
        f = iso.model.vector(probe_family(iso.model.physical_grid, 1)[1].samples)
        h = iso.model.vector(probe_family(iso.model.physical_grid, 1)[2].samples)
        for a, b in [(0.1, 0.45), (0.3, 0.9), (0.0, 1.0)]:
            E = [(lo + a * span, lo + b * span)]
            assert parseval_check(iso, f, h, E) <= 1e-9

    def test_intertwining_with_multiplier_op(self, simple_iso):
        # V J_phi = Q_phi V through the public wrappers.
        iso = simple_iso
        phi = np.cos(GRID.points).astype(complex)
        f = iso.model.vector(probe_family(GRID, 1)[4].samples)
        lhs = forward(iso, apply_multiplier(iso.model, phi, f))
        rhs = apply_diagonal(phi, forward(iso, f))
        assert field_norm(lhs - rhs) <= 1e-10


def test_field_rows_shape(simple_iso):
    f = forward(simple_iso, simple_iso.model.vector(GRID.points))
    rows = field_to_rows(f)
    assert len(rows) == GRID.n
    assert len(rows[0]) == 1 + 2 * f.width
