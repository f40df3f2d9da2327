"""Test-function admission, ket evaluation, and the resolution identity."""

import numpy as np
import pytest

from spectrakit.direct_integral import StructuralIso
from spectrakit.errors import ChannelError, ExclusionSetError
from spectrakit.measures import DensityMeasure, Grid1D, effective_density, quad_discrete
from spectrakit.rigging import (
    KetFunctional,
    completeness_check,
    ket_evaluate,
    ket_rows,
    verify_test_function,
)
from spectrakit.spectral import (
    SpectralModel,
    apply_multiplier,
    canonical_generators,
    probe_family,
    verify_generating_system,
)

GRID = Grid1D.regular(0.0, 1.0, 1025)


@pytest.fixture(scope="module")
def iso():
    model = SpectralModel.multiplication(GRID)
    gs = verify_generating_system(model, canonical_generators(model))
    return StructuralIso(model, gs)


@pytest.fixture(scope="module")
def block_iso():
    mult = np.where(GRID.points <= 0.5, 2, 1)
    model = SpectralModel.multiplication(GRID, multiplicity=mult)
    gs = verify_generating_system(model, canonical_generators(model))
    return StructuralIso(model, gs)


def as_test_function(iso, samples):
    tf = verify_test_function(iso, iso.model.vector(samples))
    assert tf.verified_pointwise_rn
    return tf


class TestVerification:
    def test_probes_admitted(self, iso):
        for h in probe_family(GRID, 1)[:4]:
            tf = verify_test_function(iso, h)
            assert tf.verified_pointwise_rn
            assert not tf.exclusion_mask.any()

    def test_exclusion_set_collects_null_points(self):
        # Weight density vanishing on a cell: 0/0 points are excluded, not fatal.
        dens = np.where((GRID.points >= 0.49) & (GRID.points <= 0.51), 0.0, 1.0)
        model = SpectralModel.multiplication(GRID, DensityMeasure(GRID, dens))
        gs = verify_generating_system(model, canonical_generators(model))
        iso = StructuralIso(model, gs)
        tf = verify_test_function(iso, model.vector(np.ones(GRID.n)))
        assert tf.verified_pointwise_rn
        assert tf.exclusion_mask.any()
        with pytest.raises(ExclusionSetError):
            KetFunctional(iso, 0.5, 1)


class TestKet:
    def test_generator_has_unit_coordinates(self, iso):
        tf = as_test_function(iso, np.ones(GRID.n))
        for lam in (0.25, 0.5, 0.77):
            assert ket_evaluate(KetFunctional(iso, lam, 1), tf) == pytest.approx(1.0)

    def test_coordinate_function(self, iso):
        tf = as_test_function(iso, GRID.points)
        assert ket_evaluate(KetFunctional(iso, 0.3, 1), tf) == pytest.approx(0.3, abs=1e-10)

    def test_vanishing_away_from_support(self, iso):
        tf = as_test_function(iso, np.where(GRID.points < 0.4, 1.0, 0.0))
        assert abs(ket_evaluate(KetFunctional(iso, 0.8, 1), tf)) == 0.0

    def test_linearity(self, iso):
        a, b = 1.5 - 0.5j, 0.25j
        f1, f2 = probe_family(GRID, 1)[:2]
        combo = as_test_function(iso, a * f1.samples + b * f2.samples)
        t1, t2 = verify_test_function(iso, f1), verify_test_function(iso, f2)
        ket = KetFunctional(iso, 0.41, 1)
        lhs = ket_evaluate(ket, combo)
        rhs = a * ket_evaluate(ket, t1) + b * ket_evaluate(ket, t2)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_generalized_eigenvector_property(self, iso):
        # The coordinate multiplier acts as multiplication by the label.
        phi = probe_family(GRID, 1)[3]
        tf = verify_test_function(iso, phi)
        shifted = verify_test_function(
            iso, apply_multiplier(iso.model, GRID.points.astype(complex), phi)
        )
        for i in range(50, GRID.n - 1, 211):
            lam = GRID.points[i]
            ket = KetFunctional(iso, lam, 1)
            lhs = ket_evaluate(ket, shifted)
            rhs = lam * ket_evaluate(ket, tf)
            assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_consistency_with_correlation_route(self, iso):
        # Recompute the pairing through the raw density ratio.
        phi = probe_family(GRID, 1)[1]
        tf = verify_test_function(iso, phi)
        g = iso.gs.vectors[0]
        corr = effective_density(iso.model.correlation_measure(g, phi))
        mu_g = effective_density(iso.gs.measures[0])
        for i in (100, 500, 900):
            lam = GRID.points[i]
            expected = iso.sqrt_ratios[0][i] * corr[i] / mu_g[i]
            got = ket_evaluate(KetFunctional(iso, lam, 1), tf)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_channel_bound(self, block_iso):
        with pytest.raises(ChannelError):
            KetFunctional(block_iso, 0.9, 2)
        KetFunctional(block_iso, 0.2, 2)  # inside the double-multiplicity region


class TestCompleteness:
    def test_norm_identity(self, iso):
        phi = as_test_function(iso, probe_family(GRID, 1)[0].samples)
        res = completeness_check(iso, phi, phi, [(0.0, 1.0)])
        assert res <= 1e-6

    def test_disjoint_supports(self, iso):
        phi = as_test_function(iso, np.where(GRID.points < 0.4, 1.0, 0.0))
        psi = as_test_function(iso, np.where(GRID.points > 0.6, 1.0, 0.0))
        assert completeness_check(iso, phi, psi, [(0.0, 1.0)]) <= 1e-12

    def test_closed_form_half_interval(self, iso):
        phi = as_test_function(iso, np.ones(GRID.n))
        psi = as_test_function(iso, GRID.points)
        assert completeness_check(iso, phi, psi, [(0.0, 0.5)]) <= 1e-10
        lhs = iso.model.inner(
            phi.underlying, iso.model.project([(0.0, 0.5)], psi.underlying)
        )
        assert lhs.real == pytest.approx(0.125, abs=1e-3)

    def test_block_model(self, block_iso):
        probes = probe_family(GRID, 2, multiplicity=block_iso.model.multiplicity)
        phi = verify_test_function(block_iso, block_iso.model.vector(probes[0].samples))
        psi = verify_test_function(block_iso, block_iso.model.vector(probes[1].samples))
        for E in ([(0.0, 1.0)], [(0.2, 0.6)], [(0.0, 0.25), (0.6, 0.9)]):
            assert completeness_check(block_iso, phi, psi, E) <= 1e-9


def test_ket_rows(iso):
    phi = verify_test_function(iso, probe_family(GRID, 1)[0])
    rows = ket_rows(iso, phi, points=GRID.points[::256])
    assert len(rows) == len(GRID.points[::256])
    assert len(rows[0]) == 4
