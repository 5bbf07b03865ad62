import math

import numpy as np
import pytest

from airy_defects.core import ElasticConstants, ValidationError
from airy_defects.closedform import (
    CoreCoefficients,
    DipoleAiry,
    DipoleDerivativeAiry,
    DislocationCoreAiry,
    DislocationLimitAiry,
    FundamentalAiry,
    Poly2D,
    ScaledField,
    ShiftedField,
    SingleDisclinationClamped,
    SumField,
    airy_to_stress,
    dipole_airy,
    dipole_derivative_airy,
    dipole_frame,
    dislocation_core_airy,
    dislocation_limit_airy,
    fundamental_airy,
    single_disclination_clamped,
    strain_to_stress,
    stress_to_strain,
)


def _fd_check(field, pts, h=1e-5):
    """Gradient/Hessian of a closed form against central differences."""
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    g_fd = np.stack(
        [
            (field.value(pts + e1) - field.value(pts - e1)) / (2 * h),
            (field.value(pts + e2) - field.value(pts - e2)) / (2 * h),
        ],
        axis=-1,
    )
    assert np.allclose(field.gradient(pts), g_fd, atol=1e-7)
    H_fd = np.stack(
        [
            (field.gradient(pts + e1) - field.gradient(pts - e1)) / (2 * h),
            (field.gradient(pts + e2) - field.gradient(pts - e2)) / (2 * h),
        ],
        axis=1,
    )
    assert np.allclose(field.hessian(pts), H_fd, atol=1e-6)
    lap = field.hessian(pts)[:, 0, 0] + field.hessian(pts)[:, 1, 1]
    assert np.allclose(field.laplacian(pts), lap, atol=1e-10)


SAMPLE = np.array([[0.31, 0.12], [-0.44, 0.27], [0.05, -0.61], [0.52, 0.49]])


class TestFundamental:
    def test_value_formula(self, elastic):
        f = FundamentalAiry(elastic)
        K = elastic.plane_prefactor
        p = np.array([[0.5, 0.0]])
        expected = K * 0.25 * math.log(0.25) / (16.0 * math.pi)
        assert f.value(p)[0] == pytest.approx(expected, rel=1e-14)

    def test_derivative_consistency(self, elastic):
        _fd_check(FundamentalAiry(elastic), SAMPLE)

    def test_biharmonic_off_origin(self, elastic):
        # the laplacian is harmonic away from the source
        f = FundamentalAiry(elastic)
        h = 1e-4
        p = np.array([[0.3, 0.2]])
        stencil = sum(
            f.laplacian(p + h * np.array([d]))[0]
            for d in ((1, 0), (-1, 0), (0, 1), (0, -1))
        ) - 4.0 * f.laplacian(p)[0]
        assert stencil / h**2 == pytest.approx(0.0, abs=1e-5)


class TestSingleDisclination:
    def test_clamped_traces(self, elastic):
        v = SingleDisclinationClamped(elastic=elastic, radius_R=1.0, charge_s=1.0)
        th = np.linspace(0.0, 2.0 * math.pi, 65)
        ring = np.stack([np.cos(th), np.sin(th)], axis=-1)
        assert np.max(np.abs(v.value(ring))) < 1e-14
        assert np.max(np.abs(v.gradient(ring))) < 1e-13

    def test_min_energy_constant(self, elastic):
        v = SingleDisclinationClamped(elastic=elastic, radius_R=1.0, charge_s=1.0)
        K = elastic.plane_prefactor
        assert v.min_energy() == pytest.approx(K / (32.0 * math.pi), rel=1e-15)

    def test_derivative_consistency(self, elastic):
        v = SingleDisclinationClamped(elastic=elastic, radius_R=1.0, charge_s=1.0)
        _fd_check(v, SAMPLE)

    def test_center_shift_equivariance(self, elastic):
        v0 = SingleDisclinationClamped(elastic=elastic, radius_R=1.0, charge_s=1.0)
        v1 = SingleDisclinationClamped(
            elastic=elastic, radius_R=1.0, charge_s=1.0, center=(0.2, -0.1)
        )
        shift = np.array([0.2, -0.1])
        assert np.allclose(v1.value(SAMPLE), v0.value(SAMPLE - shift), atol=1e-15)


class TestDipole:
    def test_derivative_consistency(self, elastic):
        dip = DipoleAiry(elastic=elastic, burgers_b=(0.0, 1.0), spacing_h=0.05)
        _fd_check(dip, SAMPLE)
        der = DipoleDerivativeAiry(elastic=elastic, burgers_b=(0.3, 0.7))
        _fd_check(der, SAMPLE)

    def test_spacing_limit(self, elastic):
        der = DipoleDerivativeAiry(elastic=elastic, burgers_b=(0.0, 1.0))
        target = der.value(SAMPLE)
        errs = []
        for h in (1e-2, 1e-3):
            dip = DipoleAiry(elastic=elastic, burgers_b=(0.0, 1.0), spacing_h=h)
            errs.append(np.max(np.abs(dip.value(SAMPLE) / h - target)))
        # second-order difference quotient: error drops by ~100 per decade
        assert errs[1] < 2e-2 * errs[0]

    def test_frame_orthonormal(self):
        Q = dipole_frame((0.3, -0.4))
        assert np.allclose(Q @ Q.T, np.eye(2), atol=1e-15)
        assert np.allclose(Q[1], (0.6, -0.8), atol=1e-15)


class TestDislocationCore:
    def test_matches_value_across_core_circle(self, elastic):
        w = DislocationCoreAiry(
            elastic=elastic, burgers_b=(0.0, 1.0), eps=0.1, radius_R=1.0
        )
        th = np.linspace(0.0, 2.0 * math.pi, 33)
        inner = 0.1 * (1.0 - 1e-9) * np.stack([np.cos(th), np.sin(th)], axis=-1)
        outer = 0.1 * (1.0 + 1e-9) * np.stack([np.cos(th), np.sin(th)], axis=-1)
        assert np.allclose(w.value(inner), w.value(outer), atol=1e-9)
        assert np.allclose(w.gradient(inner), w.gradient(outer), atol=1e-7)

    def test_affine_inside_core(self, elastic):
        w = DislocationCoreAiry(
            elastic=elastic, burgers_b=(0.0, 1.0), eps=0.1, radius_R=1.0
        )
        pts = 0.05 * SAMPLE
        assert np.max(np.abs(w.hessian(pts))) < 1e-12

    def test_clamped_traces(self, elastic):
        w = DislocationCoreAiry(
            elastic=elastic, burgers_b=(0.0, 1.0), eps=0.1, radius_R=1.0
        )
        th = np.linspace(0.0, 2.0 * math.pi, 65)
        ring = np.stack([np.cos(th), np.sin(th)], axis=-1)
        assert np.max(np.abs(w.value(ring))) < 1e-13
        assert np.max(np.abs(w.gradient(ring))) < 1e-12

    def test_derivative_consistency(self, elastic):
        w = DislocationCoreAiry(
            elastic=elastic, burgers_b=(0.2, 0.9), eps=0.1, radius_R=1.0,
            site=(0.1, -0.2),
        )
        _fd_check(w, SAMPLE)

    def test_core_coefficients_gate(self):
        with pytest.raises(ValidationError):
            CoreCoefficients.for_annulus(0.5, 0.3)

    def test_limit_field(self, elastic):
        lim = DislocationLimitAiry(elastic=elastic, burgers_b=(0.0, 1.0), radius_R=1.0)
        _fd_check(lim, SAMPLE)
        # outside the core the regularized field approaches the limit field
        errs = []
        for eps in (0.1, 0.01):
            w = DislocationCoreAiry(
                elastic=elastic, burgers_b=(0.0, 1.0), eps=eps, radius_R=1.0
            )
            errs.append(np.max(np.abs(w.value(SAMPLE) - lim.value(SAMPLE))))
        assert errs[1] < 0.1 * errs[0]


class TestCombinators:
    def test_sum_scale_shift(self, elastic):
        f = FundamentalAiry(elastic)
        combo = SumField((ScaledField(2.0, f), ShiftedField((0.1, 0.0), f)))
        expect = 2.0 * f.value(SAMPLE) + f.value(SAMPLE - np.array([0.1, 0.0]))
        assert np.allclose(combo.value(SAMPLE), expect, atol=1e-15)
        _fd_check(combo, SAMPLE)

    def test_poly(self):
        p = Poly2D(coeffs=((0, 0, 1.0), (2, 0, 0.5), (1, 1, -0.25)))
        _fd_check(p, SAMPLE)


class TestWrappers:
    def test_scalar_and_array_forms(self, elastic):
        x = (0.3, 0.2)
        arr = np.array([x, (0.1, -0.4)])
        assert isinstance(fundamental_airy(x, elastic), float)
        assert fundamental_airy(arr, elastic).shape == (2,)
        v = single_disclination_clamped(x, 1.0, (0.0, 0.0), 1.0, elastic)
        ref = SingleDisclinationClamped(elastic=elastic, radius_R=1.0, charge_s=1.0)
        assert v == pytest.approx(ref.value(np.array([x]))[0], rel=1e-15)

    def test_domain_gates(self, elastic):
        with pytest.raises(ValidationError):
            single_disclination_clamped((2.0, 0.0), 1.0, (0.0, 0.0), 1.0, elastic)
        with pytest.raises(ValidationError):
            dislocation_limit_airy((0.0, 0.0), (0.0, 1.0), (0.0, 0.0), 1.0, elastic)
        with pytest.raises(ValidationError):
            dipole_derivative_airy((0.0, 0.0), 1.0, elastic)

    def test_dipole_wrapper_matches_class(self, elastic):
        val = dipole_airy((0.3, 0.1), 1.0, 0.02, elastic)
        ref = DipoleAiry(elastic=elastic, burgers_b=(0.0, 1.0), spacing_h=0.02)
        assert val == pytest.approx(ref.value(np.array([(0.3, 0.1)]))[0], rel=1e-14)

    def test_derivative_wrapper_triple(self, elastic):
        v, g, H = dipole_derivative_airy((0.3, 0.1), 1.0, elastic)
        ref = DipoleDerivativeAiry(elastic=elastic, burgers_b=(0.0, 1.0))
        p = np.array([(0.3, 0.1)])
        assert v == pytest.approx(ref.value(p)[0], rel=1e-14)
        assert np.allclose(g, ref.gradient(p)[0], atol=1e-14)
        assert np.allclose(H, ref.hessian(p)[0], atol=1e-14)

    def test_core_wrapper_matches_class(self, elastic):
        val = dislocation_core_airy((0.3, 0.1), (0.0, 1.0), (0.0, 0.0), 0.1, 1.0, elastic)
        ref = DislocationCoreAiry(
            elastic=elastic, burgers_b=(0.0, 1.0), eps=0.1, radius_R=1.0
        )
        assert val == pytest.approx(ref.value(np.array([(0.3, 0.1)]))[0], rel=1e-14)


class TestConstitutiveMaps:
    def test_airy_to_stress_layout(self):
        H = np.array([[[1.0, 2.0], [2.0, 3.0]]])
        s = airy_to_stress(H)
        assert s[0, 0, 0] == 3.0  # sigma_11 = v_yy
        assert s[0, 0, 1] == -2.0  # sigma_12 = -v_xy
        assert s[0, 1, 1] == 1.0  # sigma_22 = v_xx

    def test_round_trip(self, elastic, rng):
        a = rng.standard_normal((50, 2, 2))
        sym = 0.5 * (a + np.swapaxes(a, -1, -2))
        back = strain_to_stress(stress_to_strain(sym, elastic), elastic)
        assert np.allclose(back, sym, atol=1e-13)
