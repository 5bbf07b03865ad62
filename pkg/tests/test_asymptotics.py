import math

import numpy as np
import pytest

from airy_defects.core import (
    DisclinationDipole,
    Dislocation,
    DiskDomain,
    ElasticConstants,
    NumericalError,
    ValidationError,
)
from airy_defects.closedform import DislocationLimitAiry
from airy_defects.energy import polar_energy, single_dislocation_min_value
from airy_defects.asymptotics import (
    angular_quartic_integral,
    annulus_energy_closed_form,
    appendix_b_integrals,
    diagonal_dipole_limit,
    dipole_scaling_sweep,
    expansion_check,
    renormalized_energy,
    sweep_to_csv,
    vanishing_core_limit_constant,
)

SINGLE = [Dislocation((0.0, 0.0), (0.0, 1.0))]


class TestClosedForms:
    def test_annulus_formula_at_full_annulus(self, elastic):
        # r = R reduces the general annulus value to the simple form
        K = elastic.plane_prefactor
        for eps in (0.05, 0.1, 0.2):
            G, combined, f_eps = annulus_energy_closed_form(1.0, eps, 1.0, 1.0, elastic)
            simple = K / (8.0 * math.pi) * (
                math.log(1.0 / eps) - (1.0 - eps**2) / (1.0 + eps**2)
            )
            assert G == pytest.approx(simple, rel=1e-13)
            assert combined == pytest.approx(
                single_dislocation_min_value(elastic, 1.0, 1.0, eps), rel=1e-13
            )

    def test_quadrature_agrees_with_formula(self, elastic):
        from airy_defects.closedform import DislocationCoreAiry

        for eps in (0.1, 0.2):
            w = DislocationCoreAiry(
                elastic=elastic, burgers_b=(0.0, 1.0), eps=eps, radius_R=1.0
            )
            for r in (0.5, 1.0):
                G, _, _ = annulus_energy_closed_form(1.0, eps, r, 1.0, elastic)
                quadrature = polar_energy(
                    w, elastic, (0.0, 0.0), r, r_inner=eps
                ).energy
                assert quadrature == pytest.approx(G, rel=1e-8)

    def test_core_correction_vanishes_quadratically(self, elastic):
        f_limit = vanishing_core_limit_constant(0.5, 1.0, 1.0, elastic)
        gaps = []
        for eps in (1e-2, 1e-3):
            _, _, f_eps = annulus_energy_closed_form(1.0, eps, 0.5, 1.0, elastic)
            gaps.append(abs(f_eps - f_limit))
        ratio = gaps[0] / gaps[1]
        assert ratio == pytest.approx(100.0, rel=0.1)

    def test_angular_quartic_integral_exact(self):
        assert angular_quartic_integral() == pytest.approx(math.pi / 8.0, abs=1e-12)


class TestDipoleSweep:
    def test_rows_and_monotone_trend(self, elastic):
        rows = dipole_scaling_sweep(elastic, 1.0, 1.0, [1e-2, 3e-3, 1e-3])
        assert [set(r) >= {"param", "value", "normalized", "analytic_limit",
                           "rel_err"} for r in rows]
        normalized = [r["normalized"] for r in rows]
        assert normalized == sorted(normalized, reverse=True)
        K = elastic.plane_prefactor
        assert rows[-1]["analytic_limit"] == pytest.approx(K / (8.0 * math.pi))
        assert rows[-1]["rel_err"] < 0.10

    def test_increasing_h_rejected(self, elastic):
        with pytest.raises(ValidationError):
            dipole_scaling_sweep(elastic, 1.0, 1.0, [1e-3, 1e-2])

    def test_csv_header(self, elastic, tmp_path):
        rows = dipole_scaling_sweep(elastic, 1.0, 1.0, [1e-2, 3e-3])
        path = tmp_path / "sweep.csv"
        sweep_to_csv(rows, path)
        text = path.read_text().splitlines()
        assert text[0] == "param,value,normalized,analytic_limit,rel_err"
        assert len(text) == 3


class TestPairFieldIntegrals:
    def test_annulus_limits(self):
        res = appendix_b_integrals(1e-3, 1.0)
        limits = (4.0 * math.pi, math.pi / 8.0, math.pi / 2.0)
        for got, ref in zip(res["annulus_normalized"], limits):
            assert abs(got - ref) / ref < 0.05
        assert tuple(res["limits"]) == pytest.approx(limits)

    def test_ball_contributions_decay(self):
        # the core-ball share dies like 1/log(R/h): test the trend
        small = appendix_b_integrals(1e-3, 1.0)["ball_normalized"]
        large = appendix_b_integrals(1e-1, 1.0)["ball_normalized"]
        for s, l in zip(small, large):
            assert s < l


class TestRenormalizedEnergy:
    def test_centered_single_decomposition(self, elastic, unit_disk):
        ren = renormalized_energy(SINGLE, elastic, unit_disk, n=128)
        K = elastic.plane_prefactor
        assert ren.separation_D == pytest.approx(1.0)
        assert abs(ren.F_self) < 1e-12
        assert abs(ren.F_int) < 1e-12
        assert abs(ren.F_elastic) < 1e-10
        assert ren.expansion_constant == pytest.approx(K / (8.0 * math.pi), rel=1e-10)

    def test_self_plus_geometry_term_is_separation_invariant(self, elastic, unit_disk):
        # the self part and the geometric constant both move with the
        # separation radius; only their sum is an invariant of the defect
        a = renormalized_energy(SINGLE, elastic, unit_disk, D_override=1.0, n=128)
        b = renormalized_energy(SINGLE, elastic, unit_disk, D_override=0.5, n=128)
        assert abs(a.F_self - b.F_self) > 1e-4  # each part genuinely moves
        assert a.F_self + a.f_DR == pytest.approx(b.F_self + b.f_DR, abs=1e-10)

    def test_self_energy_against_quadrature(self, elastic, unit_disk):
        # boundary-pairing route vs direct annulus quadrature of the bulk
        D = 0.5
        ren = renormalized_energy(SINGLE, elastic, unit_disk, D_override=D, n=128)
        w = DislocationLimitAiry(elastic=elastic, burgers_b=(0.0, 1.0), radius_R=1.0)
        K = elastic.plane_prefactor
        bulk = polar_energy(w, elastic, (0.0, 0.0), 1.0, r_inner=D).energy
        assert ren.F_self == pytest.approx(
            bulk + K / (8.0 * math.pi) * math.log(D), abs=1e-9
        )

    def test_interaction_symmetry(self, elastic, unit_disk):
        pair = [
            Dislocation((0.3, 0.0), (0.0, 1.0)),
            Dislocation((-0.3, 0.0), (0.0, 1.0)),
        ]
        fwd = renormalized_energy(pair, elastic, unit_disk, n=128)
        rev = renormalized_energy(list(reversed(pair)), elastic, unit_disk, n=128)
        assert fwd.F_int == pytest.approx(rev.F_int, rel=1e-10)
        assert fwd.renormalized == pytest.approx(rev.renormalized, rel=1e-10)

    def test_to_dict(self, elastic, unit_disk):
        d = renormalized_energy(SINGLE, elastic, unit_disk, n=128).to_dict()
        for key in ("F_self", "F_int", "F_elastic", "f_DR", "renormalized",
                    "expansion_constant", "separation_D"):
            assert key in d


class TestExpansionFits:
    def test_single_dislocation_fit_structure(self, elastic, unit_disk):
        fit = expansion_check(
            SINGLE, elastic, unit_disk, [0.2, 0.1], n=128, fit_tail=2
        )
        K = elastic.plane_prefactor
        assert fit.analytic_slope == pytest.approx(-K / (8.0 * math.pi))
        assert fit.predicted_constant is not None
        d = fit.to_dict()
        assert "slope" in d and "constant" in d

    def test_solver_values_are_exact_closed_forms(self, elastic, unit_disk):
        fit = expansion_check(
            SINGLE, elastic, unit_disk, [0.2, 0.1], n=128, fit_tail=2
        )
        for eps, value in zip(fit.params, fit.values):
            ref = single_dislocation_min_value(elastic, 1.0, 1.0, eps)
            assert value == pytest.approx(ref, rel=1e-10)

    def test_diagonal_skips_unresolved_spacings(self, elastic, unit_disk):
        dipoles = [DisclinationDipole((0.0, 0.0), (0.0, 1.0), 1e-2)]
        # at n=64 the smallest core radii fall under the 4-cell gate
        with pytest.raises(NumericalError):
            diagonal_dipole_limit(
                dipoles, elastic, unit_disk, [4e-3, 1e-3, 2.5e-4], n=64
            )

    def test_diagonal_tracks_slope(self, elastic, unit_disk):
        dipoles = [DisclinationDipole((0.0, 0.0), (0.0, 1.0), 1e-2)]
        fit = diagonal_dipole_limit(
            dipoles, elastic, unit_disk, [1e-2, 2.5e-3], n=256, fit_tail=2
        )
        K = elastic.plane_prefactor
        rel = abs(abs(fit.slope) - K / (8.0 * math.pi)) / (K / (8.0 * math.pi))
        assert rel < 0.05
