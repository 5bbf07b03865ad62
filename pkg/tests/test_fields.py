import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from airy_defects.core import DiskDomain, NumericalError, ValidationError
from airy_defects.fields import (
    CORE,
    INTERIOR,
    OUTSIDE,
    Grid,
    ScalarField,
    SplineField,
    build_mask,
    circle_integral,
    circle_rect_area,
    disk_cell_fractions,
    fmt17,
    grid_for_disk,
    hessian_fd,
    integrate,
    region_weights,
)


class TestFmt17:
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_round_trip(self, x):
        assert float(fmt17(x)) == x

    def test_plain(self):
        assert fmt17(0.1) == "0.10000000000000001"


class TestGrid:
    def test_disk_coverage(self, unit_disk):
        g = grid_for_disk(unit_disk, 64)
        assert g.delta == pytest.approx(2.0 / 64)
        assert g.xs[0] < -1.0 and g.xs[-1] > 1.0
        assert g.nx == g.ny == 64 + 2 * 4 + 1

    def test_too_coarse(self, unit_disk):
        with pytest.raises(ValidationError):
            grid_for_disk(unit_disk, 4)

    def test_nearest_index(self, unit_disk):
        g = grid_for_disk(unit_disk, 64)
        i, j = g.nearest_index((0.0, 0.0))
        assert np.allclose(g.node(i, j), (0.0, 0.0), atol=1e-12)


class TestCutCells:
    def test_full_and_empty_cells(self):
        # cell far inside the circle
        assert circle_rect_area(0.0, 0.0, 1.0, 0.0, 0.1, 0.0, 0.1) == pytest.approx(
            0.01, rel=1e-12
        )
        assert circle_rect_area(0.0, 0.0, 1.0, 2.0, 2.1, 2.0, 2.1) == 0.0

    @pytest.mark.parametrize("n", [32, 64, 128])
    def test_disk_area_exact(self, unit_disk, n):
        g = grid_for_disk(unit_disk, n)
        frac = disk_cell_fractions(g, (0.0, 0.0), 1.0)
        area = frac.sum() * g.delta**2
        assert area == pytest.approx(math.pi, rel=1e-12)

    def test_annulus_weights(self, unit_disk):
        g = grid_for_disk(unit_disk, 64)
        w = region_weights(g, unit_disk, cores=(((0.0, 0.0), 0.25),))
        area = w.sum() * g.delta**2
        assert area == pytest.approx(math.pi * (1.0 - 0.25**2), rel=1e-12)


class TestMask:
    def test_codes(self, unit_disk):
        g = grid_for_disk(unit_disk, 64)
        m = build_mask(g, unit_disk, cores=(((0.0, 0.0), 0.25),))
        assert m[0, 0] == OUTSIDE
        ci, cj = g.nearest_index((0.0, 0.0))
        assert m[ci, cj] == CORE
        mi, mj = g.nearest_index((0.6, 0.0))
        assert m[mi, mj] == INTERIOR

    def test_unresolved_core_rejected(self, unit_disk):
        g = grid_for_disk(unit_disk, 64)
        with pytest.raises(ValidationError):
            build_mask(g, unit_disk, cores=(((0.0, 0.0), g.delta),))


def _quadratic_field(grid):
    def fn(p):
        return 1.0 + 2.0 * p[:, 0] - p[:, 1] + 0.5 * p[:, 0] ** 2 \
            + 0.25 * p[:, 0] * p[:, 1] - 1.5 * p[:, 1] ** 2
    return ScalarField.sample(fn, grid)


class TestScalarField:
    def test_fd_exact_on_quadratics(self, unit_disk):
        sf = _quadratic_field(grid_for_disk(unit_disk, 32))
        vxx, vxy, vyy, ok = sf.hessian_fd()
        assert np.allclose(vxx[ok], 1.0, atol=1e-10)
        assert np.allclose(vxy[ok], 0.25, atol=1e-10)
        assert np.allclose(vyy[ok], -3.0, atol=1e-10)
        lap, ok = sf.laplacian_fd()
        assert np.allclose(lap[ok], -2.0, atol=1e-10)

    def test_shape_gate(self, unit_disk):
        g = grid_for_disk(unit_disk, 32)
        with pytest.raises(ValidationError):
            ScalarField(grid=g, values=np.zeros((3, 3)), mask=np.zeros((3, 3)))

    def test_immutability(self, unit_disk):
        sf = _quadratic_field(grid_for_disk(unit_disk, 32))
        with pytest.raises(ValueError):
            sf.values[0, 0] = 1.0


class TestModuleHessian:
    def test_masks_follow_stencils(self, unit_disk):
        g = grid_for_disk(unit_disk, 32)
        mask = build_mask(g, unit_disk)
        sf = ScalarField.sample(lambda p: p[:, 0] ** 2, g, mask)
        vxx, vxy, vyy = hessian_fd(sf)
        inner = vxx.mask != OUTSIDE
        assert inner.sum() > 0
        assert np.allclose(vxx.values[inner], 2.0, atol=1e-10)
        # flagged nodes never carry NaN payloads into quadrature
        assert integrate(vxx) == pytest.approx(
            2.0 * inner.sum() * g.delta**2, rel=1e-12
        )

    def test_pinhole_mask_rejected(self, unit_disk):
        g = grid_for_disk(unit_disk, 32)
        mask = build_mask(g, unit_disk).copy()
        ci, cj = g.nearest_index((0.0, 0.0))
        hole = np.array(mask)
        hole[ci - 1 : ci + 2, cj - 1 : cj + 2] = OUTSIDE
        hole[ci, cj] = INTERIOR  # an island with no usable stencil
        sf = ScalarField(grid=g, values=np.zeros((g.nx, g.ny)), mask=hole)
        with pytest.raises(NumericalError, match="too coarse"):
            hessian_fd(sf)


class TestSplineField:
    def test_matches_smooth_function(self, unit_disk):
        g = grid_for_disk(unit_disk, 128)

        def fn(p):
            return np.sin(p[:, 0]) * np.cos(p[:, 1])

        spline = SplineField(ScalarField.sample(fn, g))
        pts = np.array([[0.1, 0.2], [-0.5, 0.3], [0.7, -0.6]])
        assert np.allclose(spline.value(pts), fn(pts), atol=1e-7)
        gx = np.cos(pts[:, 0]) * np.cos(pts[:, 1])
        assert np.allclose(spline.gradient(pts)[:, 0], gx, atol=1e-4)
        lap = -2.0 * fn(pts)
        assert np.allclose(spline.laplacian(pts), lap, atol=1e-2)

    def test_single_point_shape(self, unit_disk):
        g = grid_for_disk(unit_disk, 32)
        spline = SplineField(_quadratic_field(g))
        assert spline.value((0.0, 0.0)).shape == (1,)
        assert spline.hessian((0.0, 0.0)).shape == (1, 2, 2)


class TestIntegrate:
    def test_array_needs_weights(self):
        with pytest.raises(ValidationError):
            integrate(np.ones((4, 4)))

    def test_field_overload(self, unit_disk):
        g = grid_for_disk(unit_disk, 64)
        mask = build_mask(g, unit_disk)
        sf = ScalarField.sample(lambda p: np.ones(p.shape[0]), g, mask)
        w = region_weights(g, unit_disk)
        # cut cells make the weighted version exactly the disk area
        assert integrate(sf.values, w, g.delta) == pytest.approx(math.pi, rel=1e-12)
        # the mask-only overload counts whole cells, close at this n
        assert integrate(sf) == pytest.approx(math.pi, rel=0.05)

    def test_nan_under_zero_weight_ignored(self):
        v = np.array([[1.0, np.nan], [2.0, 3.0]])
        w = np.array([[1.0, 0.0], [1.0, 1.0]])
        assert integrate(v, w, 1.0) == pytest.approx(6.0)


class TestCircleIntegral:
    def test_constant_and_harmonics(self):
        assert circle_integral(
            lambda p: np.ones(p.shape[0]), (0.0, 0.0), 2.0
        ) == pytest.approx(4.0 * math.pi, rel=1e-13)
        assert circle_integral(
            lambda p: p[:, 0], (0.0, 0.0), 1.0
        ) == pytest.approx(0.0, abs=1e-13)
        # x^2 on the unit circle integrates to pi r^3
        assert circle_integral(
            lambda p: p[:, 0] ** 2, (0.0, 0.0), 1.0
        ) == pytest.approx(math.pi, rel=1e-13)

    def test_gates(self):
        with pytest.raises(ValidationError):
            circle_integral(lambda p: 0.0, (0.0, 0.0), -1.0)
        with pytest.raises(ValidationError):
            circle_integral(lambda p: 0.0, (0.0, 0.0), 1.0, n_quad=4)
