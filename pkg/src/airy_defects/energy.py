"""Elastic energy functionals built from Airy potentials.

The quadratic form is
``G(v) = (1 + nu)/(2E) * integral(|hess v|^2 - nu (lap v)^2)``; for
globally clamped fields it collapses to the Laplacian-only form
``(1 - nu^2)/(2E) * integral (lap v)^2``. Defect functionals add point
loads (disclinations), core-circle gradient loads (dislocations) or
finite-difference pair loads (dipoles).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import (
    DefectConfiguration,
    DiskDomain,
    ElasticConstants,
    NumericalError,
    ValidationError,
    rotate_burgers,
)
from .fields import (
    OUTSIDE,
    ScalarField,
    SplineField,
    TensorField,
    circle_integral,
    grid_for_disk,
    integrate,
    region_weights,
)


# ---------------------------------------------------------------------------
# pointwise densities
# ---------------------------------------------------------------------------


def energy_density(hessian: np.ndarray, elastic: ElasticConstants) -> np.ndarray:
    """(1 + nu)/(2E) (|hess|^2 - nu (tr hess)^2) for (..., 2, 2) input."""
    H = np.asarray(hessian, dtype=float)
    nu, E = elastic.poisson_nu, elastic.young_E
    norm_sq = (H**2).sum(axis=(-2, -1))
    tr = H[..., 0, 0] + H[..., 1, 1]
    return (1.0 + nu) / (2.0 * E) * (norm_sq - nu * tr**2)


def clamped_energy_density(laplacian: np.ndarray, elastic: ElasticConstants) -> np.ndarray:
    """(1 - nu^2)/(2E) (lap v)^2; equals the full density only after
    integration over a domain where v is globally clamped."""
    nu, E = elastic.poisson_nu, elastic.young_E
    lap = np.asarray(laplacian, dtype=float)
    return (1.0 - nu**2) / (2.0 * E) * lap**2


def strain_energy_density(strain: np.ndarray, elastic: ElasticConstants) -> np.ndarray:
    """(1/2)(lambda tr(eps)^2 + 2 mu |eps|^2)."""
    e = np.asarray(strain, dtype=float)
    lam, mu = elastic.lame_lambda, elastic.lame_mu
    tr = e[..., 0, 0] + e[..., 1, 1]
    return 0.5 * (lam * tr**2 + 2.0 * mu * (e**2).sum(axis=(-2, -1)))


def stress_energy_density(stress: np.ndarray, elastic: ElasticConstants) -> np.ndarray:
    """(1 + nu)/(2E) (|sigma|^2 - nu (tr sigma)^2); coincides with the
    strain form under the plane Hooke law."""
    S = np.asarray(stress, dtype=float)
    nu, E = elastic.poisson_nu, elastic.young_E
    tr = S[..., 0, 0] + S[..., 1, 1]
    return (1.0 + nu) / (2.0 * E) * ((S**2).sum(axis=(-2, -1)) - nu * tr**2)


def inner_product_density(h1: np.ndarray, h2: np.ndarray,
                          elastic: ElasticConstants) -> np.ndarray:
    """Polarization of the energy density: (1 + nu)/E (<H1, H2> - nu tr H1 tr H2)."""
    H1 = np.asarray(h1, dtype=float)
    H2 = np.asarray(h2, dtype=float)
    nu, E = elastic.poisson_nu, elastic.young_E
    dot = (H1 * H2).sum(axis=(-2, -1))
    tr1 = H1[..., 0, 0] + H1[..., 1, 1]
    tr2 = H2[..., 0, 0] + H2[..., 1, 1]
    return (1.0 + nu) / E * (dot - nu * tr1 * tr2)


# ---------------------------------------------------------------------------
# integrated energies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticTerms:
    """Integrated |hessian|^2 and |laplacian|^2 of one field, with the
    elastic constants needed to turn them into energies."""

    hessian_sq: float
    laplacian_sq: float
    elastic_constants: ElasticConstants

    @property
    def energy(self) -> float:
        nu, E = self.elastic_constants.poisson_nu, self.elastic_constants.young_E
        return (1.0 + nu) / (2.0 * E) * (self.hessian_sq - nu * self.laplacian_sq)

    @property
    def clamped_energy(self) -> float:
        """(1 - nu^2)/(2E) times the Laplacian square; equals ``energy``
        only for globally clamped fields."""
        nu, E = self.elastic_constants.poisson_nu, self.elastic_constants.young_E
        return (1.0 - nu**2) / (2.0 * E) * self.laplacian_sq

    def to_dict(self) -> dict:
        return {
            "hessian_sq": self.hessian_sq,
            "laplacian_sq": self.laplacian_sq,
            "energy": self.energy,
            "clamped_energy": self.clamped_energy,
        }


def grid_energy(field, grid, weights: np.ndarray,
                elastic: ElasticConstants) -> QuadraticTerms:
    """Cell-wise quadrature of the energy from analytic Hessians."""
    pts = grid.points()
    w = np.asarray(weights, dtype=float).ravel()
    live = w > 0.0
    H = np.zeros((pts.shape[0], 2, 2))
    H[live] = field.hessian(pts[live])
    norm_sq = (H**2).sum(axis=(1, 2)).reshape(weights.shape)
    tr_sq = ((H[:, 0, 0] + H[:, 1, 1]) ** 2).reshape(weights.shape)
    return QuadraticTerms(
        hessian_sq=integrate(norm_sq, weights, grid.delta),
        laplacian_sq=integrate(tr_sq, weights, grid.delta),
        elastic_constants=elastic,
    )


def grid_energy_fd(sf: ScalarField, weights: np.ndarray,
                   elastic: ElasticConstants) -> QuadraticTerms:
    """Cell-wise quadrature of the energy from central-difference Hessians.

    Every node carrying quadrature weight must own a full stencil.
    """
    vxx, vxy, vyy, ok = sf.hessian_fd()
    w = np.asarray(weights, dtype=float)
    if np.any((w > 0.0) & ~ok):
        raise NumericalError(
            "quadrature region touches nodes without a difference stencil"
        )
    norm_sq = np.where(ok, vxx**2 + 2.0 * vxy**2 + vyy**2, 0.0)
    tr_sq = np.where(ok, (vxx + vyy) ** 2, 0.0)
    return QuadraticTerms(
        hessian_sq=integrate(norm_sq, w, sf.grid.delta),
        laplacian_sq=integrate(tr_sq, w, sf.grid.delta),
        elastic_constants=elastic,
    )


def polar_energy(field, elastic: ElasticConstants, center,
                 r_outer: float, r_inner: float = 0.0,
                 n_theta: int = 256) -> QuadraticTerms:
    """Adaptive radial quadrature of angular averages on an annulus.

    Exact in the angle for trigonometric integrands of degree below
    ``n_theta``; the radial profile is handled by adaptive quadrature,
    which resolves the log/power singularities of the defect potentials.
    """
    if not (0.0 <= r_inner < r_outer):
        raise ValidationError(
            f"need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}"
        )
    c = np.asarray(center, dtype=float)
    th = 2.0 * math.pi * np.arange(n_theta) / n_theta
    ring = np.stack([np.cos(th), np.sin(th)], axis=-1)

    def ring_means(r: float) -> tuple[float, float]:
        H = field.hessian(c + r * ring)
        norm_sq = float(np.mean((H**2).sum(axis=(1, 2))))
        tr_sq = float(np.mean((H[:, 0, 0] + H[:, 1, 1]) ** 2))
        return norm_sq, tr_sq

    def f_norm(r):
        return ring_means(r)[0] * 2.0 * math.pi * r

    def f_tr(r):
        return ring_means(r)[1] * 2.0 * math.pi * r

    hess_sq, _ = quad(f_norm, r_inner, r_outer, limit=200)
    lap_sq, _ = quad(f_tr, r_inner, r_outer, limit=200)
    return QuadraticTerms(
        hessian_sq=hess_sq, laplacian_sq=lap_sq, elastic_constants=elastic
    )


def grid_inner_product(f1, f2, grid, weights: np.ndarray,
                       elastic: ElasticConstants) -> float:
    """Energy bilinear form of two analytic fields over a weighted grid."""
    pts = grid.points()
    w = np.asarray(weights, dtype=float).ravel()
    live = w > 0.0
    d = np.zeros(pts.shape[0])
    d[live] = inner_product_density(f1.hessian(pts[live]), f2.hessian(pts[live]), elastic)
    return integrate(d.reshape(weights.shape), weights, grid.delta)


# ---------------------------------------------------------------------------
# defect loads
# ---------------------------------------------------------------------------


def core_gradient_load(field, site, burgers_b, eps: float,
                       n_quad: int = 256) -> float:
    """(1 / 2 pi eps) integral over the core circle of <grad w, Pi(b)>."""
    Pi = rotate_burgers(burgers_b)

    def integrand(pts):
        return field.gradient(pts) @ Pi

    return circle_integral(integrand, site, eps, n_quad) / (2.0 * math.pi * eps)


def dipole_pair_load(field, site, burgers_b, eps: float, h: float,
                     n_quad: int = 256) -> float:
    """Finite-h dipole load: |b| times the circle average over radius
    eps - h of the symmetric difference quotient along Pi(b)/|b|."""
    b = np.asarray(burgers_b, dtype=float)
    nb = float(np.hypot(b[0], b[1]))
    if not (0.0 < h < eps):
        raise ValidationError(f"need 0 < h < eps, got h={h}, eps={eps}")
    axis = rotate_burgers(b) / nb
    shift = 0.5 * h * axis

    def integrand(pts):
        return (field.value(pts + shift) - field.value(pts - shift)) / h

    r = eps - h
    return nb * circle_integral(integrand, site, r, n_quad) / (2.0 * math.pi * r)


def affine_core_defect(field, site, eps: float, n_sample: int = 64) -> float:
    """Max |hess w| over the open core ball: certifies membership in the
    affine-core admissible class (should be ~0 for admissible fields)."""
    rng_r = np.sqrt(np.linspace(0.0, 0.9, n_sample)) * eps
    th = np.linspace(0.0, 2.0 * math.pi, n_sample, endpoint=False)
    Rg, Tg = np.meshgrid(rng_r, th, indexing="ij")
    pts = np.stack(
        [site[0] + Rg.ravel() * np.cos(Tg.ravel()),
         site[1] + Rg.ravel() * np.sin(Tg.ravel())], axis=-1
    )
    H = field.hessian(pts)
    if not np.all(np.isfinite(H)):
        return math.inf
    return float(np.abs(H).max())


# ---------------------------------------------------------------------------
# defect functionals
# ---------------------------------------------------------------------------


def disclination_functional(field, elastic: ElasticConstants,
                            domain: DiskDomain, disclinations,
                            n_theta: int = 256) -> float:
    """G(v; B_R) + sum of s_k v(y_k) for analytic fields."""
    G = polar_energy(field, elastic, domain.center, domain.radius_R,
                     n_theta=n_theta).energy
    load = 0.0
    for d in disclinations:
        load += d.frank_angle_s * float(field.value(np.asarray(d.site))[0])
    return G + load


def dislocation_core_functional(field, elastic: ElasticConstants,
                                domain: DiskDomain, burgers_b, eps: float,
                                site=None, n_quad: int = 256) -> float:
    """G(w; annulus) + core gradient load, for a single centered core."""
    if site is None:
        site = domain.center
    G = polar_energy(field, elastic, site, domain.radius_R, r_inner=eps).energy
    return G + core_gradient_load(field, site, burgers_b, eps, n_quad)


def dipole_core_functional(field, elastic: ElasticConstants,
                           domain: DiskDomain, burgers_b, eps: float,
                           h: float, site=None, n_quad: int = 256) -> float:
    """G(w; B_R) + finite-h pair load, for a single centered core.

    On the affine-core class the bulk integral over the core ball
    vanishes, so G is taken over the annulus as well.
    """
    if site is None:
        site = domain.center
    G = polar_energy(field, elastic, site, domain.radius_R, r_inner=eps).energy
    return G + dipole_pair_load(field, site, burgers_b, eps, h, n_quad)


def system_core_loads(field, config: DefectConfiguration,
                      n_quad: int = 256) -> float:
    """Sum of core gradient loads over all dislocations of a configuration."""
    if config.core_radius is None:
        raise ValidationError("configuration has no core radius")
    total = 0.0
    for d in config.dislocations:
        total += core_gradient_load(field, d.site, d.burgers_b,
                                    config.core_radius, n_quad)
    return total


def single_dislocation_min_value(elastic: ElasticConstants, radius_R: float,
                                 magnitude: float, eps: float) -> float:
    """Minimal core functional value for one centered dislocation:
    -(|b|^2 / 8 pi) K (log(R/eps) - (R^2 - eps^2)/(R^2 + eps^2))."""
    if not (0.0 < eps < radius_R):
        raise ValidationError(f"need 0 < eps < R, got eps={eps}, R={radius_R}")
    K = elastic.plane_prefactor
    g = (radius_R**2 - eps**2) / (radius_R**2 + eps**2)
    return -(magnitude**2 / (8.0 * math.pi)) * K * (math.log(radius_R / eps) - g)


# ---------------------------------------------------------------------------
# defect-functional reports and grid/closed-form dispatch
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBreakdown:
    """Bulk energy plus defect charge/load term of one functional value."""

    bulk_G: float
    charge_term: float
    region: str

    def __post_init__(self) -> None:
        if self.bulk_G < -1e-12 * max(1.0, abs(self.charge_term)):
            raise NumericalError(f"bulk energy came out negative: {self.bulk_G}")

    @property
    def total(self) -> float:
        return self.bulk_G + self.charge_term

    def to_dict(self, grid: dict | None = None) -> dict:
        doc = {
            "bulk_G": self.bulk_G,
            "charge": self.charge_term,
            "total": self.total,
            "region": self.region,
        }
        if grid is not None:
            doc["grid"] = dict(grid)
        return doc


def as_airy(w):
    """Closed forms pass through; grid fields get their bicubic view."""
    if isinstance(w, ScalarField):
        return SplineField(w)
    return w


def _fd_hessian_raw(v: ScalarField):
    """Raw central differences over the whole array (NaN on the rim).

    Unlike :meth:`ScalarField.hessian_fd` this reads values at masked-out
    nodes; solver outputs carry ghost values there, which is exactly what
    boundary-adjacent cells need.
    """
    a = v.values
    h = v.grid.delta
    vxx = np.full_like(a, np.nan)
    vyy = np.full_like(a, np.nan)
    vxy = np.full_like(a, np.nan)
    vxx[1:-1, :] = (a[2:, :] - 2.0 * a[1:-1, :] + a[:-2, :]) / h**2
    vyy[:, 1:-1] = (a[:, 2:] - 2.0 * a[:, 1:-1] + a[:, :-2]) / h**2
    vxy[1:-1, 1:-1] = (a[2:, 2:] - a[2:, :-2] - a[:-2, 2:] + a[:-2, :-2]) / (4.0 * h**2)
    return vxx, vxy, vyy


def _grid_bulk_G(v: ScalarField, elastic: ElasticConstants,
                 weights: np.ndarray) -> float:
    vxx, vxy, vyy = _fd_hessian_raw(v)
    w = np.asarray(weights, dtype=float)
    live = w > 0.0
    if np.any(~np.isfinite(vxx[live])) or np.any(~np.isfinite(vxy[live])) \
            or np.any(~np.isfinite(vyy[live])):
        raise NumericalError("quadrature region touches the array rim")
    nu, E = elastic.poisson_nu, elastic.young_E
    dens = np.zeros_like(w)
    dens[live] = (1.0 + nu) / (2.0 * E) * (
        vxx[live] ** 2 + 2.0 * vxy[live] ** 2 + vyy[live] ** 2
        - nu * (vxx[live] + vyy[live]) ** 2
    )
    return integrate(dens, w, v.grid.delta)


def _default_weights(v: ScalarField, region) -> np.ndarray:
    if region is None:
        return (v.mask != OUTSIDE).astype(float)
    return np.asarray(region, dtype=float)


def airy_energy_G(v: ScalarField, elastic: ElasticConstants,
                  region=None) -> float:
    """G(v) = (1/2)((1+nu)/E) integral(|hess v|^2 - nu (lap v)^2) >= 0.

    ``region`` is a per-node quadrature weight array (cut-cell fractions);
    by default every unmasked node carries a full cell.
    """
    if not isinstance(v, ScalarField):
        raise ValidationError("airy_energy_G expects a grid field")
    return _grid_bulk_G(v, elastic, _default_weights(v, region))


def airy_inner_product(v: ScalarField, w: ScalarField,
                       elastic: ElasticConstants, region=None) -> float:
    """Polarization of G: <v, v> equals G(v)."""
    if v.grid != w.grid:
        raise ValidationError("fields live on different grids")
    wts = _default_weights(v, region)
    vh = _fd_hessian_raw(v)
    wh = _fd_hessian_raw(w)
    nu, E = elastic.poisson_nu, elastic.young_E
    live = wts > 0.0
    dens = np.zeros_like(wts)
    dot = vh[0][live] * wh[0][live] + 2.0 * vh[1][live] * wh[1][live] \
        + vh[2][live] * wh[2][live]
    tr = (vh[0][live] + vh[2][live]) * (wh[0][live] + wh[2][live])
    dens[live] = (1.0 + nu) / (2.0 * E) * (dot - nu * tr)
    if np.any(~np.isfinite(dens[live])):
        raise NumericalError("quadrature region touches the array rim")
    return integrate(dens, wts, v.grid.delta)


def strain_energy(eps: TensorField, elastic: ElasticConstants,
                  region=None) -> float:
    """(1/2) integral(lambda tr(eps)^2 + 2 mu |eps|^2)."""
    lam, mu = elastic.lame_lambda, elastic.lame_mu
    dens = 0.5 * (lam * eps.trace() ** 2 + 2.0 * mu * eps.norm_sq())
    w = np.ones_like(dens) if region is None else np.asarray(region, dtype=float)
    return integrate(dens, w, eps.grid.delta)


def stress_energy(sigma: TensorField, elastic: ElasticConstants,
                  region=None) -> float:
    """(1/2)((1+nu)/E) integral(|sigma|^2 - nu tr(sigma)^2)."""
    nu, E = elastic.poisson_nu, elastic.young_E
    dens = (1.0 + nu) / (2.0 * E) * (sigma.norm_sq() - nu * sigma.trace() ** 2)
    w = np.ones_like(dens) if region is None else np.asarray(region, dtype=float)
    return integrate(dens, w, sigma.grid.delta)


def disclination_functional_I(v, disclinations, elastic: ElasticConstants,
                              region=None, domain: DiskDomain | None = None,
                              ) -> EnergyBreakdown:
    """I(v) = G(v) + sum_k s_k v(y_k), for grid fields or closed forms."""
    if isinstance(v, ScalarField):
        bulk = airy_energy_G(v, elastic, region)
        charge = 0.0
        for d in disclinations:
            i, j = v.grid.nearest_index(d.site)
            if not (0 <= i < v.grid.nx and 0 <= j < v.grid.ny) \
                    or v.mask[i, j] == OUTSIDE:
                raise ValidationError(f"disclination site {d.site} under a mask hole")
            charge += d.frank_angle_s * v.bilinear(np.asarray(d.site))
        region_name = "grid"
    else:
        if domain is None:
            raise ValidationError("closed-form input needs an explicit domain")
        bulk = polar_energy(v, elastic, domain.center, domain.radius_R).energy
        charge = sum(
            d.frank_angle_s * float(v.value(np.asarray(d.site))[0])
            for d in disclinations
        )
        region_name = f"disk R={domain.radius_R}"
    return EnergyBreakdown(bulk_G=bulk, charge_term=charge, region=region_name)


AFFINE_CORE_TOL = 1e-8


def _require_affine_core(field, site, eps: float) -> None:
    defect = affine_core_defect(field, site, eps)
    if defect > AFFINE_CORE_TOL:
        raise ValidationError(
            f"field is not affine on the core ball (max |hess| = {defect})"
        )


def _core_bulk_G(w, elastic: ElasticConstants, site, eps: float, R: float,
                 n_quad: int = 256) -> float:
    """Bulk energy of a single-core field over the annulus A_{eps,R}(site)."""
    if isinstance(w, ScalarField):
        domain = DiskDomain(center=tuple(np.asarray(site, dtype=float)), radius_R=R)
        wts = region_weights(w.grid, domain, cores=((site, eps),))
        return _grid_bulk_G(w, elastic, wts)
    return polar_energy(w, elastic, site, R, r_inner=eps,
                        n_theta=n_quad).energy


def dipole_core_functional_J(w, s: float, h: float, eps: float, R: float,
                             elastic: ElasticConstants, site=(0.0, 0.0),
                             n_quad: int = 256) -> float:
    """Finite-spacing pair functional on the affine-core class.

    Canonical axis e_1 (charge split along e_1, target Burgers vector
    s e_2); the circle term averages the symmetric difference quotient
    over the shrunken circle of radius eps - h.
    """
    if not (0.0 < h < eps):
        raise ValidationError(f"need 0 < h < eps, got h={h}, eps={eps}")
    if not (eps < R):
        raise ValidationError(f"need eps < R, got eps={eps}, R={R}")
    field = as_airy(w)
    _require_affine_core(field, site, eps)
    G = _core_bulk_G(w, elastic, site, eps, R, n_quad)
    return G + dipole_pair_load(field, site, (0.0, s), eps, h, n_quad)


def dislocation_core_functional_J0(w, s: float, eps: float, R: float,
                                   elastic: ElasticConstants,
                                   site=(0.0, 0.0), n_quad: int = 256) -> float:
    """Zero-spacing core functional: annulus energy plus the x_1-slope load."""
    if not (0.0 < eps < R):
        raise ValidationError(f"need 0 < eps < R, got eps={eps}, R={R}")
    field = as_airy(w)
    _require_affine_core(field, site, eps)
    G = _core_bulk_G(w, elastic, site, eps, R, n_quad)
    return G + core_gradient_load(field, site, (0.0, s), eps, n_quad)


def _system_bulk_G(w, elastic: ElasticConstants, domain: DiskDomain, cores,
                   n: int = 256) -> float:
    if isinstance(w, ScalarField):
        wts = region_weights(w.grid, domain, cores=cores)
        return _grid_bulk_G(w, elastic, wts)
    grid = grid_for_disk(domain, n)
    wts = region_weights(grid, domain, cores=cores)
    return grid_energy(w, grid, wts, elastic).energy


def system_functional_I0(w, dislocations, eps: float,
                         elastic: ElasticConstants, domain: DiskDomain,
                         n: int = 256, n_quad: int = 256) -> float:
    """Multi-core functional: bulk over the punctured disk plus per-core
    rotated-gradient loads."""
    dislocations = list(dislocations)
    if not dislocations:
        raise ValidationError("need at least one dislocation")
    from .core import min_separation_D

    D = min_separation_D([d.site for d in dislocations], domain)
    if not (0.0 < eps < D):
        raise ValidationError(
            f"cores overlap or touch the boundary: eps={eps}, D={D}"
        )
    field = as_airy(w)
    cores = tuple((d.site, eps) for d in dislocations)
    G = _system_bulk_G(w, elastic, domain, cores, n)
    load = sum(
        core_gradient_load(field, d.site, d.burgers_b, eps, n_quad)
        for d in dislocations
    )
    return G + load


def dipole_system_functional(w, dipoles, eps: float,
                             elastic: ElasticConstants, domain: DiskDomain,
                             n: int = 256, n_quad: int = 256) -> float:
    """Finite-spacing system functional: bulk over the punctured disk plus
    per-dipole difference-quotient loads on shrunken core circles."""
    dipoles = list(dipoles)
    if not dipoles:
        raise ValidationError("need at least one dipole")
    from .core import min_separation_D

    D = min_separation_D([d.center for d in dipoles], domain)
    if not (0.0 < eps < D):
        raise ValidationError(
            f"cores overlap or touch the boundary: eps={eps}, D={D}"
        )
    for dip in dipoles:
        if not (0.0 < dip.spacing_h < eps):
            raise ValidationError(
                f"need 0 < h < eps, got h={dip.spacing_h}, eps={eps}"
            )
    field = as_airy(w)
    cores = tuple((dip.center, eps) for dip in dipoles)
    G = _system_bulk_G(w, elastic, domain, cores, n)
    load = sum(
        dipole_pair_load(field, dip.center, dip.burgers_b, eps, dip.spacing_h,
                         n_quad)
        for dip in dipoles
    )
    return G + load
