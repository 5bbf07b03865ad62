"""Scaling-law sweeps, annulus closed forms and the renormalized energy.

Sweeps drive the closed-form quadratures and the sparse solver over
decreasing spacing/core-radius samples and fit the leading |log eps|
expansion; the renormalized-energy decomposition provides the constant
term the fits are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .core import (
    DiskDomain,
    Disclination,
    Dislocation,
    ElasticConstants,
    NumericalError,
    ValidationError,
    min_separation_D,
)
from .closedform import DipoleAiry, DislocationLimitAiry
from .energy import energy_density
from .fields import fmt17
from .solver import (
    SolveReport,
    solve_clamped_disclination,
    solve_core_constrained,
    solve_dipole_core,
    solve_elastic_correction,
)


# ---------------------------------------------------------------------------
# expansion fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionFit:
    """Least-squares fit of functional values against |log eps|."""

    param_name: str
    params: tuple
    values: tuple
    slope: float
    constant: float
    slope_stderr: float
    constant_stderr: float
    residual: float
    analytic_slope: float
    predicted_constant: float | None = None
    skipped: tuple = ()

    def to_dict(self) -> dict:
        doc = {
            "param": self.param_name,
            "samples": [
                {self.param_name: p, "value": v}
                for p, v in zip(self.params, self.values)
            ],
            "slope": self.slope,
            "constant": self.constant,
            "slope_stderr": self.slope_stderr,
            "constant_stderr": self.constant_stderr,
            "residual": self.residual,
            "analytic_slope": self.analytic_slope,
        }
        if self.predicted_constant is not None:
            doc["predicted_constant"] = self.predicted_constant
        if self.skipped:
            doc["skipped"] = list(self.skipped)
        return doc


def _fit_log_expansion(eps_values, values, fit_tail: int):
    """LS fit value = slope * |log eps| + constant on the tail samples."""
    if len(eps_values) < 2:
        raise ValidationError("need at least two samples to fit")
    k = min(fit_tail, len(eps_values)) if fit_tail > 0 else len(eps_values)
    x = np.abs(np.log(np.asarray(eps_values[-k:], dtype=float)))
    y = np.asarray(values[-k:], dtype=float)
    A = np.stack([x, np.ones_like(x)], axis=-1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    residual = float(np.sqrt(np.sum(r**2)))
    dof = max(len(x) - 2, 1)
    cov = np.linalg.inv(A.T @ A) * (np.sum(r**2) / dof)
    return (
        float(coef[0]),
        float(coef[1]),
        float(np.sqrt(cov[0, 0])),
        float(np.sqrt(cov[1, 1])),
        residual,
    )


def _check_decreasing(seq, name: str) -> list[float]:
    vals = [float(v) for v in seq]
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise ValidationError(f"{name} list must be strictly decreasing: {vals}")
    return vals


# ---------------------------------------------------------------------------
# dipole spacing sweep (closed-form quadrature, optional solver column)
# ---------------------------------------------------------------------------


def _dipole_energy_quadrature(elastic: ElasticConstants, s: float, R: float,
                              h: float, r_inner: float = 0.0,
                              n_theta: int = 512) -> float:
    """Bulk energy of the finite-spacing pair field over an annulus.

    Radial adaptive quadrature of angular ring means; the pole radius
    h/2 is passed as an explicit singular point (the angular mean has an
    integrable log^2 spike there).
    """
    field = DipoleAiry(elastic=elastic, burgers_b=(0.0, s), spacing_h=h)
    th = 2.0 * math.pi * np.arange(n_theta) / n_theta
    ring = np.stack([np.cos(th), np.sin(th)], axis=-1)

    def shell(r: float) -> float:
        dens = energy_density(field.hessian(r * ring), elastic)
        return float(np.mean(dens)) * 2.0 * math.pi * r

    pts = sorted({0.5 * h, h, min(10.0 * h, 0.5 * (r_inner + R) + 0.25 * R)})
    pts = [p for p in pts if r_inner < p < R]
    val, err = quad(shell, r_inner, R, points=pts, limit=400)
    if not math.isfinite(val) or err > 1e-6 * max(abs(val), 1.0):
        raise NumericalError(f"spacing-sweep quadrature did not converge: {err}")
    return val


def dipole_scaling_sweep(elastic: ElasticConstants, s: float, R: float,
                         h_list, include_solver: bool = False, n: int = 256,
                         solver: str = "direct", tol: float = 1e-10,
                         n_theta: int = 512) -> list[dict]:
    """Normalized pair-field energies over decreasing spacings.

    Each row reports G(pair field; B_R) / (h^2 log(R/h)) against its
    limit K s^2 / (8 pi); with ``include_solver`` the minimizer value of
    the two-charge functional is added, normalized by h^2 |log h|
    against -K s^2 / (8 pi). Spacings unresolved by the solver grid
    (h < 4 delta) get a flagged row without a solver value.
    """
    h_values = _check_decreasing(h_list, "spacing")
    if any(not (0.0 < h < R) for h in h_values):
        raise ValidationError(f"spacings must lie in (0, R): {h_values}")
    K = elastic.plane_prefactor
    limit = K * s**2 / (8.0 * math.pi)
    rows = []
    for h in h_values:
        if s == 0.0:
            G = 0.0
            normalized = 0.0
        else:
            G = _dipole_energy_quadrature(elastic, s, R, h, n_theta=n_theta)
            normalized = G / (h**2 * math.log(R / h))
        row = {
            "param": h,
            "value": G,
            "normalized": normalized,
            "analytic_limit": limit,
            "rel_err": abs(normalized - limit) / abs(limit) if limit else 0.0,
        }
        if include_solver:
            domain = DiskDomain(center=(0.0, 0.0), radius_R=R)
            delta = 2.0 * R / n
            if h < 4.0 * delta:
                row["solver_skipped"] = True
            else:
                charges = [
                    Disclination(site=(0.5 * h, 0.0), frank_angle_s=s),
                    Disclination(site=(-0.5 * h, 0.0), frank_angle_s=-s),
                ]
                rep = solve_clamped_disclination(elastic, domain, charges, n,
                                                 solver, tol)
                row["solver_value"] = rep.value
                row["solver_normalized"] = rep.value / (h**2 * abs(math.log(h)))
                row["solver_limit"] = -limit
        rows.append(row)
    return rows


def sweep_to_csv(rows, path) -> None:
    """CSV dump `param,value,normalized,analytic_limit,rel_err`."""
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("param,value,normalized,analytic_limit,rel_err\n")
        for row in rows:
            f.write(
                ",".join(
                    fmt17(row[k])
                    for k in ("param", "value", "normalized", "analytic_limit",
                              "rel_err")
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# pair-field integrand family on annuli and core balls
# ---------------------------------------------------------------------------


def angular_quartic_integral(n_quad: int = 64) -> float:
    """Trapezoidal value of the full-circle integral of sin^4 cos^2
    (exact for n_quad > 6; equals pi/8)."""
    th = 2.0 * math.pi * np.arange(n_quad) / n_quad
    return float(np.mean(np.sin(th) ** 4 * np.cos(th) ** 2)) * 2.0 * math.pi


def _pair_integrand_means(h: float, n_theta: int):
    th = 2.0 * math.pi * np.arange(n_theta) / n_theta
    ct, st = np.cos(th), np.sin(th)

    def means(r: float) -> tuple[float, float, float]:
        x1 = r * ct
        x2 = r * st
        qm = (x1 - 0.5 * h) ** 2 + x2**2
        qp = (x1 + 0.5 * h) ** 2 + x2**2
        with np.errstate(divide="ignore"):
            f1 = np.log(qm / qp) ** 2
        den = (qp * qm) ** 2
        f2 = h**2 * x2**4 * x1**2 / den
        f3 = h**2 * x2**2 * (0.25 * h**2 + x2**2 - x1**2) ** 2 / den
        return float(np.mean(f1)), float(np.mean(f2)), float(np.mean(f3))

    return means


def appendix_b_integrals(h: float, R: float, n_theta: int = 512) -> dict:
    """The three pair-field integrals on the annulus and the core ball.

    Returns raw and normalized (by h^2 log(R/h)) values; the normalized
    annulus triple tends to (4 pi, pi/8, pi/2) and the core-ball triple
    to zero as h -> 0.
    """
    if not (0.0 < h < R):
        raise ValidationError(f"need 0 < h < R, got h={h}, R={R}")
    means = _pair_integrand_means(h, n_theta)

    def radial(lo: float, hi: float, k: int, pts) -> float:
        def f(r):
            return means(r)[k] * 2.0 * math.pi * r

        pts = [p for p in pts if lo < p < hi]
        val, err = quad(f, lo, hi, points=pts or None, limit=400)
        if not math.isfinite(val):
            raise NumericalError(
                f"pair-integrand quadrature diverged on ({lo}, {hi})"
            )
        return val

    norm = h**2 * math.log(R / h)
    annulus = [radial(h, R, k, [2.0 * h, 10.0 * h]) for k in range(3)]
    ball = [radial(0.0, h, k, [0.5 * h]) for k in range(3)]
    return {
        "annulus": tuple(annulus),
        "ball": tuple(ball),
        "annulus_normalized": tuple(a / norm for a in annulus),
        "ball_normalized": tuple(b / norm for b in ball),
        "limits": (4.0 * math.pi, math.pi / 8.0, math.pi / 2.0),
    }


# ---------------------------------------------------------------------------
# annulus energy closed forms
# ---------------------------------------------------------------------------


def annulus_energy_closed_form(s: float, eps: float, r: float, R: float,
                               c: ElasticConstants) -> tuple[float, float, float]:
    """Closed-form (G on A_{eps,r}, combined value, vanishing-core error).

    The combined value is the bulk energy plus the core-circle load,
    rewritten as -(s^2/8 pi) K log(1/eps) + (s^2/8 pi) K log r + f_eps.
    """
    if not (0.0 < eps < r <= R):
        raise ValidationError(f"need 0 < eps < r <= R, got {eps}, {r}, {R}")
    K = c.plane_prefactor
    E, nu = c.young_E, c.poisson_nu
    c1 = s**2 / (8.0 * math.pi) * K
    c2 = s**2 / (32.0 * math.pi) * E / ((1.0 - nu) ** 2 * (1.0 + nu))
    e2, r2, R2 = eps**2, r**2, R**2
    shell = (r2 - e2) / (R2 + e2)
    second = c2 * shell * (R2 / r2 - 1.0) * (
        (r2 + e2) / (R2 + e2) * (R2 / r2 + 1.0) - 2.0
    )
    G = c1 * math.log(r / eps) + c1 * shell * ((r2 + e2) / (R2 + e2) - 2.0) + second
    f_eps = c1 * (
        2.0 * (R2 - e2) / (R2 + e2)
        + shell * ((r2 + e2) / (R2 + e2) - 2.0)
        - 2.0 * math.log(R)
    ) + second
    combined = -c1 * math.log(1.0 / eps) + c1 * math.log(r) + f_eps
    return G, combined, f_eps


def vanishing_core_limit_constant(r: float, R: float, magnitude: float,
                                  c: ElasticConstants) -> float:
    """eps -> 0 limit of the per-defect expansion constant f_eps(r, R)."""
    if not (0.0 < r <= R):
        raise ValidationError(f"need 0 < r <= R, got r={r}, R={R}")
    K = c.plane_prefactor
    E, nu = c.young_E, c.poisson_nu
    t = r**2 / R**2
    first = magnitude**2 / (8.0 * math.pi) * K * (
        2.0 + t * (t - 2.0) - 2.0 * math.log(R)
    )
    second = magnitude**2 / (32.0 * math.pi) * E / ((1.0 - nu) ** 2 * (1.0 + nu)) \
        * t * (1.0 / t - 1.0) * (t * (1.0 / t + 1.0) - 2.0)
    return first + second


# ---------------------------------------------------------------------------
# renormalized energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RenormalizedEnergy:
    """Decomposition of the expansion constant for a dislocation system."""

    F_self: float
    F_int: float
    F_elastic: float
    f_DR: float
    separation_D: float

    @property
    def renormalized(self) -> float:
        return self.F_self + self.F_int + self.F_elastic

    @property
    def expansion_constant(self) -> float:
        """Constant term of the |log eps| expansion: F + f(D, R)."""
        return self.renormalized + self.f_DR

    def to_dict(self) -> dict:
        return {
            "F_self": self.F_self,
            "F_int": self.F_int,
            "F_elastic": self.F_elastic,
            "f_DR": self.f_DR,
            "renormalized": self.renormalized,
            "expansion_constant": self.expansion_constant,
            "separation_D": self.separation_D,
        }


def _circle_nodes(center, radius: float, n_quad: int):
    th = 2.0 * math.pi * np.arange(n_quad) / n_quad
    nhat = np.stack([np.cos(th), np.sin(th)], axis=-1)
    return np.asarray(center, dtype=float) + radius * nhat, nhat, \
        2.0 * math.pi * radius


def _pair_energy_boundary(term_f, term_g, rings, elastic: ElasticConstants,
                          ) -> float:
    """Energy cross term of two biharmonic closed forms by boundary
    reduction: (1+nu)/E of the three-kernel circle pairing.

    ``rings`` are (sign, points, ball-outward normals, circumference)
    tuples whose signed sum is the region boundary with region-outward
    orientation on the first entry.
    """
    nu, E = elastic.poisson_nu, elastic.young_E
    acc = 0.0
    for sign, pts, nhat, ring in rings:
        dn_lap = (term_f.grad_laplacian(pts) * nhat).sum(axis=-1)
        lap = term_f.laplacian(pts)
        hess_n = np.einsum("nij,nj->ni", term_f.hessian(pts), nhat)
        g_val = term_g.value(pts)
        g_grad = term_g.gradient(pts)
        g_dn = (g_grad * nhat).sum(axis=-1)
        acc += sign * ring * float(
            np.mean(
                (hess_n * g_grad).sum(axis=-1)
                - nu * lap * g_dn
                - (1.0 - nu) * dn_lap * g_val
            )
        )
    return (1.0 + nu) / E * acc


def renormalized_energy(dislocations, elastic: ElasticConstants,
                        domain: DiskDomain, D_override: float | None = None,
                        n: int = 256, n_quad: int = 512,
                        solver: str = "direct", tol: float = 1e-10,
                        ) -> RenormalizedEnergy:
    """Self/interaction/elastic decomposition plus the geometry constant.

    Self terms integrate each zero-core profile over the D-punctured
    disk; the profiles are biharmonic there, so the bulk integral is
    reduced exactly to signed circle integrals of analytic kernels
    (spectrally convergent trapezoid on each circle). Interaction terms
    pair distinct profiles on the outer boundary only; the elastic term
    is the boundary-relaxation solve.
    """
    dislocations = list(dislocations)
    if not dislocations:
        raise ValidationError("need at least one dislocation")
    sites = [np.asarray(d.site, dtype=float) for d in dislocations]
    D_min = min_separation_D([d.site for d in dislocations], domain)
    D = D_min if D_override is None else float(D_override)
    if not (0.0 < D <= D_min):
        raise ValidationError(
            f"separation radius D={D} must lie in (0, {D_min}]"
        )
    R = domain.radius_R
    K = elastic.plane_prefactor

    terms = [
        DislocationLimitAiry(elastic=elastic, burgers_b=d.burgers_b,
                             radius_R=R, site=d.site)
        for d in dislocations
    ]
    outer = _circle_nodes(domain.center, R, n_quad)
    core_rings = [_circle_nodes(p, D, n_quad) for p in sites]

    F_self = 0.0
    for j, term in enumerate(terms):
        rings = [(1.0, *outer)] + [(-1.0, *ring) for ring in core_rings]
        F_self += 0.5 * _pair_energy_boundary(term, term, rings, elastic)
        mag = math.hypot(*dislocations[j].burgers_b)
        F_self += K * mag**2 / (8.0 * math.pi) * math.log(D)

    F_int = 0.0
    for j, tj in enumerate(terms):
        for k, tk in enumerate(terms):
            if k == j:
                continue
            F_int += _pair_energy_boundary(tj, tk, [(1.0, *outer)], elastic)

    F_elastic = solve_elastic_correction(elastic, domain, dislocations, n,
                                         solver, tol).value
    f_DR = sum(
        vanishing_core_limit_constant(D, R, math.hypot(*d.burgers_b), elastic)
        for d in dislocations
    )
    return RenormalizedEnergy(F_self=F_self, F_int=F_int, F_elastic=F_elastic,
                              f_DR=f_DR, separation_D=D)


# ---------------------------------------------------------------------------
# expansion sweeps against the solver
# ---------------------------------------------------------------------------


def _analytic_slope(dislocations, elastic: ElasticConstants) -> float:
    K = elastic.plane_prefactor
    return -K * sum(
        math.hypot(*d.burgers_b) ** 2 for d in dislocations
    ) / (8.0 * math.pi)


def expansion_check(dislocations, elastic: ElasticConstants,
                    domain: DiskDomain, eps_list, n: int = 256,
                    fit_tail: int = 3, solver: str = "direct",
                    tol: float = 1e-10,
                    reports: list[SolveReport] | None = None) -> ExpansionFit:
    """Solver values over a decreasing core-radius list, fitted against
    |log eps| and compared with the renormalized-energy constant."""
    dislocations = list(dislocations)
    if not dislocations:
        raise ValidationError("need at least one dislocation")
    eps_values = _check_decreasing(eps_list, "core radius")
    values = []
    for eps in eps_values:
        rep = solve_core_constrained(elastic, domain, dislocations, eps, n,
                                     solver, tol)
        if reports is not None:
            reports.append(rep)
        values.append(rep.value)
    slope, constant, s_err, c_err, residual = _fit_log_expansion(
        eps_values, values, fit_tail
    )
    renorm = renormalized_energy(dislocations, elastic, domain, n=n,
                                 solver=solver, tol=tol)
    return ExpansionFit(
        param_name="eps", params=tuple(eps_values), values=tuple(values),
        slope=slope, constant=constant, slope_stderr=s_err,
        constant_stderr=c_err, residual=residual,
        analytic_slope=_analytic_slope(dislocations, elastic),
        predicted_constant=renorm.expansion_constant,
    )


def diagonal_dipole_limit(dipoles, elastic: ElasticConstants,
                          domain: DiskDomain, h_list, n: int = 256,
                          fit_tail: int = 3, solver: str = "direct",
                          tol: float = 1e-10) -> ExpansionFit:
    """Joint spacing/core limit: per spacing h the core radius is
    eps(h) = sqrt(h), clipped below the separation radius; samples whose
    eps is unresolved by the grid (eps < 4 delta) or not above h are
    skipped with a flag."""
    dipoles = list(dipoles)
    if not dipoles:
        raise ValidationError("need at least one dipole")
    h_values = _check_decreasing(h_list, "spacing")
    D = min_separation_D([dip.center for dip in dipoles], domain)
    delta = 2.0 * domain.radius_R / n
    eps_used = []
    values = []
    skipped = []
    for h in h_values:
        eps = min(math.sqrt(h), 0.95 * D)
        if not (h < eps) or eps < 4.0 * delta:
            skipped.append({"h": h, "eps": eps, "reason": "unresolved"})
            continue
        sized = [replace(dip, spacing_h=h) for dip in dipoles]
        rep = solve_dipole_core(elastic, domain, sized, eps, n, solver, tol)
        eps_used.append(eps)
        values.append(rep.value)
    if len(values) < 2:
        raise NumericalError("too few resolved samples for the diagonal fit")
    slope, constant, s_err, c_err, residual = _fit_log_expansion(
        eps_used, values, fit_tail
    )
    targets = [
        Dislocation(site=dip.center, burgers_b=dip.burgers_b) for dip in dipoles
    ]
    return ExpansionFit(
        param_name="eps", params=tuple(eps_used), values=tuple(values),
        slope=slope, constant=constant, slope_stderr=s_err,
        constant_stderr=c_err, residual=residual,
        analytic_slope=_analytic_slope(targets, elastic),
        skipped=tuple(skipped),
    )
