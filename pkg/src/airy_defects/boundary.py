"""Traction-free / affine-trace equivalence checks on closed curves.

A field is traction-free on a curve when its Hessian annihilates the
tangent; equivalently its Dirichlet data (value, normal derivative)
agree with those of a single affine function. Both characterizations
are evaluated numerically here, on closed forms or on grid fields
through their bicubic view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DiskDomain, ValidationError
from .fields import OUTSIDE, ScalarField, SplineField


@dataclass(frozen=True)
class BoundaryCurve:
    """Closed curve sampled at equispaced arc length.

    Stores positions, unit tangents and curvature per sample; the
    parametrization must be arc length (|gamma'| = 1).
    """

    arc_length: np.ndarray
    positions: np.ndarray
    tangents: np.ndarray
    curvature: np.ndarray
    length: float

    def __post_init__(self) -> None:
        t = np.asarray(self.tangents, dtype=float)
        speed = np.hypot(t[:, 0], t[:, 1])
        if np.any(np.abs(speed - 1.0) > 1e-10):
            raise ValidationError("curve parametrization is not arc length")
        p = np.asarray(self.positions, dtype=float)
        if p.shape[0] < 3:
            raise ValidationError("need at least 3 curve samples")

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius: float = 1.0,
               n_samples: int = 1024) -> "BoundaryCurve":
        if not (radius > 0.0):
            raise ValidationError(f"circle radius must be positive, got {radius}")
        th = 2.0 * math.pi * np.arange(n_samples) / n_samples
        c = np.asarray(center, dtype=float)
        pos = c + radius * np.stack([np.cos(th), np.sin(th)], axis=-1)
        tan = np.stack([-np.sin(th), np.cos(th)], axis=-1)
        return cls(
            arc_length=radius * th,
            positions=pos,
            tangents=tan,
            curvature=np.full(n_samples, 1.0 / radius),
            length=2.0 * math.pi * radius,
        )

    @classmethod
    def for_domain(cls, domain: DiskDomain, n_samples: int = 1024,
                   ) -> "BoundaryCurve":
        return cls.circle(domain.center, domain.radius_R, n_samples)

    def normals(self) -> np.ndarray:
        """Outward normals (tangent rotated -90 degrees)."""
        t = self.tangents
        return np.stack([t[:, 1], -t[:, 0]], axis=-1)


def _as_evaluable(v, curve: BoundaryCurve):
    if isinstance(v, ScalarField):
        g = v.grid
        p = curve.positions
        ij = np.stack(
            [np.round((p[:, 0] - g.x0) / g.delta),
             np.round((p[:, 1] - g.y0) / g.delta)], axis=-1
        ).astype(int)
        out = (
            (ij[:, 0] < 0) | (ij[:, 0] >= g.nx)
            | (ij[:, 1] < 0) | (ij[:, 1] >= g.ny)
        )
        if np.any(out):
            raise ValidationError("curve exits the field grid")
        return SplineField(v)
    return v


def tangential_hessian_residual(v, curve: BoundaryCurve) -> float:
    """max over curve samples of |hess(v) . tangent|.

    Zero certifies the zero-traction boundary condition in the discrete
    sense; grid fields are evaluated through their bicubic view.
    """
    field = _as_evaluable(v, curve)
    H = field.hessian(curve.positions)
    Ht = np.einsum("nij,nj->ni", H, curve.tangents)
    return float(np.hypot(Ht[:, 0], Ht[:, 1]).max())


@dataclass(frozen=True)
class AffineTraceReport:
    """Joint affine fit to the Dirichlet data of a field on a curve."""

    coefficients: tuple[float, float, float]
    trace_residual: float
    normal_residual: float
    ode_closure_defect: float
    ode_track_residual: float

    def to_dict(self) -> dict:
        return {
            "affine": list(self.coefficients),
            "trace_residual": self.trace_residual,
            "normal_residual": self.normal_residual,
            "ode_closure_defect": self.ode_closure_defect,
            "ode_track_residual": self.ode_track_residual,
        }


def _tangential_ode_track(curve: BoundaryCurve, v_t: np.ndarray,
                          v_n: np.ndarray, n_steps: int = 1024,
                          ) -> tuple[float, float, np.ndarray]:
    """Integrate the curvature-rotation system along the curve.

    For a traction-free field the pair z = (tangential, normal)
    derivative satisfies z' = kappa (-z2, z1) along arc length. The
    integrated solution started from the sampled initial data is
    compared with the sampled data everywhere (track residual) and with
    its own start after one circuit (closure defect). Integration is
    classical 4th-order one-step.
    """
    n_steps = max(n_steps, 1024)
    s_grid = curve.arc_length
    L = curve.length

    def interp(s, data):
        return np.interp(np.mod(s, L), s_grid, data, period=L)

    z = np.array([v_t[0], v_n[0]])
    hstep = L / n_steps

    def rhs(s, z):
        k = interp(s, curve.curvature)
        return np.array([-k * z[1], k * z[0]])

    s = 0.0
    track = 0.0
    traj = [z.copy()]
    for _ in range(n_steps):
        k1 = rhs(s, z)
        k2 = rhs(s + 0.5 * hstep, z + 0.5 * hstep * k1)
        k3 = rhs(s + 0.5 * hstep, z + 0.5 * hstep * k2)
        k4 = rhs(s + hstep, z + hstep * k3)
        z = z + hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s += hstep
        traj.append(z.copy())
        track = max(
            track,
            abs(z[0] - interp(s, v_t)),
            abs(z[1] - interp(s, v_n)),
        )
    closure = float(np.hypot(z[0] - v_t[0], z[1] - v_n[0]))
    return closure, float(track), np.asarray(traj)


def affine_trace_check(v, curve: BoundaryCurve,
                       n_ode_steps: int = 1024) -> AffineTraceReport:
    """Best affine match of the Dirichlet data plus the ODE closure test.

    Fits a(x) = c0 + c1 x1 + c2 x2 jointly to the sampled values and
    normal derivatives and reports both misfits; additionally integrates
    the tangential curvature-rotation system from the data and reports
    how far it fails to close after one circuit.
    """
    field = _as_evaluable(v, curve)
    pos = curve.positions
    nrm = curve.normals()
    vals = field.value(pos)
    grads = field.gradient(pos)
    v_n = (grads * nrm).sum(axis=-1)
    v_t = (grads * curve.tangents).sum(axis=-1)

    m = pos.shape[0]
    A = np.zeros((2 * m, 3))
    A[:m, 0] = 1.0
    A[:m, 1] = pos[:, 0]
    A[:m, 2] = pos[:, 1]
    A[m:, 1] = nrm[:, 0]
    A[m:, 2] = nrm[:, 1]
    y = np.concatenate([vals, v_n])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    trace_res = float(np.abs(fit[:m] - vals).max())
    normal_res = float(np.abs(fit[m:] - v_n).max())
    closure, track, _ = _tangential_ode_track(curve, v_t, v_n, n_ode_steps)
    return AffineTraceReport(
        coefficients=(float(coef[0]), float(coef[1]), float(coef[2])),
        trace_residual=trace_res,
        normal_residual=normal_res,
        ode_closure_defect=closure,
        ode_track_residual=track,
    )
