"""
Adiabaticity diagnostics for a moving atom: the two-photon Doppler term F,
the margin F / Omega and the order-of-magnitude dark-state lifetime.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateSystemError, ParameterError
from .fields import NATURAL, BeamPair, PhysicalConstants, ZetaField, as_points


@dataclass(frozen=True)
class AdiabaticReport:
    """Adiabaticity figures at one point and velocity.

    ``lifetime`` is gamma3^-1 (Omega/F)^2 when gamma3 > 0 and F > 0, else
    None.  It is an order-of-magnitude estimate, never a hard gate.
    """

    f_value: float
    total_rabi: float
    margin: float
    lifetime: Optional[float]
    order_of_magnitude: bool = True


def doppler_term(zeta: ZetaField, point, velocity):
    """F = |grad zeta . v| / (1 + |zeta|^2).

    The dot product is the plain (unconjugated) complex one.  Broadcasts
    over leading point axes.
    """
    pts = as_points(point)
    v = np.asarray(velocity, dtype=float)
    if v.shape[-1:] != (3,):
        raise ParameterError("velocity must have a trailing axis of length 3")
    z = zeta.value(pts)
    g = zeta.gradient(pts)
    f = np.abs(np.sum(g * v, axis=-1)) / (1 + np.abs(z) ** 2)
    return f if np.ndim(f) else float(f)


def adiabatic_report(pair: BeamPair, point, velocity,
                     constants: PhysicalConstants = NATURAL) -> AdiabaticReport:
    """F, Omega, F/Omega and the lifetime estimate at a single point."""
    pts = as_points(point)
    if pts.ndim != 1:
        raise ParameterError("adiabatic_report takes a single point")
    omega = float(pair.total_rabi(pts))
    if omega == 0:
        raise DegenerateSystemError("total Rabi frequency vanishes: adiabaticity undefined here",
                                    points=pts[None])
    f = float(doppler_term(pair.zeta_field(), pts, velocity))
    margin = f / omega
    lifetime = None
    if constants.gamma3 > 0 and f > 0:
        lifetime = (omega / f) ** 2 / constants.gamma3
    return AdiabaticReport(f, omega, margin, lifetime)


def velocity_sweep(pair: BeamPair, point, direction, speeds, constants: PhysicalConstants = NATURAL):
    """Reports for speeds along a fixed direction (normalised internally)."""
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ParameterError("velocity direction must be nonzero")
    d = d / norm
    return [adiabatic_report(pair, point, s * d, constants) for s in np.asarray(speeds, float)]
