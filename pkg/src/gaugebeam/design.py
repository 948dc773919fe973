"""
Inverse design: find the radial intensity ratio |zeta|^2(rho) that produces a
prescribed axial field B_z(rho) for a phase winding S = l * azimuth.

The axial field only depends on cos(2 alpha) through
d(cos 2 alpha)/d rho = -2 rho B_z / (hbar l), which is integrated from a
boundary value and mapped back with |zeta|^2 = (1 + c)/(1 - c).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import FeasibilityError, ParameterError
from .fields import NATURAL, Annulus, PhysicalConstants, ZetaField, cylindrical, cylindrical_basis

RTOL = 1e-10
ATOL = 1e-12
# Undershoot of c below -1 tolerated as round-off (tangential probe nulls).
UNDERSHOOT = 1e-9


@dataclass
class DesignResult:
    """Designed profile.

    ``feasible`` is the interval on which |cos 2 alpha| <= 1.  ``edges``
    lists radii where cos 2 alpha reached +1 (|zeta|^2 -> inf); these bound
    the feasible interval but are not failures.
    """

    winding: int
    boundary: tuple
    interval: tuple
    feasible: tuple
    edges: list
    rho: np.ndarray
    cos2alpha_samples: np.ndarray
    interpolant: PchipInterpolator
    constants: PhysicalConstants = NATURAL
    _pieces: list = field(default_factory=list, repr=False)
    _slope: Optional[Callable] = field(default=None, repr=False)

    @property
    def abs2_samples(self):
        return _abs2(self.cos2alpha_samples)

    def cos2alpha(self, rho):
        """cos 2 alpha from the integrator's continuous extension."""
        r = np.asarray(rho, float)
        lo, hi = self.feasible
        if np.any((r < lo) | (r > hi)):
            raise ParameterError(f"rho outside the feasible interval {self.feasible}")
        out = np.empty(r.shape)
        for a, b, sol in self._pieces:
            sel = (r >= min(a, b)) & (r <= max(a, b))
            if np.any(sel):
                out[sel] = np.clip(sol(r[sel])[0], -1.0, 1.0)
        return out if out.ndim else float(out)

    def abs2(self, rho):
        return _abs2(self.cos2alpha(rho))

    def dcos2alpha(self, rho):
        return self._slope(np.asarray(rho, float))

    def to_zeta_field(self, winding: Optional[int] = None) -> ZetaField:
        """zeta = sqrt(|zeta|^2) exp(i l azimuth) on the open feasible annulus."""
        l = self.winding if winding is None else int(winding)
        lo, hi = self.feasible
        domain = Annulus(lo, hi)
        design = self

        def value(pts):
            rho, az, _ = cylindrical(pts)
            return np.sqrt(design.abs2(rho)) * np.exp(1j * l * az)

        def polar(pts):
            rho = cylindrical(pts)[0]
            c = design.cos2alpha(rho)
            e_rho, e_phi, _ = cylindrical_basis(pts)
            ga2 = 2 * design.dcos2alpha(rho) / (1 - c) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                gs = (l / rho)[..., None] * e_phi
            return _abs2(c), ga2[..., None] * e_rho, gs

        return ZetaField(value, None, domain=domain, polar_fn=polar, name="designed")


def _abs2(c):
    c = np.asarray(c, float)
    with np.errstate(divide="ignore"):
        return np.where(c >= 1, np.inf, (1 + c) / (1 - c))


def _first_crossing(sol, exceeded, bound):
    """First radius along the integration where ``exceeded`` holds, refined on the dense output."""
    ys = sol.y[0]
    hits = np.flatnonzero(exceeded(ys))
    if not hits.size:
        return None
    k = int(hits[0])
    if k == 0:
        return float(sol.t[0])
    a, b = float(sol.t[k - 1]), float(sol.t[k])

    def g(r):
        return float(sol.sol(r)[0]) - bound

    ga, gb = g(a), g(b)
    if ga == 0 or np.sign(ga) == np.sign(gb):
        return a if abs(ga) <= abs(gb) else b
    return float(brentq(g, a, b, xtol=1e-14 * max(1.0, abs(b)), rtol=4 * np.finfo(float).eps))


def _integrate(rhs, rho0, c0, end):
    """Integrate from rho0 to end; returns (solution, stop_radius, reason).

    The slope does not depend on c, so the whole interval is integrated and
    the first exit from [-1, 1] is located afterwards.
    """
    if end == rho0:
        return None, rho0, None
    sol = solve_ivp(rhs, (rho0, end), [c0], method="RK45", rtol=RTOL, atol=ATOL, dense_output=True)
    if sol.status == -1:
        raise FeasibilityError(f"integration failed: {sol.message}", exit_radius=float(sol.t[-1]))
    top = _first_crossing(sol, lambda y: y > 1.0, 1.0)
    bottom = _first_crossing(sol, lambda y: y < -1.0 - UNDERSHOOT, -1.0 - UNDERSHOOT)
    dist = {name: abs(r - rho0) for name, r in (("top", top), ("bottom", bottom)) if r is not None}
    if "bottom" in dist and dist["bottom"] <= dist.get("top", np.inf):
        raise FeasibilityError(f"cos 2 alpha drops below -1 at rho = {bottom:.10g}: the target field "
                               f"needs a negative intensity ratio", exit_radius=bottom)
    if top is not None:
        return sol.sol, top, "edge"
    return sol.sol, float(end), None


def design_intensity_ratio(target_bz: Callable, l: int, boundary: tuple, interval: tuple,
                           constants: PhysicalConstants = NATURAL, n_samples: int = 1001,
                           strict: bool = False) -> DesignResult:
    """Integrate the intensity ratio that produces ``target_bz``.

    Parameters
    ----------
    target_bz : callable
        rho -> B_z (scalar in, scalar out).
    l : int
        Phase winding, nonzero.
    boundary : (rho0, cos2alpha0)
        Boundary condition; rho0 must lie in ``interval``.
    interval : (rho_lo, rho_hi)
    strict : bool
        Treat cos 2 alpha reaching +1 as an error instead of a domain edge.

    Raises
    ------
    FeasibilityError
        When cos 2 alpha would drop below -1, with the exit radius.
    """
    l = int(l)
    if l == 0:
        raise ParameterError("winding l must be nonzero to produce an axial field")
    rho0, c0 = float(boundary[0]), float(boundary[1])
    lo, hi = float(interval[0]), float(interval[1])
    if not (0 <= lo < hi):
        raise ParameterError(f"interval must satisfy 0 <= lo < hi, got {interval}")
    if not lo <= rho0 <= hi:
        raise ParameterError(f"boundary radius {rho0} outside interval {interval}")
    if not -1 <= c0 <= 1:
        raise ParameterError(f"boundary cos 2 alpha must lie in [-1, 1], got {c0}")
    hbar = constants.hbar

    def slope(rho):
        return -2 * rho * np.asarray(target_bz(rho), float) / (hbar * l)

    def rhs(t, y):
        return [float(slope(t))]

    pieces, edges = [], []
    f_lo, f_hi = rho0, rho0
    for end in (lo, hi):
        sol, stop, reason = _integrate(rhs, rho0, c0, end)
        if sol is None:
            continue
        if reason == "edge":
            if strict:
                raise FeasibilityError(f"cos 2 alpha reaches +1 at rho = {stop:.10g}", exit_radius=stop)
            edges.append(stop)
        pieces.append((rho0, stop, sol))
        f_lo, f_hi = min(f_lo, stop), max(f_hi, stop)
    if not pieces:
        raise ParameterError("interval has zero length")

    result = DesignResult(l, (rho0, c0), (lo, hi), (f_lo, f_hi), edges, np.empty(0), np.empty(0),
                          None, constants, pieces, np.vectorize(lambda r: float(slope(r))))
    rho = np.linspace(f_lo, f_hi, n_samples)
    c = result.cos2alpha(rho)
    result.rho, result.cos2alpha_samples = rho, c
    result.interpolant = PchipInterpolator(rho, c)
    return result
