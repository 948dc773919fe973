"""
Catalog of analytic beam configurations and their closed-form gauge fields.

Each constructor returns a :class:`Scenario` holding the zeta field (with
exact gradients) and the closed-form A, B, phi for that configuration.
Radial kinds use S = l * azimuth with l = l_p - l_c.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bessel import bessel_j
from .electronic import TrapPotentials, dark_trapping_potential
from .errors import DomainError, ParameterError
from .fields import (NATURAL, Annulus, BeamPair, BeamSpec, Everywhere, PhysicalConstants,
                     SphereMinusString, ZetaField, as_points, cylindrical, cylindrical_basis,
                     radial_oam_zeta, spherical, spherical_basis)
from .gauge import GaugeFields, gauge_fields

KINDS = ("polynomial", "bessel", "disc", "ring", "monopole", "custom")
RADIAL_KINDS = ("polynomial", "bessel", "disc", "ring")


@dataclass(frozen=True)
class DerivedQuantities:
    cyclotron_freq: float
    magnetic_length: float
    total_flux: float
    field_strength: float


@dataclass
class Scenario:
    kind: str
    params: dict
    zeta: ZetaField
    closed_form: GaugeFields
    constants: PhysicalConstants = NATURAL
    radial_abs2: Optional[Callable] = None
    radial_bz: Optional[Callable] = None
    _pair_factory: Optional[Callable] = field(default=None, repr=False)

    def __iter__(self):
        yield self.zeta
        yield self.closed_form

    @property
    def winding(self):
        return int(self.params.get("l", 0))

    @property
    def domain(self):
        return self.zeta.domain

    def beam_pair(self, omega0: float = 1.0) -> BeamPair:
        """Beams realising this zeta (control carries no OAM)."""
        if self._pair_factory is None:
            raise ParameterError(f"{self.kind} scenario has no beam realisation")
        return self._pair_factory(omega0)

    def generic_fields(self, traps: Optional[TrapPotentials] = None, form="auto") -> GaugeFields:
        return gauge_fields(self.zeta, self.constants, traps, form)

    @property
    def derived(self) -> Optional[DerivedQuantities]:
        """Cyclotron frequency, magnetic length and flux for the uniform-field kinds."""
        if self.kind not in ("disc", "ring"):
            return None
        hbar, m = self.constants.hbar, self.constants.mass
        l = self.winding
        span = self.params["rho_max"] ** 2 - self.params.get("rho_min", 0.0) ** 2
        bz = -2 * hbar * l / span
        if bz == 0:
            return DerivedQuantities(0.0, np.inf, 0.0, 0.0)
        omega = abs(bz) / m
        return DerivedQuantities(omega, float(np.sqrt(hbar / (m * omega))), bz * np.pi * span, bz)


def _int_winding(l):
    if int(l) != l:
        raise ParameterError(f"winding l must be an integer, got {l}")
    return int(l)


def _azimuthal(points, a_phi):
    e_phi = cylindrical_basis(points)[1]
    return np.asarray(a_phi)[..., None] * e_phi


def _axial(points, bz):
    out = np.zeros(as_points(points).shape)
    out[..., 2] = bz
    return out


def _closed(a_phi_fn, bz_fn, phi_fn, abs2_fn, traps, domain):
    traps = traps or TrapPotentials.zero()

    def a_eff(p):
        return _azimuthal(p, a_phi_fn(cylindrical(p)[0]))

    def b_eff(p):
        return _axial(p, bz_fn(cylindrical(p)[0]))

    def phi_geom(p):
        return phi_fn(cylindrical(p)[0])

    def u_trap(p):
        return dark_trapping_potential(traps, abs2_fn(cylindrical(p)[0]), as_points(p))

    return GaugeFields(a_eff, b_eff, phi_geom, u_trap, domain)


def _radial_pair(probe_f, probe_df, control_f, control_df, l, domain):
    def factory(omega0):
        probe = BeamSpec(lambda r, z: omega0 * probe_f(r), 0.0, l,
                         lambda r, z: (omega0 * probe_df(r), np.zeros_like(r)), domain)
        control = BeamSpec(lambda r, z: omega0 * control_f(r), 0.0, 0,
                           lambda r, z: (omega0 * control_df(r), np.zeros_like(r)), domain)
        return BeamPair(probe, control)
    return factory


def polynomial(a, b, l, constants=NATURAL, traps=None) -> Scenario:
    """|zeta| = a rho + b rho^2."""
    if a < 0 or b < 0:
        raise ParameterError(f"polynomial scenario needs a >= 0 and b >= 0 (got a={a}, b={b})")
    l = _int_winding(l)
    hbar, m = constants.hbar, constants.mass
    rate = max(a, np.sqrt(b))
    domain = Everywhere(scale=1.0 / rate if rate > 0 else 1.0)

    def g(r):
        return a * r + b * r * r

    def dg(r):
        return a + 2 * b * r

    def a_phi(r):
        return -hbar * l * r * (a + b * r) ** 2 / (1 + (r * (a + b * r)) ** 2)

    def bz(r):
        return -hbar * l * 2 * (a + b * r) * (a + 2 * b * r) / (1 + (r * (a + b * r)) ** 2) ** 2

    def phi(r):
        num = (l * l + 1) * a * a + 2 * (l * l + 2) * a * b * r + (l * l + 4) * b * b * r * r
        return hbar ** 2 / (2 * m) * num / (1 + (r * (a + b * r)) ** 2) ** 2

    zeta = radial_oam_zeta(g, dg, l, domain, name="polynomial")
    return Scenario("polynomial", dict(a=a, b=b, l=l), zeta,
                    _closed(a_phi, bz, phi, lambda r: g(r) ** 2, traps, domain), constants,
                    radial_abs2=lambda r: g(r) ** 2, radial_bz=bz,
                    _pair_factory=_radial_pair(g, dg, lambda r: np.ones_like(r),
                                               lambda r: np.zeros_like(r), l, domain))


def bessel(a, b, l, constants=NATURAL, traps=None) -> Scenario:
    """zeta = b J_l(a rho) exp(i l azimuth): a Bessel probe over a flat control beam."""
    if a <= 0 or b < 0:
        raise ParameterError(f"bessel scenario needs a > 0 and b >= 0 (got a={a}, b={b})")
    l = _int_winding(l)
    hbar, m = constants.hbar, constants.mass
    domain = Everywhere(scale=1.0 / a)

    def g(r):
        return b * bessel_j(l, a * np.asarray(r, float))

    def dj(r):
        # J_{l-1} - J_{l+1} = 2 J_l'
        x = a * np.asarray(r, float)
        return bessel_j(l - 1, x) - bessel_j(l + 1, x)

    def dg(r):
        return 0.5 * a * b * dj(r)

    def _safe(r):
        r = np.asarray(r, float)
        return r, np.where(r > 0, r, 1.0), r == 0

    def a_phi(r):
        r, rs, axis = _safe(r)
        j2 = g(r) ** 2
        return np.where(axis, 0.0, -hbar * j2 / (1 + j2) * l / rs)

    def bz(r):
        r, rs, axis = _safe(r)
        j = bessel_j(l, a * r)
        val = -hbar * a * b * b * l / rs * j * dj(r) / (1 + (b * j) ** 2) ** 2
        origin = -hbar * a * a * b * b * l / 2 if abs(l) == 1 else 0.0
        return np.where(axis, origin, val)

    def phi(r):
        r, rs, axis = _safe(r)
        j = bessel_j(l, a * r)
        num = 4 * l * l * j * j + (a * rs) ** 2 * dj(r) ** 2
        val = hbar ** 2 * b * b / (2 * m) * num / (4 * rs * rs * (1 + (b * j) ** 2) ** 2)
        origin = hbar ** 2 * a * a * b * b / (4 * m) if abs(l) == 1 else 0.0
        return np.where(axis, origin, val)

    zeta = radial_oam_zeta(g, dg, l, domain, name="bessel")
    return Scenario("bessel", dict(a=a, b=b, l=l), zeta,
                    _closed(a_phi, bz, phi, lambda r: g(r) ** 2, traps, domain), constants,
                    radial_abs2=lambda r: g(r) ** 2, radial_bz=bz,
                    _pair_factory=_radial_pair(g, dg, lambda r: np.ones_like(r),
                                               lambda r: np.zeros_like(r), l, domain))


def ring(l, rho_min, rho_max, constants=NATURAL, traps=None, kind="ring") -> Scenario:
    """Uniform field on rho_min < rho < rho_max: |zeta|^2 = (rho^2 - rho_min^2)/(rho_max^2 - rho^2)."""
    if not 0 <= rho_min < rho_max:
        raise ParameterError(f"ring scenario needs 0 <= rho_min < rho_max (got {rho_min}, {rho_max})")
    l = _int_winding(l)
    hbar, m = constants.hbar, constants.mass
    lo2, hi2 = rho_min ** 2, rho_max ** 2
    span = hi2 - lo2
    domain = Annulus(rho_min, rho_max)

    def g(r):
        return np.sqrt((r * r - lo2) / (hi2 - r * r))

    def dg(r):
        v = hi2 - r * r
        if rho_min == 0:
            return span / v ** 1.5
        return r * span / (v ** 1.5 * np.sqrt(r * r - lo2))

    def abs2(r):
        return (r * r - lo2) / (hi2 - r * r)

    def a_phi(r):
        r = np.asarray(r, float)
        if rho_min == 0:
            return -hbar * l * r / span
        return -hbar * l * (r * r - lo2) / (span * r)

    def bz(r):
        return np.full(np.shape(r), -2 * hbar * l / span)

    def phi(r):
        r = np.asarray(r, float)
        u, v = r * r - lo2, hi2 - r * r
        if rho_min == 0:
            return hbar ** 2 / (2 * m) * (l * l * v / span ** 2 + 1 / v)
        return hbar ** 2 / (2 * m) * (l * l / (r * r) * v * u / span ** 2 + r * r / (v * u))

    def probe_f(r):
        return np.sqrt(r * r - lo2)

    def probe_df(r):
        return np.ones_like(r) if rho_min == 0 else r / np.sqrt(r * r - lo2)

    def control_f(r):
        return np.sqrt(hi2 - r * r)

    def control_df(r):
        return -r / np.sqrt(hi2 - r * r)

    params = dict(l=l, rho_max=rho_max) if kind == "disc" else dict(l=l, rho_min=rho_min, rho_max=rho_max)
    zeta = radial_oam_zeta(g, dg, l, domain, name=kind)
    return Scenario(kind, params, zeta, _closed(a_phi, bz, phi, abs2, traps, domain), constants,
                    radial_abs2=abs2, radial_bz=bz,
                    _pair_factory=_radial_pair(probe_f, probe_df, control_f, control_df, l, domain))


def disc(l, rho_max, constants=NATURAL, traps=None) -> Scenario:
    """Uniform field inside rho < rho_max (the ring with rho_min = 0)."""
    if not rho_max > 0:
        raise ParameterError(f"disc scenario needs rho_max > 0 (got {rho_max})")
    return ring(l, 0.0, rho_max, constants, traps, kind="disc")


@dataclass(frozen=True)
class MonopoleBeams:
    """Beam intensities realising the monopole ratio, plus where adiabaticity fails."""

    probe_intensity: Callable
    control_intensity: Callable
    string: SphereMinusString
    oam_beam: str

    @property
    def diagnostic(self):
        half = "negative" if self.oam_beam == "probe" else "positive"
        return (f"the OAM-carrying {self.oam_beam} beam vanishes on the z axis, forcing the envelope "
                f"to zero on the {half} half-axis; the total Rabi frequency vanishes there and "
                f"points within {self.string.theta_cut} rad of it are excluded")


def monopole_beam_intensities(l, envelope: Callable = None, theta_cut=0.05, oam_beam="probe"):
    """|Omega_p|^2 = f (1 - cos theta), |Omega_c|^2 = f (1 + cos theta).

    ``envelope`` maps Cartesian points to f >= 0 (default f = 1).
    """
    _int_winding(l)
    if oam_beam not in ("probe", "control"):
        raise ParameterError("oam_beam must be 'probe' or 'control'")
    f = envelope or (lambda p: np.ones(as_points(p).shape[:-1]))

    def cos_theta(p):
        return np.cos(spherical(p)[1])

    def fval(p):
        v = np.asarray(f(p), float)
        if np.any(v < 0):
            raise ParameterError("monopole envelope f must be >= 0")
        return v

    string = SphereMinusString(theta_cut, -1 if oam_beam == "probe" else 0)
    return MonopoleBeams(lambda p: fval(p) * (1 - cos_theta(p)),
                         lambda p: fval(p) * (1 + cos_theta(p)), string, oam_beam)


def monopole(l, envelope: Callable = None, theta_cut=0.05, constants=NATURAL, traps=None,
             oam_beam="probe") -> Scenario:
    """|zeta|^2 = (1 - cos theta)/(1 + cos theta): a monopole field of charge -hbar l / 2."""
    if not 0 < theta_cut < np.pi / 2:
        raise ParameterError(f"theta_cut must lie in (0, pi/2), got {theta_cut}")
    l = _int_winding(l)
    hbar, m = constants.hbar, constants.mass
    beams = monopole_beam_intensities(l, envelope, theta_cut, oam_beam)
    domain = beams.string

    def value(p):
        _, theta, az = spherical(p)
        return np.tan(theta / 2) * np.exp(1j * l * az)

    def gradient(p):
        r, theta, az = spherical(p)
        _, e_t, e_p = spherical_basis(p)
        c2 = np.cos(theta / 2) ** 2
        grad = (e_t + 1j * l * e_p) / (2 * r * c2)[..., None] * np.exp(1j * l * az)[..., None]
        axis = np.hypot(as_points(p)[..., 0], as_points(p)[..., 1]) == 0
        if np.any(axis):
            if abs(l) != 1:
                raise DomainError(f"monopole zeta with winding {l} is not differentiable on the axis")
            grad[axis] = np.array([1.0, 1j * np.sign(l), 0.0]) / (2 * r[axis])[:, None]
        return grad

    def polar(p):
        pts = as_points(p)
        r, theta, _ = spherical(pts)
        _, e_t, e_p = spherical_basis(pts)
        t = np.tan(theta / 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            gs = (l / (r * np.sin(theta)))[..., None] * e_p
        return t * t, (t / np.cos(theta / 2) ** 2 / r)[..., None] * e_t, gs

    zeta = ZetaField(value, gradient, domain=domain, polar_fn=polar, name="monopole")
    traps_ = traps or TrapPotentials.zero()

    def a_eff(p):
        r, theta, _ = spherical(p)
        e_p = spherical_basis(p)[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            mag = np.where(np.sin(theta) > 0, (1 - np.cos(theta)) / (r * np.sin(theta)), 0.0)
        return (-0.5 * hbar * l * mag)[..., None] * e_p

    def b_eff(p):
        r = spherical(p)[0]
        return (-0.5 * hbar * l / r ** 2)[..., None] * spherical_basis(p)[0]

    def phi_geom(p):
        r = spherical(p)[0]
        return hbar ** 2 / (2 * m) * (l * l + 1) / (4 * r ** 2)

    def u_trap(p):
        ct = np.cos(spherical(p)[1])
        return dark_trapping_potential(traps_, (1 - ct) / (1 + ct), as_points(p))

    def pair_factory(omega0):
        def pt(r, z):
            return np.stack(np.broadcast_arrays(r, np.zeros_like(r), z), axis=-1)

        oam = beams.oam_beam
        probe = BeamSpec(lambda r, z: omega0 * np.sqrt(beams.probe_intensity(pt(r, z))), 0.0,
                         l if oam == "probe" else 0, None, domain)
        control = BeamSpec(lambda r, z: omega0 * np.sqrt(beams.control_intensity(pt(r, z))), 0.0,
                           0 if oam == "probe" else -l, None, domain)
        return BeamPair(probe, control)

    sc = Scenario("monopole", dict(l=l, theta_cut=theta_cut, oam_beam=oam_beam), zeta,
                  GaugeFields(a_eff, b_eff, phi_geom, u_trap, domain), constants,
                  _pair_factory=pair_factory)
    sc.beams = beams
    return sc


def custom(zeta: ZetaField, constants=NATURAL, traps=None, pair: Optional[BeamPair] = None) -> Scenario:
    """User-supplied zeta; the 'closed form' is the generic formula set."""
    return Scenario("custom", {}, zeta, gauge_fields(zeta, constants, traps), constants,
                    _pair_factory=(lambda omega0: pair) if pair is not None else None)


_BUILDERS = dict(polynomial=polynomial, bessel=bessel, disc=disc, ring=ring, monopole=monopole,
                 custom=custom)


def make_scenario(kind: str, params: Optional[dict] = None, constants: PhysicalConstants = NATURAL,
                  traps: Optional[TrapPotentials] = None, **kwargs) -> Scenario:
    """Build a scenario by name; parameter violations raise ParameterError.

    Parameters may come as a mapping, as keywords, or both.  The result
    unpacks as ``zeta, closed_form``.
    """
    if kind not in _BUILDERS:
        raise ParameterError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")
    params = {**(params or {}), **kwargs}
    try:
        return _BUILDERS[kind](constants=constants, traps=traps, **params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {kind} scenario: {exc}") from exc
