"""
Control/probe Rabi-frequency fields and their complex ratio zeta.

Positions are Cartesian arrays with a trailing axis of length 3; any
leading shape is allowed and is preserved by every evaluator.  Cylindrical
quantities (rho, azimuth, z) are derived on the fly.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, ParameterError, PoleError, format_points

# Points per worker chunk when sampling in parallel.
_CHUNK = 4096


@dataclass(frozen=True)
class PhysicalConstants:
    """Natural units by default (hbar = M = 1)."""

    hbar: float = 1.0
    mass: float = 1.0
    gamma3: float = 0.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ParameterError(f"hbar must be > 0, got {self.hbar}")
        if not self.mass > 0:
            raise ParameterError(f"mass must be > 0, got {self.mass}")
        if not self.gamma3 >= 0:
            raise ParameterError(f"gamma3 must be >= 0, got {self.gamma3}")


NATURAL = PhysicalConstants()


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1:] != (3,):
        raise ValueError(f"points need a trailing axis of length 3, got shape {pts.shape}")
    return pts


def cylindrical(points):
    """Return (rho, azimuth, z) for Cartesian points."""
    pts = as_points(points)
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    return np.hypot(x, y), np.arctan2(y, x), z


def cylindrical_basis(points):
    """Unit vectors e_rho, e_phi, e_z at each point.

    On the axis e_rho and e_phi are undefined and returned as zero vectors.
    """
    pts = as_points(points)
    x, y = pts[..., 0], pts[..., 1]
    rho = np.hypot(x, y)
    safe = np.where(rho > 0, rho, 1.0)
    on_axis = rho == 0
    e_rho = np.stack([x / safe, y / safe, np.zeros_like(x)], axis=-1)
    e_phi = np.stack([-y / safe, x / safe, np.zeros_like(x)], axis=-1)
    e_rho[on_axis] = 0.0
    e_phi[on_axis] = 0.0
    e_z = np.zeros_like(pts)
    e_z[..., 2] = 1.0
    return e_rho, e_phi, e_z


def spherical(points):
    """Return (r, theta, azimuth)."""
    pts = as_points(points)
    r = np.linalg.norm(pts, axis=-1)
    theta = np.arctan2(np.hypot(pts[..., 0], pts[..., 1]), pts[..., 2])
    return r, theta, np.arctan2(pts[..., 1], pts[..., 0])


def spherical_basis(points):
    """Unit vectors e_r, e_theta, e_phi; e_theta/e_phi are zero on the z axis."""
    pts = as_points(points)
    r, theta, az = spherical(points)
    st, ct = np.sin(theta), np.cos(theta)
    sa, ca = np.sin(az), np.cos(az)
    e_r = np.stack([st * ca, st * sa, ct], axis=-1)
    e_t = np.stack([ct * ca, ct * sa, -st], axis=-1)
    e_p = np.stack([-sa, ca, np.zeros_like(sa)], axis=-1)
    on_axis = np.hypot(pts[..., 0], pts[..., 1]) == 0
    e_t[on_axis] = 0.0
    e_p[on_axis] = 0.0
    return e_r, e_t, e_p


# --------------------------------------------------------------------------
# Domains
# --------------------------------------------------------------------------

class Domain:
    """Region on which a field is defined.

    ``scale`` is a characteristic length used to size finite-difference steps.
    """

    scale: float = 1.0

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, points) -> np.ndarray:
        """Distance to the nearest excluded region (inf when unbounded)."""
        return np.full(as_points(points).shape[:-1], np.inf)

    def local_scale(self, points) -> np.ndarray:
        return np.minimum(self.scale, self.boundary_distance(points))

    def check(self, points, what="field"):
        pts = as_points(points)
        inside = self.contains(pts)
        if not np.all(inside):
            bad = pts[~inside].reshape(-1, 3)
            raise DomainError(
                f"{what} evaluated outside {self!r} at {len(bad)} point(s): {format_points(bad)}",
                points=bad,
            )


@dataclass(frozen=True)
class Everywhere(Domain):
    scale: float = 1.0

    def contains(self, points):
        return np.all(np.isfinite(as_points(points)), axis=-1)


@dataclass(frozen=True)
class Annulus(Domain):
    """Open cylindrical shell rho_min < rho < rho_max (axis included when rho_min == 0)."""

    rho_min: float = 0.0
    rho_max: float = np.inf

    @property
    def scale(self):
        span = self.rho_max - self.rho_min
        return float(span) if np.isfinite(span) else 1.0

    def contains(self, points):
        rho = cylindrical(points)[0]
        lower = rho >= 0 if self.rho_min == 0 else rho > self.rho_min
        return lower & (rho < self.rho_max)

    def boundary_distance(self, points):
        rho = cylindrical(points)[0]
        d = self.rho_max - rho
        if self.rho_min > 0:
            d = np.minimum(d, rho - self.rho_min)
        return d


@dataclass(frozen=True)
class Box(Domain):
    lo: tuple
    hi: tuple

    @property
    def scale(self):
        return float(np.max(np.subtract(self.hi, self.lo)))

    def contains(self, points):
        pts = as_points(points)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def boundary_distance(self, points):
        pts = as_points(points)
        return np.min(np.minimum(pts - self.lo, np.subtract(self.hi, pts)), axis=-1)


@dataclass(frozen=True)
class SphereMinusString(Domain):
    """All space except the origin and a conical tube around a half-axis.

    ``string`` is -1 for the negative z half-axis, +1 for the positive one,
    0 for both.  A point is excluded when its angle to the string direction
    is below ``theta_cut``.
    """

    theta_cut: float = 0.05
    string: int = -1
    scale: float = 1.0

    def _angles(self, points):
        r, theta, _ = spherical(points)
        return r, theta

    def contains(self, points):
        r, theta = self._angles(points)
        ok = r > 0
        if self.string in (-1, 0):
            ok &= theta < np.pi - self.theta_cut
        if self.string in (1, 0):
            ok &= theta > self.theta_cut
        return ok

    def in_string(self, points):
        r, theta = self._angles(points)
        hit = np.zeros_like(r, dtype=bool)
        if self.string in (-1, 0):
            hit |= theta >= np.pi - self.theta_cut
        if self.string in (1, 0):
            hit |= theta <= self.theta_cut
        return hit

    def boundary_distance(self, points):
        r, theta = self._angles(points)
        d = r.copy()
        if self.string in (-1, 0):
            d = np.minimum(d, r * np.sin(np.clip(np.pi - self.theta_cut - theta, 0, np.pi / 2)))
        if self.string in (1, 0):
            d = np.minimum(d, r * np.sin(np.clip(theta - self.theta_cut, 0, np.pi / 2)))
        return d


# --------------------------------------------------------------------------
# Grids and sampling
# --------------------------------------------------------------------------

_GRID_KINDS = {
    "radial": "radial", "radial-1d": "radial", "radial1d": "radial",
    "cartesian-2d": "cartesian-2d", "cartesian2d": "cartesian-2d",
    "cartesian-3d": "cartesian-3d", "cartesian3d": "cartesian-3d",
}
_GRID_DIMS = {"radial": 1, "cartesian-2d": 2, "cartesian-3d": 3}


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid.

    Radial grids place their nodes on the positive x axis, so vector
    samples there read (A_rho, A_phi, A_z) as (x, y, z) components.
    """

    kind: str
    extents: tuple
    counts: tuple

    def __post_init__(self):
        kind = _GRID_KINDS.get(str(self.kind).lower())
        if kind is None:
            raise ParameterError(f"unknown grid kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        extents = tuple(tuple(float(v) for v in e) for e in self.extents)
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "counts", counts)
        ndim = _GRID_DIMS[kind]
        if len(extents) != ndim or len(counts) != ndim:
            raise ParameterError(f"{kind} grid needs {ndim} extents and counts")
        for (lo, hi), n in zip(extents, counts):
            if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
                raise ParameterError(f"grid extent ({lo}, {hi}) must be finite with max > min")
            if n < 2:
                raise ParameterError(f"grid counts must be >= 2, got {n}")
        if kind == "radial" and extents[0][0] < 0:
            raise ParameterError("radial grid must start at rho >= 0")

    @classmethod
    def radial(cls, rho_min, rho_max, n):
        return cls("radial", ((rho_min, rho_max),), (n,))

    @classmethod
    def square(cls, half_width, n):
        return cls("cartesian-2d", ((-half_width, half_width),) * 2, (n, n))

    @property
    def ndim(self):
        return len(self.counts)

    @property
    def shape(self):
        return self.counts

    def axes(self):
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.extents, self.counts)]

    @property
    def spacing(self):
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.extents, self.counts))

    def points(self) -> np.ndarray:
        axes = self.axes()
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.zeros(self.shape + (3,))
        for k, m in enumerate(mesh):
            pts[..., k] = m
        return pts


@dataclass
class SampledField:
    """Dense samples on a grid; ``mask`` marks excluded nodes (True = excluded)."""

    values: np.ndarray
    mask: np.ndarray
    grid: Grid

    @property
    def is_vector(self):
        return self.values.ndim == self.grid.ndim + 1


def _worker_count():
    try:
        return max(1, int(os.environ.get("GAUGEBEAM_THREADS", "1")))
    except ValueError:
        return 1


def _eval_isolating(fn, pts):
    """Evaluate fn on flat points; on DomainError retry per point to isolate failures."""
    try:
        return np.asarray(fn(pts)), np.zeros(len(pts), dtype=bool)
    except DomainError:
        out, bad = [], np.zeros(len(pts), dtype=bool)
        for i, p in enumerate(pts):
            try:
                out.append(np.asarray(fn(p)))
            except DomainError:
                out.append(None)
                bad[i] = True
        ref = next((o for o in out if o is not None), np.array(np.nan))
        filled = [np.full_like(ref, np.nan, dtype=np.result_type(ref, float)) if o is None else o
                  for o in out]
        return np.stack(filled), bad


def sample_on_grid(fn: Callable, grid: Grid, domain: Optional[Domain] = None,
                   workers: Optional[int] = None) -> SampledField:
    """Sample a scalar or vector field function on every grid node.

    Nodes outside ``domain`` (or where ``fn`` raises DomainError) are masked
    and stored as NaN.  When no domain is given and ``fn`` is a bound method
    of an object carrying a ``domain`` attribute, that domain is used.
    """
    if domain is None:
        domain = getattr(getattr(fn, "__self__", None), "domain", None)
    pts = grid.points().reshape(-1, 3)
    mask = np.zeros(len(pts), dtype=bool)
    if domain is not None:
        mask = ~domain.contains(pts)
    idx = np.flatnonzero(~mask)
    workers = workers or _worker_count()

    chunks = [idx[i:i + _CHUNK] for i in range(0, len(idx), _CHUNK)] or [idx]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _eval_isolating(fn, pts[c]), chunks))
    else:
        results = [_eval_isolating(fn, pts[c]) for c in chunks]

    sample = next((r[0] for r in results if r[0].size), None)
    tail = () if sample is None else sample.shape[1:]
    dtype = np.result_type(float, *(r[0].dtype for r in results))
    values = np.full((len(pts),) + tail, np.nan, dtype=dtype)
    for c, (vals, bad) in zip(chunks, results):
        if len(c):
            values[c] = vals
            mask[c[bad]] = True
    return SampledField(values.reshape(grid.shape + tail), mask.reshape(grid.shape), grid)


# --------------------------------------------------------------------------
# Beams
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BeamSpec:
    """A paraxial beam envelope carrying orbital angular momentum.

    Parameters
    ----------
    amplitude_profile : callable
        ``f(rho, z)`` giving the slowly varying real envelope (Rabi-frequency
        units).  A negative value is read as a pi phase flip, which is how a
        Bessel envelope passes through its zeros.
    wavenumber : float
        Axial wavenumber k.
    winding : int
        OAM per photon in units of hbar.
    profile_gradient : callable, optional
        ``(rho, z) -> (df/drho, df/dz)``.  Enables exact zeta gradients.
    domain : Domain
        Region where the envelope is meaningful.
    """

    amplitude_profile: Callable
    wavenumber: float = 0.0
    winding: int = 0
    profile_gradient: Optional[Callable] = None
    domain: Domain = field(default_factory=Everywhere)

    @classmethod
    def constant(cls, amplitude, wavenumber=0.0):
        return cls(lambda rho, z: np.full(np.broadcast(rho, z).shape, float(amplitude)),
                   wavenumber, 0,
                   lambda rho, z: (np.zeros(np.broadcast(rho, z).shape),) * 2)

    def _profile(self, rho, z):
        f = np.asarray(self.amplitude_profile(rho, z), dtype=float)
        if self.winding != 0:
            axis = rho == 0
            if np.any(axis & (f != 0)):
                raise ParameterError(
                    f"beam with winding {self.winding} must vanish on the axis (vortex null)")
        return f


def evaluate_rabi(beam: BeamSpec, points) -> np.ndarray:
    """Complex Rabi frequency f(rho, z) exp(i(k z + l azimuth))."""
    pts = as_points(points)
    beam.domain.check(pts, "Rabi frequency")
    rho, az, z = cylindrical(pts)
    return beam._profile(rho, z) * np.exp(1j * (beam.wavenumber * z + beam.winding * az))


def rabi_gradient(beam: BeamSpec, points) -> np.ndarray:
    """Exact Cartesian gradient of the Rabi frequency (needs ``profile_gradient``)."""
    if beam.profile_gradient is None:
        raise ValueError("beam has no analytic profile gradient")
    pts = as_points(points)
    beam.domain.check(pts, "Rabi gradient")
    rho, az, z = cylindrical(pts)
    f = beam._profile(rho, z)
    df_rho, df_z = (np.asarray(g, dtype=float) for g in beam.profile_gradient(rho, z))
    df_rho = np.broadcast_to(df_rho, rho.shape)
    df_z = np.broadcast_to(df_z, rho.shape)
    l = beam.winding
    phase = np.exp(1j * (beam.wavenumber * z + l * az))
    e_rho, e_phi, e_z = cylindrical_basis(pts)
    safe = np.where(rho > 0, rho, 1.0)
    grad = (df_rho[..., None] * e_rho
            + 1j * l * (f / safe)[..., None] * e_phi
            + (df_z + 1j * beam.wavenumber * f)[..., None] * e_z)
    axis = rho == 0
    if np.any(axis):
        # f ~ f'(0) rho near the axis; only |l| = 1 (or a flat envelope) is differentiable there
        if abs(l) == 1:
            inplane = np.array([1.0, 1j * np.sign(l), 0.0])
            grad[axis] = df_rho[axis][:, None] * inplane + (df_z[axis] + 0j)[:, None] * np.array([0, 0, 1.0])
        elif np.any(df_rho[axis] != 0):
            raise DomainError(f"envelope with winding {l} is not differentiable on the axis",
                              points=pts[axis])
        else:
            grad[axis] = (df_z[axis] + 1j * beam.wavenumber * f[axis])[:, None] * np.array([0, 0, 1.0])
    return grad * phase[..., None]


@dataclass(frozen=True)
class BeamPair:
    probe: BeamSpec
    control: BeamSpec

    def __post_init__(self):
        if self.probe.winding != 0 and self.control.winding != 0:
            raise ParameterError(
                "probe and control both carry OAM: the total Rabi frequency would vanish on the axis")

    @property
    def winding(self):
        return self.probe.winding - self.control.winding

    @property
    def domain(self):
        # both beams share the scenario domain in practice; prefer the narrower one
        return self.probe.domain if not isinstance(self.probe.domain, Everywhere) else self.control.domain

    def rabi(self, points):
        return evaluate_rabi(self.probe, points), evaluate_rabi(self.control, points)

    def total_rabi(self, points):
        op, oc = self.rabi(points)
        return np.sqrt(np.abs(op) ** 2 + np.abs(oc) ** 2)

    def zeta_field(self, step=None) -> "ZetaField":
        exact = self.probe.profile_gradient is not None and self.control.profile_gradient is not None
        pair = self

        def value(pts):
            op, oc = pair.rabi(pts)
            if np.any(oc == 0):
                raise PoleError("control field vanishes: zeta has a pole; use the mixing-angle form",
                                points=as_points(pts)[oc == 0])
            return op / oc

        gradient = None
        if exact:
            def gradient(pts):
                op, oc = pair.rabi(pts)
                if np.any(oc == 0):
                    raise PoleError("control field vanishes at gradient point")
                gp = rabi_gradient(pair.probe, pts)
                gc = rabi_gradient(pair.control, pts)
                return (gp * oc[..., None] - op[..., None] * gc) / (oc ** 2)[..., None]

        return ZetaField(value, gradient, domain=self.domain, step=step)


def zeta_at(pair: BeamPair, points, step=None):
    """Return (zeta, grad zeta) for a beam pair at the given points."""
    zf = pair.zeta_field(step=step)
    return zf.value(points), zf.gradient(points)


# --------------------------------------------------------------------------
# zeta
# --------------------------------------------------------------------------

class ZetaField:
    """The complex ratio zeta = Omega_p / Omega_c with its gradient.

    Parameters
    ----------
    value_fn : callable
        Points -> complex zeta.
    gradient_fn : callable, optional
        Points -> complex gradient, shape (..., 3).  When absent, centred
        differences with step ``step`` (default 1e-5 times the local length
        scale of the domain) are used.
    domain : Domain
    polar_fn : callable, optional
        Points -> (|zeta|^2, grad |zeta|^2, grad S).  Supplying it lets the
        gauge module use the mixing-angle forms near poles where the complex
        value is too large to handle.
    """

    def __init__(self, value_fn, gradient_fn=None, domain: Domain = None, polar_fn=None,
                 step=None, richardson=False, name="custom"):
        self._value = value_fn
        self._gradient = gradient_fn
        self._polar = polar_fn
        self.domain = domain if domain is not None else Everywhere()
        self.step = step
        self.richardson = richardson
        self.name = name

    @property
    def exact_gradient(self):
        return self._gradient is not None

    @property
    def has_polar(self):
        return self._polar is not None

    def value(self, points):
        pts = as_points(points)
        self.domain.check(pts, "zeta")
        v = np.asarray(self._value(pts), dtype=complex)
        if not np.all(np.isfinite(v)):
            raise PoleError("zeta is not finite", points=pts[~np.isfinite(v)])
        return v

    def fd_gradient(self, points, step=None, richardson=None):
        pts = as_points(points)
        self.domain.check(pts, "zeta gradient")
        if step is None:
            step = self.step
        if step is None:
            step = 1e-5 * self.domain.local_scale(pts)
        h = np.broadcast_to(np.asarray(step, dtype=float), pts.shape[:-1])
        richardson = self.richardson if richardson is None else richardson

        def central(hh):
            out = np.empty(pts.shape, dtype=complex)
            for k in range(3):
                d = np.zeros_like(pts)
                d[..., k] = hh
                out[..., k] = (self._value(pts + d) - self._value(pts - d)) / (2 * hh)
            return out

        g = central(h)
        if richardson:
            g = (4 * central(h / 2) - g) / 3
        return g

    def gradient(self, points):
        if self._gradient is None:
            return self.fd_gradient(points)
        pts = as_points(points)
        self.domain.check(pts, "zeta gradient")
        return np.asarray(self._gradient(pts), dtype=complex)

    def abs2(self, points):
        if self._polar is not None:
            pts = as_points(points)
            self.domain.check(pts, "zeta")
            return np.asarray(self._polar(pts)[0], dtype=float)
        return np.abs(self.value(points)) ** 2

    def polar(self, points):
        """(|zeta|^2, grad |zeta|^2, grad S).  grad S is NaN where zeta = 0."""
        pts = as_points(points)
        if self._polar is not None:
            self.domain.check(pts, "zeta")
            a2, ga2, gs = self._polar(pts)
            return np.asarray(a2, float), np.asarray(ga2, float), np.asarray(gs, float)
        v = self.value(pts)
        g = self.gradient(pts)
        cg = np.conj(v)[..., None] * g
        a2 = np.abs(v) ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            gs = cg.imag / a2[..., None]
        return a2, 2 * cg.real, gs


def radial_oam_zeta(amplitude: Callable, d_amplitude: Callable, winding: int,
                    domain: Domain = None, name="radial") -> ZetaField:
    """zeta = g(rho) exp(i l azimuth) with a real (possibly signed) radial profile g."""
    l = int(winding)

    def value(pts):
        rho, az, _ = cylindrical(pts)
        return amplitude(rho) * np.exp(1j * l * az)

    def gradient(pts):
        rho, az, _ = cylindrical(pts)
        g, dg = amplitude(rho), d_amplitude(rho)
        e_rho, e_phi, _ = cylindrical_basis(pts)
        safe = np.where(rho > 0, rho, 1.0)
        grad = dg[..., None] * e_rho + (1j * l * g / safe)[..., None] * e_phi
        axis = rho == 0
        if np.any(axis):
            if abs(l) == 1:
                grad[axis] = dg[axis][:, None] * np.array([1.0, 1j * np.sign(l), 0.0])
            elif np.all(dg[axis] == 0):
                grad[axis] = 0.0
            else:
                raise DomainError(f"zeta with winding {l} is not differentiable on the axis",
                                  points=as_points(pts)[axis])
        return grad * np.exp(1j * l * az)[..., None]

    def polar(pts):
        rho = cylindrical(pts)[0]
        g, dg = amplitude(rho), d_amplitude(rho)
        e_rho, e_phi, _ = cylindrical_basis(pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            gs = (l / rho)[..., None] * e_phi
        return g * g, (2 * g * dg)[..., None] * e_rho, gs

    return ZetaField(value, gradient, domain=domain, polar_fn=polar, name=name)


def rotate_z(points, angle):
    """Rotate Cartesian points about the z axis."""
    pts = as_points(points)
    c, s = np.cos(angle), np.sin(angle)
    out = pts.copy()
    out[..., 0] = c * pts[..., 0] - s * pts[..., 1]
    out[..., 1] = s * pts[..., 0] + c * pts[..., 1]
    return out


def constant_pair(omega_p: complex, omega_c: complex) -> BeamPair:
    """Spatially uniform beams; complex amplitudes are carried by the envelope sign only."""
    if np.iscomplexobj(omega_p) or np.iscomplexobj(omega_c):
        raise ParameterError("constant_pair takes real envelopes; use phases via winding/wavenumber")
    return BeamPair(BeamSpec.constant(omega_p), BeamSpec.constant(omega_c))


__all__: Sequence[str] = [
    "PhysicalConstants", "NATURAL", "Domain", "Everywhere", "Annulus", "Box", "SphereMinusString",
    "Grid", "SampledField", "sample_on_grid", "BeamSpec", "BeamPair", "evaluate_rabi",
    "rabi_gradient", "zeta_at", "ZetaField", "radial_oam_zeta", "cylindrical", "spherical",
    "cylindrical_basis", "spherical_basis", "rotate_z", "constant_pair", "as_points",
]
