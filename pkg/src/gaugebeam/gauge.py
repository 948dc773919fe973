"""
Effective vector potential, magnetic field and scalar potentials for dark-state atoms.

Three equivalent representations are available for every quantity:

``complex``
    Directly in terms of zeta and its gradient.
``polar``
    In terms of |zeta|^2 and the phase S of zeta.
``mixing``
    In terms of cos(2 alpha) and grad S.  This form stays regular as
    |zeta| -> inf and is used automatically beyond ``POLE_SWITCH``.

The module also carries two independent checks: the coupling-sum scalar
potential built from numerically diagonalised eigenstates, and a finite
difference curl of sampled vector potentials.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .electronic import (TrapPotentials, cos2alpha_from_abs2, dark_trapping_potential,
                         numeric_eigensystem)
from .errors import DegenerateSystemError, DomainError, format_points
from .fields import (NATURAL, BeamPair, Domain, Everywhere, Grid, PhysicalConstants, SampledField,
                     ZetaField, as_points, cylindrical_basis, sample_on_grid)

POLE_SWITCH = 1e6
FORMS = ("auto", "complex", "polar", "mixing")


@dataclass
class GaugeFields:
    """Vector and scalar potentials as closures over Cartesian points."""

    a_eff: Callable
    b_eff: Callable
    phi_geom: Callable
    u_trap: Callable
    domain: Domain = None

    def v_eff(self, points):
        return self.u_trap(points) + self.phi_geom(points)


def _select_form(form):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    return form


def _mixing_parts(zeta, pts):
    a2, ga2, gs = zeta.polar(pts)
    n = 1 + a2
    c2a = cos2alpha_from_abs2(a2)
    grad_c2a = 2 * ga2 / (n * n)[..., None]
    return a2, c2a, grad_c2a, gs


def _auto(zeta, pts, complex_fn, mixing_fn):
    """Complex form, swapping in the mixing form where |zeta|^2 exceeds POLE_SWITCH."""
    if not zeta.has_polar:
        return complex_fn(pts)
    a2 = zeta.abs2(pts)
    big = a2 > POLE_SWITCH
    if not np.any(big):
        return complex_fn(pts)
    far = mixing_fn(pts[big])
    out = np.empty(a2.shape + far.shape[1:])
    out[big] = far
    if np.any(~big):
        out[~big] = complex_fn(pts[~big])
    return out


def vector_potential(zeta: ZetaField, points, constants: PhysicalConstants = NATURAL, form="auto"):
    """A_eff = i hbar (zeta* grad zeta - zeta grad zeta*) / (2 (1 + |zeta|^2))."""
    pts = as_points(points)
    hbar = constants.hbar

    def complex_form(p):
        v, g = zeta.value(p), zeta.gradient(p)
        num = np.conj(v)[..., None] * g - v[..., None] * np.conj(g)
        return (1j * hbar * num / (2 * (1 + np.abs(v) ** 2))[..., None]).real

    def polar_form(p):
        a2, _, gs = zeta.polar(p)
        return -hbar * (a2 / (1 + a2))[..., None] * gs

    def mixing_form(p):
        _, c2a, _, gs = _mixing_parts(zeta, p)
        return -0.5 * hbar * (1 + c2a)[..., None] * gs

    form = _select_form(form)
    if form == "complex":
        return complex_form(pts)
    if form == "polar":
        return polar_form(pts)
    if form == "mixing":
        return mixing_form(pts)
    return _auto(zeta, pts, complex_form, mixing_form)


def magnetic_field(zeta: ZetaField, points, constants: PhysicalConstants = NATURAL, form="auto"):
    """B_eff = i hbar (grad zeta* x grad zeta) / (1 + |zeta|^2)^2."""
    pts = as_points(points)
    hbar = constants.hbar

    def complex_form(p):
        v, g = zeta.value(p), zeta.gradient(p)
        n = 1 + np.abs(v) ** 2
        return (1j * hbar * np.cross(np.conj(g), g) / (n * n)[..., None]).real

    def polar_form(p):
        a2, ga2, gs = zeta.polar(p)
        n = 1 + a2
        return hbar * np.cross(gs, ga2) / (n * n)[..., None]

    def mixing_form(p):
        _, _, grad_c2a, gs = _mixing_parts(zeta, p)
        return 0.5 * hbar * np.cross(gs, grad_c2a)

    form = _select_form(form)
    if form == "complex":
        return complex_form(pts)
    if form == "polar":
        return polar_form(pts)
    if form == "mixing":
        return mixing_form(pts)
    return _auto(zeta, pts, complex_form, mixing_form)


def geometric_scalar(zeta: ZetaField, points, constants: PhysicalConstants = NATURAL, form="auto"):
    """phi = (hbar^2/2M) grad zeta* . grad zeta / (1 + |zeta|^2)^2 (dot product)."""
    pts = as_points(points)
    pref = constants.hbar ** 2 / (2 * constants.mass)

    def complex_form(p):
        v, g = zeta.value(p), zeta.gradient(p)
        n = 1 + np.abs(v) ** 2
        return pref * np.sum(np.abs(g) ** 2, axis=-1) / (n * n)

    def polar_form(p):
        a2, ga2, gs = zeta.polar(p)
        n = 1 + a2
        # (grad |zeta|)^2 = |grad |zeta|^2|^2 / (4 |zeta|^2)
        grad_abs_sq = np.sum(ga2 ** 2, axis=-1) / (4 * a2)
        return pref * (grad_abs_sq + a2 * np.sum(gs ** 2, axis=-1)) / (n * n)

    def mixing_form(p):
        _, c2a, grad_c2a, gs = _mixing_parts(zeta, p)
        s = 1 - c2a ** 2
        return 0.25 * pref * (s * np.sum(gs ** 2, axis=-1) + np.sum(grad_c2a ** 2, axis=-1) / s)

    form = _select_form(form)
    if form == "complex":
        return complex_form(pts)
    if form == "polar":
        return polar_form(pts)
    if form == "mixing":
        return mixing_form(pts)
    return _auto(zeta, pts, complex_form, mixing_form)


def axial_magnetic_field(winding, rho, dcos2alpha_drho, constants: PhysicalConstants = NATURAL):
    """B_z = -(hbar/2)(l/rho) d(cos 2 alpha)/d rho for a radial intensity ratio with S = l azimuth."""
    return -0.5 * constants.hbar * winding * np.asarray(dcos2alpha_drho) / np.asarray(rho)


def gauge_fields(zeta: ZetaField, constants: PhysicalConstants = NATURAL,
                 traps: Optional[TrapPotentials] = None, form="auto") -> GaugeFields:
    """Bundle the generic formulas for ``zeta`` as a GaugeFields record."""
    traps = traps or TrapPotentials.zero()
    return GaugeFields(
        a_eff=lambda p: vector_potential(zeta, p, constants, form),
        b_eff=lambda p: magnetic_field(zeta, p, constants, form),
        phi_geom=lambda p: geometric_scalar(zeta, p, constants, form),
        u_trap=lambda p: dark_trapping_potential(traps, zeta.abs2(p), as_points(p)),
        domain=zeta.domain,
    )


def sample_gauge_fields(g: GaugeFields, grid: Grid, domain: Optional[Domain] = None):
    """Sample A, B, phi, U and V_eff; returns a dict of SampledField with a shared mask."""
    domain = domain or g.domain or Everywhere()
    out = {
        "A": sample_on_grid(g.a_eff, grid, domain),
        "B": sample_on_grid(g.b_eff, grid, domain),
        "phi": sample_on_grid(g.phi_geom, grid, domain),
        "U": sample_on_grid(g.u_trap, grid, domain),
    }
    mask = np.zeros(grid.shape, dtype=bool)
    for s in out.values():
        mask |= s.mask
    for s in out.values():
        s.mask = mask
        s.values[mask] = np.nan
    out["V_eff"] = SampledField(out["U"].values + out["phi"].values, mask, grid)
    return out


# --------------------------------------------------------------------------
# Coupling-sum oracle
# --------------------------------------------------------------------------

@dataclass
class CouplingMatrices:
    """Matrix elements in the (D, +, -) basis at one or more points.

    ``a_matrix[..., X, X', k]`` is i hbar <X| d_k X'>; ``u_matrix[..., X, X']``
    holds the electronic energies plus trap-potential matrix elements.
    """

    a_matrix: np.ndarray
    u_matrix: np.ndarray
    states: np.ndarray  # (..., 3 states, 3 components) at the centre point
    grad_states: np.ndarray  # (..., 3 states, 3 components, 3 directions)


_PIN_TOL = 1e-8


def _pin_phases(vecs, order):
    """Make one component of each eigenvector real-positive.

    ``vecs`` has shape (N, S, state, comp) over N points and S stencil
    samples (index 0 is the centre).  The pinned component is the largest
    one at the centre; if it nearly vanishes anywhere in the stencil the
    next largest is tried.
    """
    n_pts, _, n_states, _ = vecs.shape
    out = np.empty_like(vecs)
    idx = np.arange(n_pts)
    for x in range(n_states):
        done = np.zeros(n_pts, dtype=bool)
        for cand in range(order.shape[-1]):
            comp = order[:, x, cand]
            pinned = vecs[idx, :, x, comp]  # (N, S)
            ok = np.min(np.abs(pinned), axis=1) > _PIN_TOL
            take = ok & ~done
            if np.any(take):
                ph = np.conj(pinned[take]) / np.abs(pinned[take])
                out[take, :, x, :] = vecs[take, :, x, :] * ph[..., None]
                done |= take
        if not np.all(done):
            raise DegenerateSystemError("phase fixing failed: every eigenvector component vanishes "
                                        "somewhere in the difference stencil")
    return out


def coupling_matrices(pair: BeamPair, points, constants: PhysicalConstants = NATURAL,
                      traps: Optional[TrapPotentials] = None, step=None,
                      richardson=False) -> CouplingMatrices:
    """Numerically differentiate the diagonalised eigenstates of the Lambda Hamiltonian.

    The eigenstates come from a dense Hermitian eigensolver applied to the
    Hamiltonian assembled from the beams' Rabi frequencies, independent of
    the closed-form zeta formulas.
    """
    pts = as_points(points)
    lead = pts.shape[:-1]
    flat = pts.reshape(-1, 3)
    n = len(flat)
    domain = pair.domain
    domain.check(flat, "coupling matrices")
    if step is None:
        step = 1e-5 * domain.local_scale(flat)
    h = np.broadcast_to(np.asarray(step, float), (n,)).copy()

    def derivative_stencil(hh):
        offsets = np.zeros((7, 3))
        for k in range(3):
            offsets[1 + 2 * k, k] = 1.0
            offsets[2 + 2 * k, k] = -1.0
        stencil = flat[:, None, :] + hh[:, None, None] * offsets[None]
        op, oc = pair.rabi(stencil)
        energies, vecs = numeric_eigensystem(op, oc, constants)
        gap = np.min(np.diff(energies, axis=-1), axis=-1)
        if np.any(gap <= 1e-12 * np.max(np.abs(energies))):
            raise DegenerateSystemError("eigensystem degenerate inside the difference stencil")
        # ascending (-, D, +) -> rows (D, +, -)
        states = np.swapaxes(vecs, -1, -2)[..., [1, 2, 0], :]
        order = np.argsort(-np.abs(states[:, 0]), axis=-1)
        states = _pin_phases(states, order)
        grads = np.empty((n, 3, 3, 3), dtype=complex)
        for k in range(3):
            grads[..., k] = (states[:, 1 + 2 * k] - states[:, 2 + 2 * k]) / (2 * hh)[:, None, None]
        return states[:, 0], grads

    centre, grads = derivative_stencil(h)
    if richardson:
        centre_half, grads_half = derivative_stencil(h / 2)
        grads = (4 * grads_half - grads) / 3

    hbar = constants.hbar
    a = 1j * hbar * np.einsum("nxc,nyck->nxyk", np.conj(centre), grads)

    traps = traps or TrapPotentials.zero()
    op, oc = pair.rabi(flat)
    omega = np.sqrt(np.abs(op) ** 2 + np.abs(oc) ** 2)
    v = traps.matrix(flat)
    u = np.einsum("nxc,ncd,nyd->nxy", np.conj(centre), v, centre)
    u[:, 1, 1] += hbar * omega
    u[:, 2, 2] -= hbar * omega

    return CouplingMatrices(a.reshape(lead + (3, 3, 3)), u.reshape(lead + (3, 3)),
                            centre.reshape(lead + (3, 3)), grads.reshape(lead + (3, 3, 3)))


def phi_from_couplings(pair: BeamPair, points, constants: PhysicalConstants = NATURAL, step=None,
                       form="sum", richardson=False):
    """Geometric scalar potential from eigenstate couplings.

    ``form="sum"`` uses (1/2M) sum_{X=+,-} A_{D,X} . A_{X,D}; ``form="overlap"``
    uses (hbar^2/2M)(<grad D|grad D> + <D|grad D>^2).
    """
    cm = coupling_matrices(pair, points, constants, step=step, richardson=richardson)
    if form == "sum":
        a = cm.a_matrix
        s = np.einsum("...xk,...xk->...", a[..., 0, 1:, :], a[..., 1:, 0, :])
        return (s / (2 * constants.mass)).real
    if form == "overlap":
        dd = cm.grad_states[..., 0, :, :]  # (..., comp, k)
        d = cm.states[..., 0, :]
        grad_sq = np.sum(np.abs(dd) ** 2, axis=(-2, -1))
        conn = np.einsum("...c,...ck->...k", np.conj(d), dd)
        return (constants.hbar ** 2 / (2 * constants.mass) * (grad_sq + np.sum(conn ** 2, axis=-1))).real
    raise ValueError("form must be 'sum' or 'overlap'")


# --------------------------------------------------------------------------
# Curl and flux
# --------------------------------------------------------------------------

def numeric_curl(a: SampledField) -> SampledField:
    """Second-order finite-difference curl of a sampled vector field.

    Cartesian grids use centred differences with one-sided second-order
    stencils on the grid edges.  Radial grids read the y component as A_phi
    and return B_z = (1/rho) d(rho A_phi)/d rho, masking rho = 0.
    Any stencil touching a masked node yields a masked result.
    """
    grid = a.grid
    vals = np.where(a.mask[..., None], np.nan, a.values.astype(float))
    out = np.zeros(vals.shape)
    if grid.kind == "radial":
        rho = grid.axes()[0]
        d = np.gradient(rho * vals[:, 1], rho, edge_order=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, 2] = d / rho
        out[rho == 0] = np.nan
    elif grid.kind == "cartesian-2d":
        x, y = grid.axes()
        dax_dy = np.gradient(vals[..., 0], y, axis=1, edge_order=2)
        day_dx = np.gradient(vals[..., 1], x, axis=0, edge_order=2)
        out[..., 0] = np.gradient(vals[..., 2], y, axis=1, edge_order=2)
        out[..., 1] = -np.gradient(vals[..., 2], x, axis=0, edge_order=2)
        out[..., 2] = day_dx - dax_dy
    else:
        axes = grid.axes()

        def d(comp, ax):
            return np.gradient(vals[..., comp], axes[ax], axis=ax, edge_order=2)

        out[..., 0] = d(2, 1) - d(1, 2)
        out[..., 1] = d(0, 2) - d(2, 0)
        out[..., 2] = d(1, 0) - d(0, 1)
    mask = a.mask | ~np.all(np.isfinite(out), axis=-1)
    out[mask] = np.nan
    return SampledField(out, mask, grid)


@dataclass(frozen=True)
class Disc:
    radius: float
    z: float = 0.0


@dataclass(frozen=True)
class AnnulusSurface:
    rho_min: float
    rho_max: float
    z: float = 0.0


@dataclass(frozen=True)
class Circle:
    radius: float
    z: float = 0.0


@dataclass(frozen=True)
class Sphere:
    radius: float
    center: tuple = (0.0, 0.0, 0.0)


def _check_nodes(domain, pts, what):
    if domain is None:
        return
    inside = domain.contains(pts)
    if not np.all(inside):
        bad = pts[~inside]
        raise DomainError(f"{what} quadrature touches {len(bad)} masked node(s): {format_points(bad)}",
                          points=bad)


def flux(field_fn: Callable, surface, domain: Optional[Domain] = None, n_radial=48, n_azimuth=96,
         n_polar=16):
    """Magnetic flux through a surface, or circulation around a circle.

    ``field_fn`` maps Cartesian points to vectors: B for Disc/AnnulusSurface/
    Sphere, A for Circle.  Radial and polar directions use Gauss-Legendre
    nodes; the azimuth uses the periodic trapezoid rule.  Nodes outside
    ``domain`` raise DomainError.
    """
    az = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    w_az = 2 * np.pi / n_azimuth
    if isinstance(surface, Circle):
        pts = np.stack([surface.radius * np.cos(az), surface.radius * np.sin(az),
                        np.full_like(az, surface.z)], axis=-1)
        _check_nodes(domain, pts, "circulation")
        e_phi = cylindrical_basis(pts)[1]
        a = np.asarray(field_fn(pts))
        return float(np.sum(np.sum(a * e_phi, axis=-1)) * surface.radius * w_az)
    if isinstance(surface, (Disc, AnnulusSurface)):
        lo, hi = (0.0, surface.radius) if isinstance(surface, Disc) else (surface.rho_min, surface.rho_max)
        x, w = np.polynomial.legendre.leggauss(n_radial)
        rho = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        w_rho = 0.5 * (hi - lo) * w
        R, P = np.meshgrid(rho, az, indexing="ij")
        pts = np.stack([R * np.cos(P), R * np.sin(P), np.full_like(R, surface.z)], axis=-1)
        _check_nodes(domain, pts.reshape(-1, 3), "flux")
        bz = np.asarray(field_fn(pts))[..., 2]
        return float(np.sum(bz * R * w_rho[:, None]) * w_az)
    if isinstance(surface, Sphere):
        x, w = np.polynomial.legendre.leggauss(n_polar)  # nodes in cos(theta)
        C, P = np.meshgrid(x, az, indexing="ij")
        S = np.sqrt(1 - C ** 2)
        n_hat = np.stack([S * np.cos(P), S * np.sin(P), C], axis=-1)
        pts = np.asarray(surface.center) + surface.radius * n_hat
        _check_nodes(domain, pts.reshape(-1, 3), "flux")
        b = np.asarray(field_fn(pts))
        br = np.sum(b * n_hat, axis=-1)
        return float(np.sum(br * w[:, None]) * w_az * surface.radius ** 2)
    raise TypeError(f"unsupported surface {surface!r}")
