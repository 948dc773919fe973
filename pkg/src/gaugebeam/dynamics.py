"""
Dark-state wave-packet dynamics on a 2D lattice.

The effective Hamiltonian (p - A)^2 / 2M + V is discretised with Peierls
link phases: the hopping from node n to its +x neighbour carries
exp(-i theta_x[n]) with theta_x[n] = (1/hbar) A_x(midpoint) h_x.  This keeps
the operator Hermitian and gauge covariant on the lattice.  Time stepping is
Crank-Nicolson with a cached sparse LU factorisation.  Grid edges are
hard walls.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DomainError, ParameterError, StepperError, format_points
from .fields import NATURAL, Grid, PhysicalConstants
from .gauge import GaugeFields

RESIDUAL_TOL = 1e-12
_MAX_REFINE = 3


@dataclass
class WavePacketState:
    amplitudes: np.ndarray
    grid: Grid
    time: float = 0.0
    constants: PhysicalConstants = NATURAL

    def __post_init__(self):
        if self.grid.kind != "cartesian-2d":
            raise ParameterError("wave packets live on cartesian-2d grids")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != self.grid.shape:
            raise ParameterError(f"amplitudes shape {self.amplitudes.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ParameterError("wave-packet amplitudes must be finite")

    @property
    def cell_area(self):
        hx, hy = self.grid.spacing
        return hx * hy

    @property
    def density(self):
        return np.abs(self.amplitudes) ** 2

    def norm(self):
        return float(np.sum(self.density) * self.cell_area)


@dataclass
class LatticeHamiltonian:
    """Peierls tight-binding Hamiltonian on a cartesian-2d grid.

    ``theta_x`` has shape (nx-1, ny) and links (i, j) -> (i+1, j);
    ``theta_y`` has shape (nx, ny-1) and links (i, j) -> (i, j+1).
    Reversing a link negates its phase.
    """

    grid: Grid
    theta_x: np.ndarray
    theta_y: np.ndarray
    site_potential: np.ndarray
    constants: PhysicalConstants = NATURAL
    _matrix: Optional[sp.csr_matrix] = field(default=None, repr=False)
    _lu_cache: dict = field(default_factory=dict, repr=False)
    _warned: set = field(default_factory=set, repr=False)

    @property
    def hopping(self):
        hx, hy = self.grid.spacing
        k = self.constants.hbar ** 2 / (2 * self.constants.mass)
        return k / hx ** 2, k / hy ** 2

    @property
    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            self._matrix = self._assemble()
        return self._matrix

    def _assemble(self):
        nx, ny = self.grid.shape
        tx, ty = self.hopping
        idx = np.arange(nx * ny).reshape(nx, ny)
        diag = (2 * tx + 2 * ty + self.site_potential).ravel().astype(complex)
        fx = (-tx * np.exp(-1j * self.theta_x)).ravel()
        fy = (-ty * np.exp(-1j * self.theta_y)).ravel()
        rows = np.concatenate([idx.ravel(), idx[:-1].ravel(), idx[1:].ravel(),
                               idx[:, :-1].ravel(), idx[:, 1:].ravel()])
        cols = np.concatenate([idx.ravel(), idx[1:].ravel(), idx[:-1].ravel(),
                               idx[:, 1:].ravel(), idx[:, :-1].ravel()])
        data = np.concatenate([diag, fx, np.conj(fx), fy, np.conj(fy)])
        return sp.csr_matrix((data, (rows, cols)), shape=(nx * ny, nx * ny))

    def apply(self, psi):
        return (self.matrix @ np.asarray(psi).ravel()).reshape(self.grid.shape)

    def plaquette_sums(self):
        """Oriented sum of link phases around each cell (counter-clockwise)."""
        tx, ty = self.theta_x, self.theta_y
        return tx[:, :-1] + ty[1:, :] - tx[:, 1:] - ty[:-1, :]

    def covariant_difference(self, psi):
        """Centred covariant differences (D_x psi, D_y psi) with zero outside the grid."""
        psi = np.asarray(psi, complex)
        hx, hy = self.grid.spacing
        fwd_x = np.zeros_like(psi)
        bwd_x = np.zeros_like(psi)
        fwd_x[:-1] = np.exp(-1j * self.theta_x) * psi[1:]
        bwd_x[1:] = np.exp(1j * self.theta_x) * psi[:-1]
        fwd_y = np.zeros_like(psi)
        bwd_y = np.zeros_like(psi)
        fwd_y[:, :-1] = np.exp(-1j * self.theta_y) * psi[:, 1:]
        bwd_y[:, 1:] = np.exp(1j * self.theta_y) * psi[:, :-1]
        return (fwd_x - bwd_x) / (2 * hx), (fwd_y - bwd_y) / (2 * hy)

    def propagator(self, dt):
        """Cached LU factorisation of (I + i dt H / 2 hbar)."""
        key = float(dt)
        if key not in self._lu_cache:
            tau = dt / (2 * self.constants.hbar)
            n = self.matrix.shape[0]
            a = (sp.identity(n, dtype=complex, format="csc") + 1j * tau * self.matrix.tocsc()).tocsc()
            self._lu_cache[key] = (a, splu(a))
        return self._lu_cache[key]


def _midpoints(grid: Grid, z):
    x, y = grid.axes()
    mx = np.zeros((len(x) - 1, len(y), 3))
    mx[..., 0] = 0.5 * (x[:-1] + x[1:])[:, None]
    mx[..., 1] = y[None, :]
    my = np.zeros((len(x), len(y) - 1, 3))
    my[..., 0] = x[:, None]
    my[..., 1] = 0.5 * (y[:-1] + y[1:])[None, :]
    mx[..., 2] = z
    my[..., 2] = z
    return mx, my


def _require_inside(domain, pts, what):
    if domain is None:
        return
    inside = domain.contains(pts)
    if not np.all(inside):
        bad = pts[~inside].reshape(-1, 3)
        raise DomainError(f"{len(bad)} masked {what} inside the lattice: {format_points(bad)}", points=bad)


def build_lattice(gauge: Optional[GaugeFields], grid: Grid, constants: PhysicalConstants = NATURAL,
                  potential: Union[str, Callable] = "v_eff", z: float = 0.0) -> LatticeHamiltonian:
    """Peierls lattice for the effective Hamiltonian.

    Parameters
    ----------
    gauge : GaugeFields or None
        None gives the free particle.
    potential : {"v_eff", "phi", "u", "none"} or callable
        Site potential.  A callable maps Cartesian points to energies.
    z : float
        Height of the lattice plane.
    """
    if grid.kind != "cartesian-2d":
        raise ParameterError("build_lattice needs a cartesian-2d grid")
    nodes = grid.points()
    nodes[..., 2] = z
    mx, my = _midpoints(grid, z)
    hx, hy = grid.spacing
    hbar = constants.hbar
    if gauge is None:
        theta_x = np.zeros(mx.shape[:-1])
        theta_y = np.zeros(my.shape[:-1])
    else:
        _require_inside(gauge.domain, nodes, "node(s)")
        _require_inside(gauge.domain, mx, "x-link midpoint(s)")
        _require_inside(gauge.domain, my, "y-link midpoint(s)")
        theta_x = np.asarray(gauge.a_eff(mx))[..., 0] * hx / hbar
        theta_y = np.asarray(gauge.a_eff(my))[..., 1] * hy / hbar

    if callable(potential):
        v = np.asarray(potential(nodes), float)
    elif potential == "none" or gauge is None:
        if potential not in ("none", "v_eff", "phi", "u"):
            raise ParameterError(f"unknown potential option {potential!r}")
        v = np.zeros(grid.shape)
    elif potential == "v_eff":
        v = np.asarray(gauge.v_eff(nodes), float)
    elif potential == "phi":
        v = np.asarray(gauge.phi_geom(nodes), float)
    elif potential == "u":
        v = np.asarray(gauge.u_trap(nodes), float)
    else:
        raise ParameterError(f"unknown potential option {potential!r}")
    v = np.broadcast_to(v, grid.shape).astype(float)
    if not (np.all(np.isfinite(theta_x)) and np.all(np.isfinite(theta_y)) and np.all(np.isfinite(v))):
        raise DomainError("gauge fields are not finite on the lattice")
    return LatticeHamiltonian(grid, theta_x, theta_y, v, constants)


def gaussian_packet(grid: Grid, center=(0.0, 0.0), sigma=1.0, velocity=(0.0, 0.0), vortex: int = 0,
                    constants: PhysicalConstants = NATURAL, vector_potential=(0.0, 0.0),
                    time: float = 0.0) -> WavePacketState:
    """Normalised Gaussian with rms density width ``sigma`` per axis.

    The phase factor is exp(i (M v + A) . r / hbar), where ``vector_potential``
    is A at the packet centre, so ``velocity`` is the kinetic velocity.
    ``vortex`` multiplies by exp(i l azimuth) about the centre.
    """
    if not sigma > 0:
        raise ParameterError("sigma must be > 0")
    x, y = grid.axes()
    X, Y = np.meshgrid(x - center[0], y - center[1], indexing="ij")
    psi = np.exp(-(X ** 2 + Y ** 2) / (4 * sigma ** 2)).astype(complex)
    kx = (constants.mass * velocity[0] + vector_potential[0]) / constants.hbar
    ky = (constants.mass * velocity[1] + vector_potential[1]) / constants.hbar
    psi *= np.exp(1j * (kx * X + ky * Y))
    if vortex:
        psi *= np.exp(1j * int(vortex) * np.arctan2(Y, X))
    hx, hy = grid.spacing
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * hx * hy)
    return WavePacketState(psi, grid, time, constants)


def step(state: WavePacketState, h_lat: LatticeHamiltonian, dt: float) -> WavePacketState:
    """One Crank-Nicolson step.

    Raises
    ------
    StepperError
        If the linear solve cannot reach a relative residual of 1e-12.
    """
    if not dt > 0:
        raise ParameterError("dt must be > 0")
    hx, hy = state.grid.spacing
    limit = state.constants.mass * min(hx, hy) ** 2 / state.constants.hbar
    if dt > limit and float(dt) not in h_lat._warned:
        h_lat._warned.add(float(dt))
        warnings.warn(f"dt = {dt:g} exceeds M h^2 / hbar = {limit:g}; fine-scale phases are not resolved",
                      RuntimeWarning, stacklevel=2)
    a, lu = h_lat.propagator(dt)
    psi = state.amplitudes.ravel()
    tau = dt / (2 * state.constants.hbar)
    b = psi - 1j * tau * (h_lat.matrix @ psi)
    new = lu.solve(b)
    scale = np.linalg.norm(b)
    res = np.linalg.norm(b - a @ new) / scale
    for _ in range(_MAX_REFINE):
        if res <= RESIDUAL_TOL:
            break
        new = new + lu.solve(b - a @ new)
        res = np.linalg.norm(b - a @ new) / scale
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise StepperError(f"Crank-Nicolson solve residual {res:.3e} above {RESIDUAL_TOL:g}", residual=res)
    return replace(state, amplitudes=new.reshape(state.grid.shape), time=state.time + dt)


@dataclass(frozen=True)
class Observables:
    time: float
    norm: float
    center_of_mass: tuple
    width: tuple
    angular_momentum_z: float
    energy: float


def observables(state: WavePacketState, h_lat: Optional[LatticeHamiltonian] = None) -> Observables:
    """Norm, centre of mass, rms widths, kinetic L_z and energy.

    L_z = x Pi_y - y Pi_x with Pi = -i hbar D, D the covariant centred
    difference; it is gauge invariant and reduces to the canonical
    -i hbar d/d azimuth when A = 0.
    """
    if h_lat is None:
        h_lat = build_lattice(None, state.grid, state.constants)
    psi = state.amplitudes
    da = state.cell_area
    rho = np.abs(psi) ** 2
    norm = float(np.sum(rho) * da)
    x, y = state.grid.axes()
    X, Y = np.meshgrid(x, y, indexing="ij")
    cx = float(np.sum(X * rho) * da / norm)
    cy = float(np.sum(Y * rho) * da / norm)
    wx = float(np.sqrt(max(np.sum((X - cx) ** 2 * rho) * da / norm, 0.0)))
    wy = float(np.sqrt(max(np.sum((Y - cy) ** 2 * rho) * da / norm, 0.0)))
    hbar = state.constants.hbar
    dx, dy = h_lat.covariant_difference(psi)
    lz_density = np.conj(psi) * (-1j * hbar) * (X * dy - Y * dx)
    lz = float(np.real(np.sum(lz_density)) * da / norm)
    energy = float(np.real(np.vdot(psi.ravel(), h_lat.matrix @ psi.ravel())) * da / norm)
    return Observables(state.time, norm, (cx, cy), (wx, wy), lz, energy)


@dataclass
class Trajectory:
    times: np.ndarray
    observables: list
    densities: Optional[list] = None
    final: Optional[WavePacketState] = None

    def column(self, name):
        if name in ("com_x", "com_y"):
            return np.array([o.center_of_mass[name == "com_y"] for o in self.observables])
        if name in ("width_x", "width_y"):
            return np.array([o.width[name == "width_y"] for o in self.observables])
        if name == "Lz":
            name = "angular_momentum_z"
        return np.array([getattr(o, name) for o in self.observables])


def evolve(state: WavePacketState, h_lat: LatticeHamiltonian, dt: float, steps: int, every: int = 1,
           record_density: bool = False, callback: Optional[Callable] = None) -> Trajectory:
    """Advance ``steps`` Crank-Nicolson steps, recording observables every ``every`` steps."""
    if steps < 0 or every < 1:
        raise ParameterError("steps must be >= 0 and every >= 1")
    obs = [observables(state, h_lat)]
    dens = [state.density.copy()] if record_density else None
    for k in range(1, steps + 1):
        state = step(state, h_lat, dt)
        if k % every == 0 or k == steps:
            obs.append(observables(state, h_lat))
            if record_density:
                dens.append(state.density.copy())
            if callback is not None:
                callback(state)
    return Trajectory(np.array([o.time for o in obs]), obs, dens, state)


def gauge_transform(state: WavePacketState, h_lat: LatticeHamiltonian, lam):
    """Apply psi -> psi exp(i Lambda / hbar), theta -> theta + (Lambda_m - Lambda_n) / hbar.

    ``lam`` is an array over the grid nodes or a callable of Cartesian points.
    Returns the transformed (state, lattice).
    """
    if callable(lam):
        lam = lam(state.grid.points())
    lam = np.asarray(lam, float)
    if lam.shape != state.grid.shape:
        raise ParameterError(f"Lambda shape {lam.shape} does not match grid {state.grid.shape}")
    hbar = state.constants.hbar
    new_state = replace(state, amplitudes=state.amplitudes * np.exp(1j * lam / hbar))
    new_lat = LatticeHamiltonian(h_lat.grid, h_lat.theta_x + np.diff(lam, axis=0) / hbar,
                                 h_lat.theta_y + np.diff(lam, axis=1) / hbar,
                                 h_lat.site_potential.copy(), h_lat.constants)
    return new_state, new_lat


def hermiticity_error(h_lat: LatticeHamiltonian, rng=None) -> float:
    """Relative |<u, Hv> - <Hu, v>| for random complex vectors."""
    rng = np.random.default_rng(rng)
    n = h_lat.matrix.shape[0]
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    hu, hv = h_lat.matrix @ u, h_lat.matrix @ v
    lhs, rhs = np.vdot(u, hv), np.vdot(hu, v)
    return float(abs(lhs - rhs) / max(abs(lhs), np.linalg.norm(hu) * np.linalg.norm(v) * 1e-300))


def rotation_period(times, com_x, com_y):
    """Time for the centre-of-mass velocity to turn through one full revolution.

    Velocities come from centred differences of the sampled trajectory; the
    crossing of 2 pi in the unwrapped angle is linearly interpolated.
    Returns NaN if no full revolution is recorded.
    """
    t = np.asarray(times, float)
    vx = np.gradient(np.asarray(com_x, float), t, edge_order=2)
    vy = np.gradient(np.asarray(com_y, float), t, edge_order=2)
    ang = np.unwrap(np.arctan2(vy, vx))
    turn = np.abs(ang - ang[0])
    hit = np.flatnonzero(turn >= 2 * np.pi)
    if not len(hit):
        return float("nan")
    k = hit[0]
    f = (2 * np.pi - turn[k - 1]) / (turn[k] - turn[k - 1])
    return float(t[k - 1] + f * (t[k] - t[k - 1]))
