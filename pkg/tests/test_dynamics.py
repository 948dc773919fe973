import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugebeam import dynamics
from gaugebeam.dynamics import (WavePacketState, build_lattice, evolve, gauge_transform,
                                gaussian_packet, hermiticity_error, observables, rotation_period,
                                step)
from gaugebeam.errors import DomainError, ParameterError, StepperError
from gaugebeam.fields import Grid, PhysicalConstants
from gaugebeam.gauge import GaugeFields
from gaugebeam.scenarios import make_scenario


def free_lattice(n=64, half=6.0):
    return build_lattice(None, Grid.square(half, n))


def pure_gauge(lam_grad):
    zero = lambda p: np.zeros(np.shape(p)[:-1])  # noqa: E731
    return GaugeFields(lam_grad, lambda p: np.zeros(np.shape(p)), zero, zero)


def test_free_lattice_is_five_point_laplacian():
    g = Grid.square(1.0, 5)
    lat = build_lattice(None, g)
    h = g.spacing[0]
    m = lat.matrix.toarray()
    assert np.allclose(m.imag, 0)
    assert np.allclose(np.diag(m), 2 / h ** 2)
    centre = 2 * 5 + 2
    row = m[centre]
    assert np.allclose(row[[centre - 5, centre + 5, centre - 1, centre + 1]], -0.5 / h ** 2)
    assert np.count_nonzero(row) == 5


def test_uniform_field_plaquettes():
    sc = make_scenario("disc", l=2, rho_max=4.0)
    g = Grid.square(2.0, 33)
    lat = build_lattice(sc.closed_form, g, potential="none")
    h = g.spacing[0]
    assert np.allclose(lat.plaquette_sums(), -0.25 * h * h, atol=1e-10)


def test_pure_gauge_has_zero_plaquettes():
    # A = grad(x^2 y) is linear along x-links' midpoints only to quadrature accuracy
    grad = lambda p: np.stack([2 * p[..., 0] * p[..., 1], p[..., 0] ** 2, 0 * p[..., 0]], axis=-1)  # noqa: E731
    lat = build_lattice(pure_gauge(grad), Grid.square(1.0, 41))
    h = lat.grid.spacing[0]
    assert np.max(np.abs(lat.plaquette_sums())) < 1e-12 + 0.5 * h ** 3


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=10)
def test_hermiticity(seed):
    sc = make_scenario("polynomial", a=1.0, b=0.3, l=2)
    lat = build_lattice(sc.closed_form, Grid.square(2.0, 24))
    assert hermiticity_error(lat, seed) < 1e-12
    m = lat.matrix
    assert abs(m - m.conj().T).max() == 0


def test_link_reversal_is_conjugate():
    sc = make_scenario("polynomial", a=1.0, b=0.0, l=1)
    lat = build_lattice(sc.closed_form, Grid.square(1.0, 6))
    m = lat.matrix.toarray()
    ny = 6
    i, j = 2, 3
    n, e = i * ny + j, (i + 1) * ny + j
    assert m[n, e] == pytest.approx(-lat.hopping[0] * np.exp(-1j * lat.theta_x[i, j]))
    assert m[e, n] == pytest.approx(np.conj(m[n, e]))


def test_masked_nodes_are_reported():
    sc = make_scenario("ring", l=2, rho_min=1.0, rho_max=3.0)
    with pytest.raises(DomainError, match="node"):
        build_lattice(sc.closed_form, Grid.square(2.0, 9))


def test_build_lattice_rejects_bad_input():
    with pytest.raises(ParameterError):
        build_lattice(None, Grid.radial(0, 1, 5))
    with pytest.raises(ParameterError):
        build_lattice(None, Grid.square(1, 5), potential="bogus")
    sc = make_scenario("polynomial", a=1.0, b=0.0, l=1)
    with pytest.raises(ParameterError):
        build_lattice(sc.closed_form, Grid.square(1, 5), potential="bogus")


def test_potential_options():
    traps = None
    sc = make_scenario("polynomial", a=1.0, b=0.0, l=1, traps=traps)
    g = Grid.square(1.0, 7)
    phi = build_lattice(sc.closed_form, g, potential="phi").site_potential
    veff = build_lattice(sc.closed_form, g, potential="v_eff").site_potential
    assert np.allclose(phi, veff)
    assert np.all(phi > 0)
    custom = build_lattice(sc.closed_form, g, potential=lambda p: p[..., 0] ** 2).site_potential
    assert np.allclose(custom, g.points()[..., 0] ** 2)


def test_packet_state_validation():
    g = Grid.square(1.0, 8)
    with pytest.raises(ParameterError):
        WavePacketState(np.ones((7, 8)), g)
    with pytest.raises(ParameterError):
        WavePacketState(np.full((8, 8), np.nan), g)
    with pytest.raises(ParameterError):
        gaussian_packet(g, sigma=0.0)
    assert gaussian_packet(Grid.square(6.0, 64)).norm() == pytest.approx(1.0, abs=1e-12)


def test_centred_gaussian_observables():
    g = Grid.square(6.0, 128)
    obs = observables(gaussian_packet(g, sigma=1.0))
    assert obs.center_of_mass == pytest.approx((0.0, 0.0), abs=1e-12)
    assert obs.angular_momentum_z == pytest.approx(0.0, abs=1e-12)
    assert obs.width == pytest.approx((1.0, 1.0), rel=1e-6)


def test_free_gaussian_energy():
    # psi ~ exp(-r^2 / 4 sigma^2): <p_x^2> = hbar^2 / (4 sigma^2) per axis, so <H> = hbar^2/(4 M sigma^2)
    g = Grid.square(8.0, 256)
    obs = observables(gaussian_packet(g, sigma=1.0))
    assert obs.energy == pytest.approx(0.25, rel=2e-3)
    moving = observables(gaussian_packet(g, sigma=1.0, velocity=(0.5, 0.0)), build_lattice(None, g))
    assert moving.energy == pytest.approx(0.25 + 0.125, rel=2e-3)


@pytest.mark.parametrize("l", [1, 2, 3])
def test_vortex_angular_momentum(l):
    g = Grid.square(6.0, 256)
    # the core sits between nodes
    c = (0.5 * g.spacing[0], 0.5 * g.spacing[1])
    obs = observables(gaussian_packet(g, center=c, sigma=1.0, vortex=l))
    assert obs.angular_momentum_z == pytest.approx(l, rel=1e-2)


def test_free_spreading_width_law_and_unitarity():
    g = Grid.square(8.0, 160)
    lat = build_lattice(None, g)
    traj = evolve(gaussian_packet(g, sigma=1.0), lat, 0.01, 200, every=20)
    w = traj.column("width_x")[-1]
    assert traj.times[-1] == pytest.approx(2.0)
    assert w == pytest.approx(np.sqrt(2), rel=5e-3)
    drift = np.abs(np.diff(traj.column("norm"))) / 20
    assert np.max(drift) <= 1e-10
    e = traj.column("energy")
    assert np.max(np.abs(e - e[0])) / e[0] <= 1e-8


def test_dt_must_be_positive_and_large_dt_warns_once():
    g = Grid.square(3.0, 32)
    lat = build_lattice(None, g)
    s = gaussian_packet(g)
    with pytest.raises(ParameterError):
        step(s, lat, 0.0)
    with pytest.warns(RuntimeWarning, match="exceeds"):
        s = step(s, lat, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        step(s, lat, 1.0)


def test_stepper_error_carries_residual(monkeypatch):
    monkeypatch.setattr(dynamics, "RESIDUAL_TOL", 0.0)
    g = Grid.square(3.0, 16)
    with pytest.raises(StepperError) as info:
        step(gaussian_packet(g), build_lattice(None, g), 0.01)
    assert info.value.residual is not None and info.value.residual >= 0


def test_constant_gauge_is_global_phase():
    g = Grid.square(3.0, 32)
    lat = build_lattice(None, g)
    s = gaussian_packet(g, velocity=(0.3, 0))
    s2, lat2 = gauge_transform(s, lat, np.full(g.shape, 0.7))
    assert np.allclose(s2.amplitudes, s.amplitudes * np.exp(0.7j))
    assert np.array_equal(lat2.theta_x, lat.theta_x)


def test_random_gauge_preserves_plaquettes_and_densities():
    sc = make_scenario("disc", l=4, rho_max=6.0)
    g = Grid.square(3.0, 48)
    lat = build_lattice(sc.closed_form, g)
    rng = np.random.default_rng(11)
    lam = rng.normal(size=g.shape)
    s = gaussian_packet(g, center=(0.5, 0.0), sigma=0.6)
    s2, lat2 = gauge_transform(s, lat, lam)
    assert np.max(np.abs(lat2.plaquette_sums() - lat.plaquette_sums())) < 1e-13
    a = evolve(s, lat, 0.01, 30, record_density=True)
    b = evolve(s2, lat2, 0.01, 30, record_density=True)
    assert np.max(np.abs(a.densities[-1] - b.densities[-1])) < 1e-10
    with pytest.raises(ParameterError):
        gauge_transform(s, lat, np.zeros((3, 3)))


def test_evolve_recording_and_callback():
    g = Grid.square(3.0, 24)
    seen = []
    traj = evolve(gaussian_packet(g), build_lattice(None, g), 0.01, 7, every=3,
                  record_density=True, callback=lambda st_: seen.append(st_.time))
    assert np.allclose(traj.times, [0, 0.03, 0.06, 0.07])
    assert len(traj.densities) == 4 and len(seen) == 3
    assert traj.final.time == pytest.approx(0.07)
    with pytest.raises(ParameterError):
        evolve(gaussian_packet(g), build_lattice(None, g), 0.01, 5, every=0)


def test_rotation_period_of_circle():
    t = np.linspace(0, 10, 2001)
    assert rotation_period(t, np.cos(1.3 * t), np.sin(1.3 * t)) == pytest.approx(2 * np.pi / 1.3, rel=1e-5)
    assert np.isnan(rotation_period(t[:100], np.cos(t[:100]), np.sin(t[:100])))


def test_constants_scale_hopping():
    g = Grid.square(1.0, 5)
    lat = build_lattice(None, g, PhysicalConstants(hbar=2.0, mass=0.5))
    assert lat.hopping[0] == pytest.approx(4.0 / g.spacing[0] ** 2)


def test_cyclotron_convergence_energy_and_return(cyclotron_runs):
    periods = {n: r["period"] for n, r in cyclotron_runs.items()}
    # self-convergence ratio 2^p under halving of h
    ratio = (periods[64] - periods[128]) / (periods[128] - periods[256])
    assert np.log2(ratio) >= 2.0
    fine = cyclotron_runs[256]
    e = fine["traj"].column("energy")
    assert np.max(np.abs(e - e[0])) / abs(e[0]) <= 1e-8
    t = fine["traj"].times
    cx, cy = fine["traj"].column("com_x"), fine["traj"].column("com_y")
    target = fine["expected"]
    x_t, y_t = np.interp(target, t, cx), np.interp(target, t, cy)
    diameter = 2 * 2.0  # v / omega_c with v = 2, omega_c = 1
    assert np.hypot(x_t - cx[0], y_t - cy[0]) <= 0.02 * diameter
