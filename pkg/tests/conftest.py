import time
import warnings

import numpy as np
import pytest
from hypothesis import settings

from gaugebeam.dynamics import build_lattice, evolve, gaussian_packet, rotation_period
from gaugebeam.fields import Grid
from gaugebeam.scenarios import make_scenario

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

_ACCEPTANCE = pytest.StashKey[dict]()

# Uniform-field disc with omega_c = 1 and magnetic length 1, large enough that
# a square box with 5 sigma margins around the orbit fits inside rho_max.
CYCLOTRON = dict(l=72, rho_max=12.0, half_width=7.5, center=(2.0, 0.0), sigma=1.0,
                 velocity=(0.0, 2.0), dt=0.01, steps=700)


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def record(request):
    """Record one acceptance line: record(number, title, ok, detail)."""
    log = request.config.stash[_ACCEPTANCE]

    def _record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        log[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        terminalreporter.write_line(log.get(n, f"criterion {n:>2} FAIL  (no result recorded)"))


def run_cyclotron(n):
    p = CYCLOTRON
    t0 = time.perf_counter()
    sc = make_scenario("disc", l=p["l"], rho_max=p["rho_max"])
    grid = Grid.square(p["half_width"], n)
    lattice = build_lattice(sc.closed_form, grid, potential="none")
    a0 = sc.closed_form.a_eff(np.array([p["center"][0], p["center"][1], 0.0]))[:2]
    state = gaussian_packet(grid, p["center"], p["sigma"], p["velocity"], vector_potential=tuple(a0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        traj = evolve(state, lattice, p["dt"], p["steps"])
    elapsed = time.perf_counter() - t0
    period = rotation_period(traj.times, traj.column("com_x"), traj.column("com_y"))
    return dict(period=period, expected=2 * np.pi / sc.derived.cyclotron_freq, traj=traj,
                elapsed=elapsed, scenario=sc)


@pytest.fixture(scope="session")
def cyclotron_runs():
    return {n: run_cyclotron(n) for n in (64, 128, 256)}
