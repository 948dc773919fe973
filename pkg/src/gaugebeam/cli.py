"""
Command-line front end.

    gaugebeam field     --config run.ini [--out DIR] [--format csv,svg]
    gaugebeam design    --config run.ini
    gaugebeam evolve    --config run.ini [--seed N]
    gaugebeam adiabatic --config run.ini

Exit codes: 0 success, 2 configuration error, 3 domain or feasibility
error, 4 numerical (stepper) failure.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .adiabatic import velocity_sweep
from .config import RunConfig, parse_config
from .design import design_intensity_ratio
from .dynamics import build_lattice, evolve, gaussian_packet, rotation_period
from .errors import ConfigError, DomainError, FeasibilityError, ParameterError, StepperError
from .fields import Domain, Grid, sample_on_grid
from .gauge import AnnulusSurface, Disc, GaugeFields, Sphere, flux
from .output import heatmap, line_plot, locked_directory, write_csv, write_manifest
from .scenarios import RADIAL_KINDS, make_scenario

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4


def _scenario(cfg: RunConfig):
    params = {k: v for k, v in cfg.scenario.items() if k != "kind"}
    try:
        return make_scenario(cfg.scenario["kind"], params, cfg.constants, cfg.trap_potentials())
    except ParameterError as exc:
        raise ConfigError(f"[scenario] {exc}") from exc


class _Shifted(Domain):
    def __init__(self, base, dz):
        self.base, self.dz = base, np.array([0.0, 0.0, dz])
        self.scale = base.scale

    def contains(self, points):
        return self.base.contains(np.asarray(points) + self.dz)


def _shift(fn, dz):
    off = np.array([0.0, 0.0, dz])
    return lambda p: fn(np.asarray(p) + off)


def _coordinate_columns(grid: Grid):
    pts = grid.points().reshape(-1, 3)
    if grid.kind == "radial":
        return ["rho"], pts[:, :1], ("rho", "phi", "z")
    if grid.kind == "cartesian-2d":
        return ["x", "y"], pts[:, :2], ("x", "y", "z")
    return ["x", "y", "z"], pts, ("x", "y", "z")


def _field_derived(sc, gauge: GaugeFields):
    d = sc.derived
    out = {}
    if d is not None:
        hbar = sc.constants.hbar
        l = sc.winding
        rmax = sc.params["rho_max"]
        rmin = sc.params.get("rho_min", 0.0)
        surface = Disc(rmax) if sc.kind == "disc" else AnnulusSurface(rmin, rmax)
        out.update(cyclotron_freq=d.cyclotron_freq, magnetic_length=d.magnetic_length,
                   field_strength_bz=d.field_strength, total_flux=d.total_flux,
                   total_flux_quadrature=flux(sc.generic_fields().b_eff, surface, sc.domain),
                   total_flux_expected=-2 * np.pi * hbar * l)
    elif sc.kind == "monopole":
        out.update(total_flux=-2 * np.pi * sc.constants.hbar * sc.winding,
                   total_flux_quadrature=flux(sc.generic_fields().b_eff, Sphere(1.0), sc.domain),
                   excluded_region=sc.beams.diagnostic)
    return out


def run_field(cfg: RunConfig, out_dir: Path, formats, quiet=False):
    sc = _scenario(cfg)
    gauge = sc.closed_form if cfg.field["form"] == "closed" else sc.generic_fields(cfg.trap_potentials())
    grid, z = cfg.grid, cfg.grid_z
    dz = z if grid.kind != "cartesian-3d" else 0.0
    domain = _Shifted(sc.domain, dz)
    a = sample_on_grid(_shift(gauge.a_eff, dz), grid, domain)
    b = sample_on_grid(_shift(gauge.b_eff, dz), grid, domain)
    phi = sample_on_grid(_shift(gauge.phi_geom, dz), grid, domain)
    u = sample_on_grid(_shift(gauge.u_trap, dz), grid, domain)
    mask = (a.mask | b.mask | phi.mask | u.mask).reshape(-1)

    names, coords, comp = _coordinate_columns(grid)
    av, bv = a.values.reshape(-1, 3), b.values.reshape(-1, 3)
    pv, uv = phi.values.reshape(-1), u.values.reshape(-1)
    cols = names + [f"A_{c}" for c in comp] + [f"B_{c}" for c in comp] + ["phi", "U", "V_eff"]
    data = np.column_stack([coords, av, bv, pv, uv, pv + uv])
    data[mask, len(names):] = np.nan

    files = []
    expected = ["field.csv", "manifest.json"] + (["phi.svg", "bz.svg"] if "svg" in formats else [])
    with locked_directory(out_dir, cfg.output["overwrite"], expected):
        if "csv" in formats:
            write_csv(out_dir / "field.csv", cols, data, mask)
            files.append("field.csv")
        if "svg" in formats:
            title = f"{sc.kind} l={sc.winding}"
            if grid.kind == "radial":
                rho = coords[:, 0]
                line_plot(out_dir / "phi.svg", rho, {"phi": data[:, cols.index("phi")]},
                          f"geometric scalar potential, {title}", "rho", "phi")
                line_plot(out_dir / "bz.svg", rho, {"B_z": data[:, cols.index("B_z")]},
                          f"axial field, {title}", "rho", "B_z")
            else:
                shape = grid.shape
                sl = (slice(None), slice(None)) + ((shape[2] // 2,) if grid.kind == "cartesian-3d" else ())
                ext = grid.extents[:2]
                heatmap(out_dir / "phi.svg", data[:, cols.index("phi")].reshape(shape)[sl], ext,
                        f"phi, {title}")
                heatmap(out_dir / "bz.svg", data[:, cols.index("B_z")].reshape(shape)[sl], ext,
                        f"B_z, {title}")
            files += ["phi.svg", "bz.svg"]
        manifest = {"command": "field", "version": __version__, "scenario": cfg.scenario,
                    "constants": vars(cfg.constants), "form": cfg.field["form"],
                    "grid": {"kind": grid.kind, "extents": grid.extents, "counts": grid.counts, "z": z},
                    "masked_nodes": int(mask.sum()), "derived": _field_derived(sc, gauge)}
        write_manifest(out_dir, manifest, files)
    if not quiet:
        print(f"field: {sc.kind} on {grid.kind} grid {grid.counts}, {int(mask.sum())} masked node(s)")
        for k, v in sorted(manifest["derived"].items()):
            print(f"  {k} = {v}")
    return files + ["manifest.json"]


def _design_target(cfg: RunConfig):
    d = cfg.design
    kind = d["target"]
    if kind == "zero":
        return lambda r: 0.0
    if kind == "constant":
        return lambda r: d["value"]
    if kind == "bessel":
        try:
            return make_scenario("bessel", dict(a=d["a"], b=d["b"], l=d["l"]), cfg.constants).radial_bz
        except ParameterError as exc:
            raise ConfigError(f"[design] {exc}") from exc
    sc = _scenario(cfg)
    if sc.kind not in RADIAL_KINDS:
        raise ConfigError(f"[design] target = scenario needs a radial scenario, not {sc.kind!r}")
    return sc.radial_bz


def run_design(cfg: RunConfig, out_dir: Path, formats, quiet=False):
    d = cfg.design
    target = _design_target(cfg)
    try:
        res = design_intensity_ratio(target, d["l"], (d["boundary_rho"], d["boundary_cos2alpha"]),
                                     tuple(d["interval"]), cfg.constants, d.get("samples", 1001),
                                     d.get("strict", False))
    except ParameterError as exc:
        raise ConfigError(f"[design] {exc}") from exc
    rho = res.rho
    bz = np.array([float(target(r)) for r in rho])
    data = np.column_stack([rho, res.cos2alpha_samples, res.abs2_samples, bz])
    files = []
    expected = ["design.csv", "manifest.json"] + (["design.svg"] if "svg" in formats else [])
    with locked_directory(out_dir, cfg.output["overwrite"], expected):
        if "csv" in formats:
            write_csv(out_dir / "design.csv", ["rho", "cos2alpha", "zeta_abs2", "B_z_target"], data)
            files.append("design.csv")
        if "svg" in formats:
            line_plot(out_dir / "design.svg", rho, {"cos 2 alpha": res.cos2alpha_samples},
                      "designed mixing profile", "rho", "cos 2 alpha", ylim=(-1.0, 1.0))
            files.append("design.svg")
        manifest = {"command": "design", "version": __version__, "design": d,
                    "constants": vars(cfg.constants), "feasible_interval": list(res.feasible),
                    "edges": res.edges, "requested_interval": list(res.interval)}
        write_manifest(out_dir, manifest, files)
    if not quiet:
        print(f"design: feasible on [{res.feasible[0]:.10g}, {res.feasible[1]:.10g}]"
              + (f", |zeta|^2 -> inf at {res.edges}" if res.edges else ""))
    return files + ["manifest.json"]


def run_evolve(cfg: RunConfig, out_dir: Path, formats, seed=0, quiet=False):
    e = cfg.evolve
    sc = _scenario(cfg)
    grid, z = cfg.grid, cfg.grid_z
    constants = cfg.constants
    lattice = build_lattice(sc.closed_form, grid, constants, e.get("potential", "v_eff"), z)
    center = np.array(e["center"], float)
    if e.get("jitter", 0.0) > 0:
        center = center + e["jitter"] * np.random.default_rng(seed).standard_normal(2)
    a0 = np.asarray(sc.closed_form.a_eff(np.array([center[0], center[1], z])), float)[:2]
    state = gaussian_packet(grid, tuple(center), e["sigma"], tuple(e.get("velocity", (0.0, 0.0))),
                            e.get("vortex", 0), constants, tuple(a0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if quiet else "default", RuntimeWarning)
        traj = evolve(state, lattice, e["dt"], e["steps"], e.get("every", 1),
                      record_density=False)
    names = ["t", "norm", "com_x", "com_y", "width_x", "width_y", "Lz", "energy"]
    data = np.column_stack([traj.column(n if n != "t" else "time") for n in names])
    files = []
    snaps = e.get("snapshots", False)
    expected = (["observables.csv", "manifest.json"] + (["density_initial.csv", "density_final.csv"] if snaps else [])
                + (["trajectory.svg"] if "svg" in formats else []))
    with locked_directory(out_dir, cfg.output["overwrite"], expected):
        if "csv" in formats:
            write_csv(out_dir / "observables.csv", names, data)
            files.append("observables.csv")
            if snaps:
                pts = grid.points().reshape(-1, 3)[:, :2]
                for tag, st in (("initial", state), ("final", traj.final)):
                    write_csv(out_dir / f"density_{tag}.csv", ["x", "y", "density"],
                              np.column_stack([pts, st.density.reshape(-1)]))
                    files.append(f"density_{tag}.csv")
        if "svg" in formats:
            line_plot(out_dir / "trajectory.svg", data[:, 2], {"centre of mass": data[:, 3]},
                      "centre-of-mass trajectory", "x", "y")
            files.append("trajectory.svg")
        manifest = {"command": "evolve", "version": __version__, "scenario": cfg.scenario,
                    "constants": vars(constants), "evolve": e, "seed": seed,
                    "packet_center": list(center),
                    "grid": {"kind": grid.kind, "extents": grid.extents, "counts": grid.counts, "z": z},
                    "max_norm_drift": float(np.max(np.abs(data[:, 1] - data[0, 1])))}
        if e.get("detect_period", False):
            manifest["measured_period"] = rotation_period(data[:, 0], data[:, 2], data[:, 3])
            if sc.derived is not None and sc.derived.cyclotron_freq > 0:
                manifest["expected_period"] = 2 * np.pi / sc.derived.cyclotron_freq
        write_manifest(out_dir, manifest, files)
    if not quiet:
        print(f"evolve: {e['steps']} steps of dt = {e['dt']:g}, final norm {data[-1, 1]:.15g}")
        if "measured_period" in manifest:
            print(f"  measured period = {manifest['measured_period']:.10g}"
                  + (f" (expected {manifest['expected_period']:.10g})" if "expected_period" in manifest else ""))
    return files + ["manifest.json"]


def run_adiabatic(cfg: RunConfig, out_dir: Path, formats, quiet=False):
    ad = cfg.adiabatic
    sc = _scenario(cfg)
    pair = sc.beam_pair(ad.get("omega0", 1.0))
    reports = velocity_sweep(pair, np.array(ad["point"], float), ad["direction"], ad["speeds"], cfg.constants)
    speeds = np.asarray(ad["speeds"], float)
    data = np.array([[s, r.f_value, r.total_rabi, r.margin, np.nan if r.lifetime is None else r.lifetime]
                     for s, r in zip(speeds, reports)])
    files = []
    expected = ["adiabatic.csv", "manifest.json"] + (["adiabatic.svg"] if "svg" in formats else [])
    with locked_directory(out_dir, cfg.output["overwrite"], expected):
        if "csv" in formats:
            write_csv(out_dir / "adiabatic.csv", ["speed", "f_value", "total_rabi", "margin", "lifetime"], data)
            files.append("adiabatic.csv")
        if "svg" in formats:
            line_plot(out_dir / "adiabatic.svg", speeds, {"F / Omega": data[:, 3]},
                      "adiabaticity margin", "speed", "F / Omega")
            files.append("adiabatic.svg")
        manifest = {"command": "adiabatic", "version": __version__, "scenario": cfg.scenario,
                    "constants": vars(cfg.constants), "adiabatic": ad,
                    "lifetime_note": "order-of-magnitude estimate; nan when gamma3 = 0 or F = 0"}
        write_manifest(out_dir, manifest, files)
    if not quiet:
        for s, r in zip(speeds, reports):
            print(f"  v = {s:g}: F = {r.f_value:.6g}, Omega = {r.total_rabi:.6g}, margin = {r.margin:.6g}"
                  + (f", lifetime ~ {r.lifetime:.3g}" if r.lifetime is not None else ""))
    return files + ["manifest.json"]


COMMANDS = {"field": run_field, "design": run_design, "evolve": run_evolve, "adiabatic": run_adiabatic}


def build_parser():
    parser = argparse.ArgumentParser(prog="gaugebeam",
                                     description="Effective gauge fields for dark-state atoms in shaped beams.")
    parser.add_argument("--version", action="version", version=f"gaugebeam {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"field": "sample A, B, phi, U and V_eff for a scenario",
             "design": "integrate the intensity ratio for a target axial field",
             "evolve": "evolve a wave packet on the Peierls lattice",
             "adiabatic": "adiabaticity report over a velocity sweep"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--out", help="output directory (overrides [output] directory)")
        p.add_argument("--format", help="comma-separated subset of csv,svg")
        p.add_argument("--seed", type=int, default=0, help="seed for packet randomisation")
        p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.command)
        out_dir = Path(args.out or cfg.output["directory"])
        formats = cfg.output["formats"]
        if args.format:
            formats = [f.strip() for f in args.format.split(",") if f.strip()]
            bad = sorted(set(formats) - {"csv", "svg"})
            if bad:
                raise ConfigError(f"--format: unknown formats {bad}")
        kwargs = {"seed": args.seed} if args.command == "evolve" else {}
        COMMANDS[args.command](cfg, out_dir, formats, quiet=args.quiet, **kwargs)
    except DomainError as exc:
        return _fail(exc, EXIT_DOMAIN)
    except (ConfigError, ParameterError) as exc:
        return _fail(exc, EXIT_CONFIG)
    except StepperError as exc:
        return _fail(exc, EXIT_NUMERIC)
    return EXIT_OK


def _fail(exc, code):
    extra = ""
    if isinstance(exc, FeasibilityError) and exc.exit_radius is not None:
        extra = f" (exit radius {exc.exit_radius:.10g})"
    print(f"gaugebeam: error: {exc}{extra}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
