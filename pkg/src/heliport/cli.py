"""Command-line entry point.

Usage: heliport <mode> --config <path> [--out <dir>] [--threads <n>]
[--dump-matrices], where <mode> is one of run / dynamics / bands / zak /
field / check.  `run` executes whatever mode the config declares; the named
subcommands additionally require the config to match.

Thread pinning must happen before numpy is imported, so the BLAS thread
variables are set from --threads (or the HELIPORT_THREADS environment
variable) by scanning argv up front; all engine imports live inside the
runner functions.

Exit codes: 0 success, 1 usage/configuration error, 2 numerical failure or
failed self-checks.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

THREADS_ENV = "HELIPORT_THREADS"
_BLAS_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
              "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")
_MODES = ("run", "dynamics", "bands", "zak", "field", "check")


def _scan_threads(argv) -> str | None:
    threads = os.environ.get(THREADS_ENV)
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            threads = argv[i + 1]
        elif arg.startswith("--threads="):
            threads = arg.split("=", 1)[1]
    return threads


def _apply_threads(spec: str | None) -> int | None:
    if spec is None:
        return None
    try:
        n = int(spec)
    except ValueError:
        return None  # argparse reports the bad value later
    if n < 1:
        return None
    for var in _BLAS_VARS:
        os.environ[var] = str(n)
    return n


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heliport",
        description="Chiral photon transport in dipole-coupled emitter helices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _MODES:
        p = sub.add_parser(name, help=f"{name} mode" if name != "run"
                           else "run the mode declared in the config")
        p.add_argument("--config", required=True, help="path to a JSON run config")
        p.add_argument("--out", default=None,
                       help="output directory (default: <config stem>_out)")
        p.add_argument("--threads", type=int, default=None,
                       help="BLAS/OpenMP thread count (also HELIPORT_THREADS)")
        p.add_argument("--dump-matrices", action="store_true",
                       help="also write the J and Gamma coupling matrices")
    return parser


def _resolve_config_path(raw: str) -> Path:
    """Literal path first; fall back to the packaged config directory."""
    path = Path(raw)
    if path.is_file():
        return path
    if path.parent == Path("."):
        name = path.name if path.suffix == ".json" else path.name + ".json"
        packaged = Path(__file__).parent / "configs" / name
        if packaged.is_file():
            return packaged
    return path


def _fail(messages, code: int) -> int:
    for msg in messages:
        print(f"error: {msg}", file=sys.stderr)
    return code


def _run_dynamics(cfg, geom, out_dir: Path):
    import numpy as np

    from . import dynamics, hamiltonian, output

    h = hamiltonian.effective(hamiltonian.assemble(geom), cfg.hermitian_only)
    state = dynamics.initial_state(geom.n_sites, cfg.site, cfg.p_up)
    times = np.linspace(0.0, cfg.t_max, cfg.n_times)
    series = dynamics.evolve(state, h, geom, times, deadband=cfg.helicity_deadband)
    output.write_timeseries_csv(out_dir / "timeseries.csv", series)
    outputs = ["timeseries.csv"]

    prop = dynamics.Propagator(h)
    for t in cfg.snapshot_times:
        per_site = np.zeros((geom.n_sites, 2))
        for w, a0 in zip(state.weights, state.amplitudes):
            amp = prop.propagate(a0, np.array([float(t)]))[0]
            per_site += w * np.abs(amp.reshape(-1, 2)) ** 2
        name = f"snapshot_t{t:g}.csv"
        output.write_snapshot_csv(out_dir / name, geom, per_site)
        outputs.append(name)

    arrival = dynamics.arrival_time(series, geom)
    diagnostics = {
        "propagator_fallback": prop.use_stepper,
        "arrival_time": arrival,
        "final_trace": float(series.trace[-1]),
        "helicity_defined_fraction": float(np.mean(~np.isnan(series.eta))),
    }
    return outputs, diagnostics


def _run_bands(cfg, out_dir: Path):
    import numpy as np

    from . import bloch, output

    grid = bloch.brillouin_grid(cfg.helix.pitch, cfg.bloch_n_k)
    bands = bloch.band_structure(cfg.helix, grid, m_cut=cfg.bloch_m_cut,
                                 hermitian_only=cfg.hermitian_only)
    output.write_bands_csv(out_dir / "bands.csv", bands)
    diagnostics = {
        "m_cut": bands.m_cut,
        "coupling_convergence": bands.convergence,
        "continuation_ambiguous_points": int(np.count_nonzero(bands.continuation_ambiguous)),
        "min_gamma": float(bands.gammas.min()),
        "max_gamma": float(bands.gammas.max()),
    }
    return ["bands.csv"], diagnostics


def _run_zak(cfg, out_dir: Path):
    from . import bloch, output, topology

    grid = bloch.brillouin_grid(cfg.helix.pitch, cfg.bloch_n_k)
    bands = bloch.band_structure(cfg.helix, grid, m_cut=cfg.bloch_m_cut,
                                 hermitian_only=True)
    gap = topology.detect_gap(bands)
    if gap.gapped:
        groups = [("lower", gap.lower_bands), ("upper", gap.upper_bands)]
    else:
        groups = [("all", gap.lower_bands)]

    records, ill = [], []
    for group_name, subset in groups:
        res = topology.zak_phase(cfg.helix, subset, n_k=cfg.zak_n_k,
                                 m_cut=cfg.bloch_m_cut,
                                 biorthogonal=cfg.zak_biorthogonal)
        records.append({
            "n_sites_per_turn": cfg.helix.sites_per_turn,
            "band_group": group_name,
            "bands": list(res.band_subset),
            "n_k": res.n_k,
            "zak_phase": res.phase,
            "residual": res.residual,
            "gap_width": gap.width,
            "min_overlap_det": res.min_overlap_det,
            "ill_defined": res.ill_defined,
            "biorthogonal": res.biorthogonal,
        })
        if res.ill_defined:
            ill.append(group_name)
    output.write_zak_json(out_dir / "zak.json", records)
    diagnostics = {
        "m_cut": bands.m_cut,
        "coupling_convergence": bands.convergence,
        "gap_width": gap.width,
        "band_groups": [name for name, _ in groups],
        "ill_defined_groups": ill,
    }
    return ["zak.json"], diagnostics


def _build_plane(settings, geom):
    import numpy as np

    from . import field

    if settings.plane_axis == "x":
        return field.default_plane(geom, offset=settings.plane_offset,
                                   n_u=settings.n_u, n_v=settings.n_v,
                                   u_span=settings.u_span, z_pad=settings.z_pad)
    # same sizing conventions, different viewing axis
    radial = float(np.linalg.norm(geom.positions[:, :2], axis=1).max()) or 0.05
    offset = settings.plane_offset if settings.plane_offset is not None else 10.0 * radial
    u_span = settings.u_span if settings.u_span is not None else 6.0 * radial
    u = np.linspace(-0.5 * u_span, 0.5 * u_span, settings.n_u)
    if settings.plane_axis == "y":
        z = geom.z
        z_mid = 0.5 * (z.min() + z.max())
        z_half = 0.5 * max(settings.z_pad * (z.max() - z.min()), 0.1)
        v = np.linspace(z_mid - z_half, z_mid + z_half, settings.n_v)
    else:  # top view: both in-plane axes are transverse
        v = np.linspace(-0.5 * u_span, 0.5 * u_span, settings.n_v)
    return field.FieldPlane(settings.plane_axis, float(offset), u, v)


def _run_field(cfg, geom, out_dir: Path):
    import numpy as np

    from . import dynamics, field, hamiltonian, output

    h = hamiltonian.effective(hamiltonian.assemble(geom), cfg.hermitian_only)
    state = dynamics.initial_state(geom.n_sites, cfg.site, cfg.p_up)
    prop = dynamics.Propagator(h)
    plane = _build_plane(cfg.field, geom)

    outputs, frames = [], []
    for t in cfg.field.times:
        amps = [prop.propagate(a0, np.array([float(t)]))[0]
                for a0 in state.amplitudes]
        fmap = field.intensity_map(state.weights, amps, geom, plane,
                                   time=float(t), normalize=cfg.field.normalize)
        names = {}
        for spin in ("up", "down"):
            name = f"field_t{t:g}_{spin}.csv"
            output.write_field_csv(out_dir / name, fmap, spin)
            outputs.append(name)
            names[spin] = name
        frames.append({
            "time": float(t),
            "files": names,
            "norm_max": fmap.norm_max,
            "n_masked": fmap.n_masked,
        })

    ax_u, ax_v = plane.axis_labels
    meta = {
        "plane": {
            "normal_axis": plane.normal_axis,
            "offset": plane.offset,
            "axes": [ax_u, ax_v],
            f"{ax_u}_range": [float(plane.u[0]), float(plane.u[-1])],
            f"{ax_v}_range": [float(plane.v[0]), float(plane.v[-1])],
            "n_u": len(plane.u),
            "n_v": len(plane.v),
        },
        "normalize": cfg.field.normalize,
        "frames": frames,
    }
    output.write_json(out_dir / "field_meta.json", meta)
    outputs.append("field_meta.json")
    diagnostics = {
        "propagator_fallback": prop.use_stepper,
        "n_masked_near_field": frames[0]["n_masked"] if frames else 0,
    }
    return outputs, diagnostics


def _run_check(cfg, out_dir: Path):
    from . import output, selfcheck

    n_fail, report = selfcheck.run_checks(cfg)
    output.write_json(out_dir / "check_report.json",
                      {"n_failed": n_fail, "checks": report})
    diagnostics = {
        "n_checks": len(report),
        "n_failed": n_fail,
        "failed": [r["name"] for r in report if not r["passed"]],
    }
    return ["check_report.json"], diagnostics, n_fail


def _dump_matrices(geom, out_dir: Path):
    from . import hamiltonian, output

    coup = hamiltonian.assemble(geom)
    output.write_matrix_csv(out_dir / "J.csv", coup.j)
    output.write_matrix_csv(out_dir / "Gamma.csv", coup.gamma)
    return ["J.csv", "Gamma.csv"]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    threads = _apply_threads(_scan_threads(argv))
    args = _build_parser().parse_args(argv)

    # engine imports only after the thread environment is pinned
    from .config import config_sha256, load_config

    cfg_path = _resolve_config_path(args.config)
    if not cfg_path.is_file():
        return _fail([f"config file not found: {args.config}"], 1)
    cfg, errors = load_config(cfg_path)
    if errors:
        return _fail(errors, 1)
    if args.command != "run" and args.command != cfg.mode:
        return _fail([f"config declares mode '{cfg.mode}' but the "
                      f"'{args.command}' subcommand was invoked"], 1)

    out_dir = Path(args.out) if args.out else Path(f"{cfg_path.stem}_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    base_dir = cfg_path.parent

    if cfg.geometry_file is not None:
        resolved = Path(cfg.geometry_file)
        if not resolved.is_absolute():
            cfg = dataclasses.replace(cfg, geometry_file=str(base_dir / resolved))

    import numpy as np
    import scipy

    exit_code = 0
    try:
        if cfg.mode == "dynamics":
            geom = cfg.build_geometry()
            outputs, diagnostics = _run_dynamics(cfg, geom, out_dir)
        elif cfg.mode == "bands":
            geom = cfg.build_geometry()
            outputs, diagnostics = _run_bands(cfg, out_dir)
        elif cfg.mode == "zak":
            geom = cfg.build_geometry()
            outputs, diagnostics = _run_zak(cfg, out_dir)
        elif cfg.mode == "field":
            geom = cfg.build_geometry()
            outputs, diagnostics = _run_field(cfg, geom, out_dir)
        else:  # check
            geom = cfg.build_geometry()
            outputs, diagnostics, n_fail = _run_check(cfg, out_dir)
            if n_fail:
                print(f"error: {n_fail} self-check(s) failed", file=sys.stderr)
                exit_code = 2
        if args.dump_matrices:
            outputs.extend(_dump_matrices(geom, out_dir))
    except (np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        return _fail([f"numerical failure: {exc}"], 2)
    except ValueError as exc:
        return _fail([str(exc)], 1)

    from . import __version__
    from .output import write_manifest

    write_manifest(out_dir, {
        "tool": "heliport",
        "version": __version__,
        "mode": cfg.mode,
        "label": cfg.label,
        "config": cfg_path.name,
        "config_sha256": config_sha256(cfg.raw),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "threads": threads,
        "outputs": outputs,
        "diagnostics": diagnostics,
    })
    print(f"{cfg.mode}: wrote {len(outputs)} file(s) to {out_dir}")
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
