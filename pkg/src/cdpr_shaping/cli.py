"""Command-line front end: ``cdpr-shaping {modal,shape,simulate,compare,workspace}``."""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import control_sim, shaping, workspace
from .config import Scenario, load_robot, load_scenario, resolve
from .errors import CdprError, ConfigError
from .model import modal_analysis, natural_frequencies
from .trajectory import bang_bang_line

DEFAULT_POSE = (0.29, -0.047, 0.62)
# rounded 5 % insensitivities as usually quoted for ZV / ZVD
QUOTED_INSENSITIVITY = {"zv": 0.06, "zvd": 0.28}
KIND_LABELS = {"none": "unshaped", "zv": "ZV", "zvd": "ZVD", "zvzv": "ZV-ZV", "zvdzvd": "ZVD-ZVD"}


def _dump(obj) -> str:
    # json uses repr() for floats: shortest round-trip form (<= 17 digits)
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _workers(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    return workspace.default_workers()


# --- modal -------------------------------------------------------------------


def cmd_modal(args) -> int:
    cfg = load_robot(args.config, raw_ea=args.raw_ea)
    pose = np.zeros(6)
    pose[: len(args.pose)] = args.pose
    res = modal_analysis(cfg.model, pose)
    if args.json:
        out = res.as_dict()
        out["pose"] = pose.tolist()
        out["axial_stiffness_N"] = cfg.model.axial_stiffness
        print(_dump(out))
    else:
        print(f"pose: {np.round(pose[:3], 4).tolist()}  EA = {cfg.model.axial_stiffness:.4g} N")
        for i, f in enumerate(res.frequencies, 1):
            print(f"  f{i} = {f:.4f} Hz")
    return 0


# --- shape -------------------------------------------------------------------


def _shaper_from_args(args) -> tuple[shaping.ImpulseSequence, float]:
    kind = args.kind.lower().replace("-", "")
    f1 = args.f1 if args.f1 is not None else args.f
    if kind != "none" and f1 is None:
        raise ConfigError("--f (or --f1) is required for a shaper")
    modes = []
    if f1 is not None:
        modes.append(shaping.ModeSpec(f1, args.damping))
    if args.f2 is not None:
        modes.append(shaping.ModeSpec(args.f2, args.damping))
    return shaping.build(kind, modes), (f1 or 1.0)


def cmd_shape(args) -> int:
    s, f_m = _shaper_from_args(args)
    kind = args.kind.lower().replace("-", "")
    out = {"kind": kind, "impulses": [{"amplitude": a, "time_s": t} for a, t in s.as_rows()]}
    if args.insensitivity:
        lo, hi = shaping.insensitivity_band(s, f_m, args.level, args.damping)
        out["insensitivity"] = hi - lo
        out["band_ratio"] = [lo, hi]
        out["band_hz"] = [lo * f_m, hi * f_m]
        if kind in QUOTED_INSENSITIVITY:
            out["quoted_insensitivity"] = QUOTED_INSENSITIVITY[kind]
    if args.sensitivity:
        ratios = np.linspace(0.5, 1.5, args.points)
        curve = shaping.sensitivity_curve(s, f_m, ratios, args.damping)
        shaping.write_sensitivity_csv(args.sensitivity, {kind: curve}, ratios)
        out["sensitivity_csv"] = str(args.sensitivity)
    if args.json:
        print(_dump(out))
        return 0
    print(f"{KIND_LABELS.get(kind, kind)} shaper, {len(s)} impulses")
    print(f"  {'#':>2}  {'amplitude':>10}  {'time [s]':>10}")
    for i, (a, t) in enumerate(s.as_rows(), 1):
        print(f"  {i:>2}  {a:>10.4f}  {t:>10.4f}")
    if args.insensitivity:
        lo, hi = out["band_ratio"]
        line = f"insensitivity at {args.level:g}: {out['insensitivity']:.4f}"
        if "quoted_insensitivity" in out:
            line += f" (commonly quoted: {out['quoted_insensitivity']:.2f})"
        print(line)
        print(f"band: [{lo * f_m:.4f}, {hi * f_m:.4f}] Hz")
    if args.sensitivity:
        print(f"sensitivity curve written to {args.sensitivity}")
    return 0


# --- simulate / compare ------------------------------------------------------


def _run(scn: Scenario, kind: str, kernel=None):
    shaper = scn.shaper(kind)
    traj = shaping.shape_trajectory(shaper, scn.trajectory())
    t_start = scn.tf + shaper.duration
    if scn.sim_duration <= t_start + 2 * scn.control_dt:
        raise ConfigError(f"duration {scn.sim_duration} s leaves no residual to measure: "
                          f"the {kind} motion ends at {t_start:.4f} s")
    duration = max(scn.sim_duration, traj.duration)
    trace = control_sim.simulate(
        scn.robot.model, scn.robot.gains, scn.robot.friction, traj, scn.dt, duration,
        control_dt=scn.control_dt, limits=scn.robot.limits, cable_damping=scn.cable_damping,
        friction_smoothing=scn.friction_smoothing, kernel=kernel,
    )
    # the oscillation window opens once the shaped motion has ended
    report = control_sim.metrics(trace, scn.tf, t_start)
    return trace, report, shaper


def _metrics_dict(kind, report, shaper) -> dict:
    d = report.as_dict()
    d["kind"] = kind
    d["shaper_duration_s"] = shaper.duration
    d["impulses"] = shaper.as_rows()
    return d


def _scenario_with_kind(args) -> Scenario:
    scn = load_scenario(args.scenario)
    if getattr(args, "duration", None) is not None and args.duration < scn.tf:
        raise ConfigError(f"duration {args.duration} s is shorter than the motion time tf = {scn.tf} s")
    changes = {}
    if getattr(args, "kind", None):
        changes["kind"] = args.kind.lower().replace("-", "")
    if getattr(args, "duration", None) is not None:
        changes["duration"] = args.duration
    return replace(scn, **changes) if changes else scn


def cmd_simulate(args) -> int:
    scn = _scenario_with_kind(args)
    out = Path(args.out or scn.output_dir)
    trace, report, shaper = _run(scn, scn.kind, args.kernel)
    out.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out / f"trace_{scn.kind}.csv")
    m = _metrics_dict(scn.kind, report, shaper)
    _write(out / f"metrics_{scn.kind}.json", _dump(m) + "\n")
    if args.json:
        print(_dump(m))
    else:
        print(f"{KIND_LABELS[scn.kind]}: first-period peak-to-peak dz = {report.peak_to_peak:.4f} m/s")
        print(f"trace and metrics written to {out}")
    return 0


def _compare_one(payload):
    scenario_path, duration, kind, kernel = payload
    scn = load_scenario(scenario_path)
    if duration is not None:
        scn = replace(scn, duration=duration)
    trace, report, shaper = _run(scn, kind, kernel)
    return kind, _metrics_dict(kind, report, shaper)


def compare_table(results: dict) -> list[dict]:
    """Rows of the shaper comparison, unshaped first."""
    ref = results["none"]
    rows = []
    for kind in shaping.KINDS:
        r = results[kind]
        p2p = r["peak_to_peak_dz"]
        rows.append({
            "kind": kind,
            "peak_to_peak_dz": p2p,
            "reduction_pct": 100.0 * (ref["peak_to_peak_dz"] - p2p) / ref["peak_to_peak_dz"],
            "hardware_peak_to_peak_dz": control_sim.HARDWARE_PEAK_TO_PEAK[kind],
            "torque_start": r["torque_start"],
            "torque_end": r["torque_end"],
            "torque_reduction_start_pct": control_sim.torque_reduction(ref["torque_start"], r["torque_start"]).tolist(),
            "torque_reduction_end_pct": control_sim.torque_reduction(ref["torque_end"], r["torque_end"]).tolist(),
            "hardware_torque_reduction_start_pct": list(control_sim.HARDWARE_TORQUE_REDUCTION_START.get(kind, ())),
            "hardware_torque_reduction_end_pct": list(control_sim.HARDWARE_TORQUE_REDUCTION_END.get(kind, ())),
        })
    return rows


def format_compare(rows) -> str:
    """Human-readable comparison table (values rounded to 4 decimals)."""
    lines = [f"{'shaper':<9} {'p2p dz [m/s]':>13} {'reduction':>10} {'hardware':>9}"]
    for r in rows:
        lines.append(f"{KIND_LABELS[r['kind']]:<9} {r['peak_to_peak_dz']:>13.4f} {r['reduction_pct']:>9.1f}% "
                     f"{r['hardware_peak_to_peak_dz']:>9.4f}")
    lines.append("feed-forward torque reduction vs unshaped [%] at start / end of motion (hardware in brackets)")
    for r in rows[1:]:
        hw_s = r["hardware_torque_reduction_start_pct"]
        hw_e = r["hardware_torque_reduction_end_pct"]
        s = ", ".join(f"{v:.2f}" for v in r["torque_reduction_start_pct"])
        e = ", ".join(f"{v:.2f}" for v in r["torque_reduction_end_pct"])
        hs = f" [{', '.join(f'{v:.2f}' for v in hw_s)}]" if hw_s else ""
        he = f" [{', '.join(f'{v:.2f}' for v in hw_e)}]" if hw_e else ""
        lines.append(f"  {KIND_LABELS[r['kind']]:<8} start {s}{hs}  end {e}{he}")
    lines.append("hardware values are reference figures from the physical prototype, not simulation targets")
    return "\n".join(lines)


def cmd_compare(args) -> int:
    scn = _scenario_with_kind(args)
    out = Path(args.out or scn.output_dir)
    payloads = [(str(resolve(args.scenario)), scn.duration, kind, args.kernel) for kind in shaping.KINDS]
    workers = min(_workers(args.workers), len(payloads))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_compare_one, payloads))
    else:
        results = dict(map(_compare_one, payloads))
    rows = compare_table(results)
    _write(out / "compare.json", _dump({"rows": rows}) + "\n")
    lines = ["kind,peak_to_peak_dz,reduction_pct,hardware_peak_to_peak_dz"]
    lines += [f"{r['kind']},{r['peak_to_peak_dz']!r},{r['reduction_pct']!r},{r['hardware_peak_to_peak_dz']!r}" for r in rows]
    _write(out / "compare.csv", "\n".join(lines) + "\n")
    if args.json:
        print(_dump({"rows": rows}))
        return 0
    print(format_compare(rows))
    return 0


# --- workspace ---------------------------------------------------------------


def cmd_workspace(args) -> int:
    cfg = load_robot(args.config)
    if args.lower and args.upper:
        lower, upper = args.lower, args.upper
    elif cfg.workspace:
        lower, upper = cfg.workspace
    else:
        raise ConfigError("no workspace box: pass --lower and --upper")
    if args.counts:
        grid = workspace.GridSpec.from_counts(lower, upper, args.counts)
    else:
        grid = workspace.GridSpec.from_box(lower, upper, args.spacing)
    f_m1 = args.f_m1
    if f_m1 is None:
        f_m1 = float(natural_frequencies(cfg.model, args.tuning_pose)[0])
    kinds = ["zv", "zvd"] if args.kind == "both" else [args.kind]
    field = workspace.frequency_field(cfg.model, grid, cfg.limits, _workers(args.workers))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    field.to_csv(out / "f1.csv", "f1_hz")
    field.to_binary(out / "f1.bin")
    summary = {"grid_shape": list(grid.shape), "points": int(np.prod(grid.shape)),
               "masked": int(field.mask.sum()), "f_m1_hz": f_m1, "bands": {}}
    for kind in kinds:
        band = workspace.ShaperBand.for_kind(kind, f_m1, args.level)
        nu = workspace.robustness_field(field, band)
        nu.to_csv(out / f"nu_{kind}.csv", "nu_hz")
        inside = workspace.in_band(field.values, band) & ~field.mask
        entry = {"insensitivity": band.insensitivity, "quoted_insensitivity": QUOTED_INSENSITIVITY[kind],
                 "band_hz": list(band.bounds), "points_in_band": int(inside.sum())}
        if args.path:
            scn = load_scenario(args.path)
            traj = bang_bang_line(scn.p1, scn.p2, scn.tf, scn.traj_dt)
            rep = workspace.validate_path(traj, cfg.model, band, cfg.limits, args.stride)
            entry["path"] = rep.as_dict()
        summary["bands"][kind] = entry
    _write(out / "workspace.json", _dump(summary) + "\n")
    if args.json:
        print(_dump(summary))
        return 0
    print(f"grid {grid.shape} ({summary['points']} points, {summary['masked']} masked), f_m1 = {f_m1:.4f} Hz")
    for kind, e in summary["bands"].items():
        lo, hi = e["band_hz"]
        print(f"  {KIND_LABELS[kind]:<4} I = {e['insensitivity']:.4f} (quoted {e['quoted_insensitivity']:.2f}) "
              f"band [{lo:.4f}, {hi:.4f}] Hz, {e['points_in_band']} points inside")
        if "path" in e:
            p = e["path"]
            print(f"       path: {100 * p['fraction_in_band']:.1f}% in band, min nu = {p['min_nu_hz']:.4f} Hz")
    print(f"fields written to {out}")
    return 0


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdpr-shaping", description=__doc__.split(":")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modal", help="natural frequencies at a pose")
    p.add_argument("--config", default="creator.json", help="robot JSON (default: shipped CREATOR)")
    p.add_argument("--pose", type=float, nargs="+", default=list(DEFAULT_POSE), help="x y z [phi theta psi]")
    p.add_argument("--raw-ea", action="store_true", help="use modulus * area instead of the calibrated EA")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_modal)

    p = sub.add_parser("shape", help="impulse table, sensitivity curve and insensitivity")
    p.add_argument("--kind", required=True, choices=["none", "zv", "zvd", "zvzv", "zvdzvd", "zv-zv", "zvd-zvd"])
    p.add_argument("--f", type=float, help="tuning frequency [Hz] (single-mode shapers)")
    p.add_argument("--f1", type=float, help="first tuning frequency [Hz]")
    p.add_argument("--f2", type=float, help="second tuning frequency [Hz]")
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--sensitivity", metavar="CSV", help="write the residual-vibration sweep over f/f_m in [0.5, 1.5]")
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--insensitivity", action="store_true", help="print the band width at --level")
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_shape)

    for name, func, helptext in (("simulate", cmd_simulate, "closed-loop run of one scenario"),
                                 ("compare", cmd_compare, "run every shaper kind and tabulate the vibration")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("scenario", nargs="?", default="creator_scenario.json")
        if name == "simulate":
            p.add_argument("--kind", choices=list(shaping.KINDS), help="override the scenario shaper")
        else:
            p.add_argument("--workers", type=int, help="parallel runs (default: CDPR_THREADS or CPU count)")
        p.add_argument("--duration", type=float, help="override the simulated time [s]")
        p.add_argument("--out", help="output directory (default: scenario output_dir)")
        p.add_argument("--kernel", choices=["compiled", "python"], help="plant integrator")
        p.add_argument("--json", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("workspace", help="f1 field and shaper sensitivity workspaces")
    p.add_argument("--config", default="creator.json")
    p.add_argument("--lower", type=float, nargs=3)
    p.add_argument("--upper", type=float, nargs=3)
    p.add_argument("--spacing", type=float, default=0.05)
    p.add_argument("--counts", type=int, nargs=3, help="grid points per axis (overrides --spacing)")
    p.add_argument("--kind", choices=["zv", "zvd", "both"], default="both")
    p.add_argument("--f-m1", type=float, help="shaper tuning frequency [Hz] (default: f1 at --tuning-pose)")
    p.add_argument("--tuning-pose", type=float, nargs=3, default=list(DEFAULT_POSE))
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--path", metavar="SCENARIO", help="also check the scenario trajectory against each band")
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", default="workspace_out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_workspace)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CdprError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
