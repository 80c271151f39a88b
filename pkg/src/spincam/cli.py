"""Command-line entry point.

Subcommands: simulate (scenario -> annotated dataset), downwash-eval
(dataset -> per-frame report), benchmark (yaw-rate x camera-pitch sweep),
timesync (gyro log offset), and rerun (replay a recorded manifest).

Exit codes: 0 success, 2 usage or configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .camera import annotate_frame, camera_for_pitch
from .datasets import (
    Dataset,
    FrameRecord,
    SCHEMA_VERSION,
    estimate_time_offset,
    load_noise_model,
    load_simulation_config,
    read_dataset,
    read_gyro_log,
    write_dataset,
    write_report,
)
from .downwash import EllipsoidSpec, evaluate_downwash_records, run_downwash_eval
from .errors import InvalidConfig, SpincamError
from .geometry import interpolate_pose
from .metrics import ConfusionCounts, classification_metrics
from .scenarios import CAMERA_PITCHES, frame_schedule, generate_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

EGO_ID = "r0"


def _write_manifest(out_dir: Path, command: str, args: dict, outputs: list[str]) -> None:
    """Record the run before producing outputs; enough to replay it exactly."""
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": __version__,
        "command": command,
        "args": args,
        "outputs": outputs,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _simulate(config_path: str, out: str, seed: int | None) -> int:
    spec = load_simulation_config(config_path)
    scenario = spec.scenario if seed is None else replace(spec.scenario, rng_seed=seed)
    out_dir = Path(out)
    _write_manifest(
        out_dir,
        "simulate",
        {"config": config_path, "out": out, "seed": seed},
        ["dataset.ndjson"],
    )
    tracks = generate_scenario(scenario)
    by_id = {t.robot_id: t for t in tracks}
    frames = []
    for frame_id, t in enumerate(frame_schedule(scenario)):
        poses = {rid: interpolate_pose(track, float(t)) for rid, track in by_id.items()}
        neighbor_poses = {rid: p for rid, p in poses.items() if rid != EGO_ID}
        annotation = annotate_frame(
            poses[EGO_ID], neighbor_poses, spec.camera, spec.geometry,
            frame_id=frame_id, ego_id=EGO_ID,
        )
        frames.append(FrameRecord(annotation=annotation, poses=poses))
    dataset = Dataset(
        camera=spec.camera,
        geometry=spec.geometry,
        ellipsoid=scenario.ellipsoid,
        frames=frames,
    )
    dataset_path = out_dir / "dataset.ndjson"
    write_dataset(dataset, dataset_path)
    print(f"wrote {dataset_path} ({len(frames)} frames, {len(tracks)} robots)")
    return EXIT_OK


def _parse_ellipsoid(text: str) -> EllipsoidSpec:
    parts = text.split(",")
    if len(parts) != 3:
        raise InvalidConfig("--ellipsoid expects 'rx,ry,rz'")
    try:
        return EllipsoidSpec(*(float(p) for p in parts))
    except ValueError as exc:
        raise InvalidConfig(f"--ellipsoid: {exc}") from exc


def _eval_mode(args) -> tuple[str, object]:
    if args.oracle:
        return "oracle", None
    if args.noise is None:
        raise InvalidConfig("either --oracle or --noise <path> is required")
    return args.mode, load_noise_model(args.noise)


def _downwash_eval(args) -> int:
    mode, noise = _eval_mode(args)
    out_dir = Path(args.out)
    _write_manifest(
        out_dir,
        "downwash-eval",
        {
            "dataset": args.dataset, "out": args.out, "oracle": args.oracle,
            "noise": args.noise, "mode": args.mode, "ellipsoid": args.ellipsoid,
        },
        ["report.csv"],
    )
    dataset = read_dataset(args.dataset)
    ellipsoid = _parse_ellipsoid(args.ellipsoid) if args.ellipsoid else dataset.ellipsoid
    results = evaluate_downwash_records(
        dataset.frames, dataset.camera, ellipsoid,
        mode=mode, noise=noise, geom=dataset.geometry,
    )
    report_path = out_dir / "report.csv"
    counts = write_report(report_path, results)
    precision, recall, f1 = classification_metrics(counts)
    print(
        f"frames={len(results)} tp={counts.tp} fp={counts.fp} fn={counts.fn} tn={counts.tn} "
        f"precision={precision:.4f} recall={recall:.4f} f1={f1:.4f}"
    )
    print(f"wrote {report_path}")
    return EXIT_OK


def _parse_rates(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p]
    except ValueError as exc:
        raise InvalidConfig(f"--yaw-rates: {exc}") from exc


def _parse_pitches(text: str) -> list[str]:
    pitches = [p.strip() for p in text.split(",") if p.strip()]
    for pitch in pitches:
        if pitch not in CAMERA_PITCHES:
            raise InvalidConfig(f"unknown camera pitch {pitch!r}")
    return pitches


def _benchmark(args) -> int:
    mode, noise = _eval_mode(args)
    spec = load_simulation_config(args.config)
    rates = _parse_rates(args.yaw_rates)
    pitches = _parse_pitches(args.pitches)
    out_dir = Path(args.out)
    _write_manifest(
        out_dir,
        "benchmark",
        {
            "config": args.config, "out": args.out, "yaw_rates": args.yaw_rates,
            "pitches": args.pitches, "oracle": args.oracle, "noise": args.noise,
            "mode": args.mode, "seed": args.seed,
        },
        ["benchmark.csv"],
    )
    rows = []
    for rate in rates:
        for pitch in pitches:
            scenario = replace(spec.scenario, yaw_rate=rate, camera_pitch=pitch)
            if args.seed is not None:
                scenario = replace(scenario, rng_seed=args.seed)
            camera = camera_for_pitch(
                pitch, spec.camera.intrinsics, spec.camera.extrinsic.translation
            )
            tracks = generate_scenario(scenario)
            results = run_downwash_eval(
                tracks, camera, frame_schedule(scenario), scenario.ellipsoid,
                ego_id=EGO_ID, geom=spec.geometry, mode=mode, noise=noise,
            )
            counts = ConfusionCounts.from_pairs(
                (r.gt_downwash, r.pred_downwash) for r in results
            )
            precision, recall, f1 = classification_metrics(counts)
            rows.append((rate, pitch, f1, precision, recall, counts))

    bench_path = out_dir / "benchmark.csv"
    with open(bench_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("yaw_rate,camera_pitch,f1,precision,recall,tp,fp,fn,tn\n")
        for rate, pitch, f1, precision, recall, c in rows:
            fh.write(
                f"{rate},{pitch},{f1:.4f},{precision:.4f},{recall:.4f},"
                f"{c.tp},{c.fp},{c.fn},{c.tn}\n"
            )
    print(f"{'yaw_rate':>8} {'pitch':>8} {'f1':>6} {'prec':>6} {'recall':>6}")
    for rate, pitch, f1, precision, recall, _ in rows:
        print(f"{rate:>8g} {pitch:>8} {f1:>6.2f} {precision:>6.2f} {recall:>6.2f}")
    print(f"wrote {bench_path}")
    return EXIT_OK


def _timesync(args) -> int:
    a = read_gyro_log(args.log_a)
    b = read_gyro_log(args.log_b)
    offset = estimate_time_offset(a, b, args.window)
    print(f"offset={offset:.6f}")
    return EXIT_OK


def _rerun(args) -> int:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    stored = manifest["args"]
    if command == "simulate":
        return _simulate(stored["config"], stored["out"], stored["seed"])
    rebuilt = argparse.Namespace(**stored)
    if command == "downwash-eval":
        return _downwash_eval(rebuilt)
    if command == "benchmark":
        return _benchmark(rebuilt)
    raise InvalidConfig(f"manifest command {command!r} cannot be re-run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincam",
        description="Spinning-camera multi-robot localization toolkit",
    )
    parser.add_argument("--version", action="version", version=f"spincam {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate an annotated scenario dataset")
    p_sim.add_argument("--config", required=True, help="scenario config (JSON)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config rng seed")

    p_eval = sub.add_parser("downwash-eval", help="belief-set downwash prediction report")
    p_eval.add_argument("--dataset", required=True, help="dataset file from simulate")
    p_eval.add_argument("--out", required=True, help="output directory")
    p_eval.add_argument("--oracle", action="store_true", help="perfect perception")
    p_eval.add_argument("--noise", default=None, help="noise model config (JSON)")
    p_eval.add_argument("--mode", choices=("box", "grid"), default="box",
                        help="detector style when using --noise")
    p_eval.add_argument("--ellipsoid", default=None, metavar="RX,RY,RZ",
                        help="override the dataset safety ellipsoid")

    p_bench = sub.add_parser("benchmark", help="sweep yaw rates x camera pitches")
    p_bench.add_argument("--config", required=True, help="base scenario config (JSON)")
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.add_argument("--yaw-rates", default="2,4,6,8")
    p_bench.add_argument("--pitches", default="forward,tilt45,up")
    p_bench.add_argument("--oracle", action="store_true", help="perfect perception")
    p_bench.add_argument("--noise", default=None, help="noise model config (JSON)")
    p_bench.add_argument("--mode", choices=("box", "grid"), default="box")
    p_bench.add_argument("--seed", type=int, default=None)

    p_sync = sub.add_parser("timesync", help="estimate temporal offset of two gyro logs")
    p_sync.add_argument("--log-a", required=True)
    p_sync.add_argument("--log-b", required=True)
    p_sync.add_argument("--window", type=float, default=0.5, help="search window, seconds")

    p_rerun = sub.add_parser("rerun", help="replay a run from its manifest")
    p_rerun.add_argument("--manifest", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _simulate(args.config, args.out, args.seed)
        if args.command == "downwash-eval":
            return _downwash_eval(args)
        if args.command == "benchmark":
            return _benchmark(args)
        if args.command == "timesync":
            return _timesync(args)
        if args.command == "rerun":
            return _rerun(args)
        parser.error(f"unknown command {args.command!r}")
    except (InvalidConfig, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpincamError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
