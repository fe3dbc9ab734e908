"""Command-line pipeline: generate, diagram, segment, analyze, stda, simulate.

Machine-readable results go to files (or stdout); diagnostics go to stderr.
Exit codes: 0 on success, 2 on invalid specs/configs/usage.  All stochastic
behavior is pinned by --seed, and --threads (or LOOPTRUST_THREADS) only caps
parallelism without changing any output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .filtration import Direction, build
from .grid_image import (
    GrayImage,
    ImageFormatError,
    InvalidSpecError,
    RingSpec,
    generate,
    load_image,
    load_labeling,
    save_image,
    save_labeling,
)
from .partda import (
    DegenerateRegionError,
    confidence_region,
    match_loops,
    partition_stats,
    persistence_interval,
)
from .persistence import compute_diagram, save_diagram
from .segmentation import (
    DegenerateSegmentationError,
    correct_misclassified,
    detect_edges,
    infer_roles,
    label_regions,
    save_edges,
)
from .sim_harness import StudyConfig, run_study
from .stda import band_to_regions, local_poly_smooth, stda_band
from .grid_image import Role

_EXIT_USAGE = 2


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("LOOPTRUST_THREADS")
    return int(env) if env else None


def _direction(name: str) -> Direction:
    return Direction.UPPER_LEVEL if name == "upper" else Direction.LOWER_LEVEL


def cmd_generate(args) -> int:
    try:
        spec = RingSpec.from_json(args.spec)
        spec.validate()
    except (InvalidSpecError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    image, labeling = generate(spec, args.seed)
    if args.png and (
        not float(image.intensity.min()) >= 0.0
        or not float(image.intensity.max()) <= 65535.0
        or not bool((image.intensity == np.rint(image.intensity)).all())
    ):
        print(
            "--png requires integer intensities in [0, 65535] (noise-free integer "
            "means); the CSV format is lossless for arbitrary values",
            file=sys.stderr,
        )
        return _EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_image(image, out / "image.csv")
    if args.png:
        save_image(image, out / "image.png")
    save_labeling(labeling, out / "labels.csv", out / "labels.json")
    manifest = {
        "tool": f"looptrust {__version__}",
        "command": "generate",
        "seed": args.seed,
        "spec": str(args.spec),
        "outputs": ["image.csv", "labels.csv", "labels.json"] + (["image.png"] if args.png else []),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return 0


def cmd_diagram(args) -> int:
    try:
        image = load_image(args.image)
    except (ImageFormatError, OSError) as exc:
        print(f"cannot read image: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    diagram = compute_diagram(build(image, _direction(args.direction)))
    save_diagram(diagram, args.out)
    return 0


def cmd_segment(args) -> int:
    try:
        image = load_image(args.image)
    except (ImageFormatError, OSError) as exc:
        print(f"cannot read image: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    edges = detect_edges(image, args.gaussian_sigma, args.threshold)
    save_edges(edges, args.out_edges)
    if args.out_labels:
        try:
            labeling = infer_roles(label_regions(edges))
        except DegenerateSegmentationError as exc:
            print(f"degenerate segmentation: {exc}", file=sys.stderr)
            return 0
        save_labeling(labeling, args.out_labels)
    return 0


def _segment_pipeline(image: GrayImage, gaussian_sigma: float, threshold):
    """detect -> label -> roles -> repair -> relabel; returns (edges, labeling)."""
    edges = detect_edges(image, gaussian_sigma, threshold)
    labeling = infer_roles(label_regions(edges))
    if labeling.loop_indices():
        new_edges = correct_misclassified(edges, image, labeling)
        if bool((new_edges.mask != edges.mask).any()):
            edges = new_edges
            labeling = infer_roles(label_regions(edges))
    return edges, labeling


def cmd_analyze(args) -> int:
    try:
        image = load_image(args.image)
    except (ImageFormatError, OSError) as exc:
        print(f"cannot read image: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    diagram = compute_diagram(build(image, _direction(args.direction)))
    save_diagram(diagram, out / "diagram.csv")

    if args.labeling:
        try:
            labeling = load_labeling(args.labeling)
        except (ImageFormatError, OSError) as exc:
            print(f"cannot read labeling: {exc}", file=sys.stderr)
            return _EXIT_USAGE
    else:
        try:
            edges, labeling = _segment_pipeline(image, args.gaussian_sigma, args.threshold)
            save_edges(edges, out / "edges.csv")
            save_labeling(labeling, out / "segmentation.csv", out / "segmentation.json")
        except DegenerateSegmentationError as exc:
            print(f"degenerate segmentation, no loops matched: {exc}", file=sys.stderr)
            labeling = None

    truth = tuple(args.truth) if args.truth else None
    matches_path = out / "matches.csv"
    regions: list[dict] = []
    interval_rows: list[str] = []
    with open(matches_path, "w") as fh:
        fh.write("loop_label,death_est,birth_est,persistence,area,covered\n")
        if labeling is not None:
            result = match_loops(diagram, labeling, image)
            for point_idx, loop in result.pairs:
                stats_int = partition_stats(image, labeling, Role.interior(loop))
                stats_loop = partition_stats(image, labeling, Role.loop(loop))
                death_est, birth_est = stats_int.mean, stats_loop.mean
                try:
                    region = confidence_region(stats_int, stats_loop, args.alpha)
                    area = region.area
                    covered = region.contains(truth) if truth else None
                    regions.append({"loop": loop, **region.to_dict()})
                except DegenerateRegionError:
                    print(
                        f"loop {loop}: degenerate region (zero variance), point estimate only",
                        file=sys.stderr,
                    )
                    area = float("nan")
                    covered = ((death_est, birth_est) == truth) if truth else None
                    regions.append(
                        {
                            "loop": loop,
                            "center": [death_est, birth_est],
                            "variance": [0.0, 0.0],
                            "alpha": args.alpha,
                            "degenerate": True,
                            "n": [stats_int.n, stats_loop.n],
                        }
                    )
                fh.write(
                    f"{loop},{_fmt(death_est)},{_fmt(birth_est)},"
                    f"{_fmt(birth_est - death_est)},"
                    f"{'' if area != area else _fmt(area)},"
                    f"{'' if covered is None else int(covered)}\n"
                )
                if args.interval:
                    est, half = persistence_interval(stats_int, stats_loop, args.alpha)
                    interval_rows.append(f"{loop},{_fmt(est)},{_fmt(half)}")
    with open(out / "regions.json", "w") as fh:
        json.dump(regions, fh, indent=2)
        fh.write("\n")
    if args.interval:
        with open(out / "intervals.csv", "w") as fh:
            fh.write("loop_label,persistence_est,half_width\n")
            for row in interval_rows:
                fh.write(row + "\n")
    n_matched = len(regions)
    print(f"matched loops: {n_matched}", file=sys.stderr)
    return 0


def cmd_stda(args) -> int:
    try:
        image = load_image(args.image)
        labeling = load_labeling(args.labeling)
    except (ImageFormatError, OSError) as exc:
        print(f"cannot read inputs: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    band = stda_band(
        image, labeling, args.degree, args.bandwidth, args.bootstrap, args.alpha, args.seed
    )
    smoothed = local_poly_smooth(image, args.degree, args.bandwidth)
    save_image(smoothed, out / "smoothed.csv")
    sdiagram = compute_diagram(build(smoothed, _direction(args.direction)))
    save_diagram(sdiagram, out / "smoothed_diagram.csv")
    with open(out / "distances.csv", "w") as fh:
        fh.write("replicate,l_inf\n")
        for i, d in enumerate(band.distances):
            fh.write(f"{i},{_fmt(d)}\n")
    band_json = band.to_dict()
    band_json["distances_path"] = "distances.csv"
    band_json["bandwidth_definition"] = "fraction of pixel count (k nearest neighbors)"
    band_json["degree"] = args.degree
    band_json["bandwidth"] = args.bandwidth
    with open(out / "band.json", "w") as fh:
        json.dump(band_json, fh, indent=2)
        fh.write("\n")
    with open(out / "regions.csv", "w") as fh:
        fh.write("death,birth,c_n,significant,area\n")
        for r in band_to_regions(band, sdiagram):
            fh.write(
                f"{_fmt(r.death)},{_fmt(r.birth)},{_fmt(r.c_n)},{int(r.significant)},{_fmt(r.area)}\n"
            )
    return 0


def cmd_simulate(args) -> int:
    try:
        config = StudyConfig.from_json(args.config)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        print(f"invalid study config: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    overrides = {}
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    threads = _threads(args)
    if threads is not None:
        overrides["threads"] = threads
    if overrides:
        import dataclasses

        config = dataclasses.replace(config, **overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    result = run_study(config)
    result.to_csv(out / "results.csv")
    result.write_manifest(out / "manifest.json")
    print(f"study '{config.study}' finished in {time.time() - t0:.1f}s", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="looptrust",
        description="Loop estimates and confidence regions for single grayscale images.",
    )
    parser.add_argument("--version", action="version", version=f"looptrust {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic ring image plus truth labeling")
    p.add_argument("--spec", required=True, help="ring spec JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--png", action="store_true", help="also write a 16-bit PNG")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("diagram", help="persistence diagram of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--direction", choices=("upper", "lower"), default="upper")
    p.add_argument("--out", required=True, help="diagram CSV path")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_diagram)

    p = sub.add_parser("segment", help="edge-detection segmentation")
    p.add_argument("--image", required=True)
    p.add_argument("--gaussian-sigma", type=float, default=2.0)
    p.add_argument("--threshold", type=float, default=None, help="gradient threshold (default: Otsu)")
    p.add_argument("--out-edges", required=True, help="edge mask path (.csv or .png)")
    p.add_argument("--out-labels", default=None, help="labeling CSV path (roles JSON alongside)")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("analyze", help="full pipeline: diagram, segmentation, matching, regions")
    p.add_argument("--image", required=True)
    p.add_argument("--labeling", default=None, help="truth labeling CSV (skips segmentation)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--direction", choices=("upper", "lower"), default="upper")
    p.add_argument("--gaussian-sigma", type=float, default=2.0)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--truth", type=float, nargs=2, metavar=("DEATH", "BIRTH"), default=None)
    p.add_argument("--interval", action="store_true", help="also write persistence intervals")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("stda", help="smoothing + stratified bootstrap confidence band")
    p.add_argument("--image", required=True)
    p.add_argument("--labeling", required=True)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--bandwidth", type=float, default=0.3)
    p.add_argument("-B", "--bootstrap", type=int, default=300)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--direction", choices=("upper", "lower"), default="upper")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_stda)

    p = sub.add_parser("simulate", help="run a Monte-Carlo study from a config file")
    p.add_argument("--config", required=True, help="study config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--replicates", type=int, default=None, help="override config replicates")
    p.add_argument("--seed", type=int, default=None, help="override config master seed")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
