"""Command-line entry points for every pipeline stage.

Exit codes: 0 on success, 2 for input or format problems, 3 for
configuration problems.  The PP_THREADS environment variable caps the
worker count used for per-scene parallel work.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import corpus as corpus_mod
from .config import PipelineConfig, config_from_dict, dump_config, load_config
from .errors import ConfigurationError, ParameterError, PipelineError, SchemaError
from .evaluate import MatchParams, evaluate_corpus, report_csv
from .infer import infer_all
from .iojson import (
    candidates_from_doc,
    candidates_to_doc,
    load_json,
    partitions_from_doc,
    partitions_to_doc,
    poses_from_doc,
    poses_to_doc,
    report_to_doc,
    save_json,
)
from .maps import ForwardParams
from .partition import cluster_votes, embed
from .pipeline import decode_maps, synth_maps
from .pmap import read_confidence, read_regression, write_map_set
from .render import write_ppm
from .scene import load_scene, save_scene
from .detect import detect_candidates

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3


def _worker_count() -> int:
    raw = os.environ.get("PP_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError("PP_THREADS must be an integer, got %r" % raw)
    if n < 1:
        raise ConfigurationError("PP_THREADS must be at least 1, got %d" % n)
    return n


def _load_cli_config(args) -> PipelineConfig:
    """Config file (if given) with individual flag overrides on top."""
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for attr in ("tau", "sigma", "radius", "nms_radius", "link_threshold"):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[attr] = value
    if overrides:
        try:
            cfg = PipelineConfig(
                tau=overrides.get("tau", cfg.tau),
                sigma=overrides.get("sigma", cfg.sigma),
                radius=overrides.get("radius", cfg.radius),
                nms_radius=overrides.get("nms_radius", cfg.nms_radius),
                link_threshold=overrides.get("link_threshold", cfg.link_threshold),
                vote_weights=cfg.vote_weights,
                loss_alpha=cfg.loss_alpha,
                seed=cfg.seed,
                joint_layout=cfg.joint_layout,
            )
            cfg.validate()
        except ParameterError as exc:
            raise ConfigurationError(str(exc)) from exc
    return cfg


def _parse_link_threshold(raw: str) -> float | None:
    if raw == "auto":
        return None
    try:
        return float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number or 'auto', got %r" % raw)


def _add_config_flags(sub, *, forward=False, detector=False, cluster=False):
    sub.add_argument("--config", help="pipeline config JSON; flags below override it")
    sub.add_argument("--tau", type=float, help="score threshold shared by all stages")
    if forward:
        sub.add_argument("--sigma", type=float, help="confidence bump width")
        sub.add_argument("--radius", type=float, help="regression disk radius")
    if detector:
        sub.add_argument("--nms-radius", dest="nms_radius", type=int, help="suppression radius (Chebyshev)")
    if cluster:
        sub.add_argument(
            "--link-threshold",
            dest="link_threshold",
            type=_parse_link_threshold,
            help="cluster merge cutoff in pixels, or 'auto'",
        )


def _cmd_synth(args) -> int:
    cfg = _load_cli_config(args)
    scene = load_scene(args.scene)
    conf, reg = synth_maps(scene, cfg)
    write_map_set(conf, args.out_conf)
    write_map_set(reg, args.out_reg)
    return EXIT_OK


def _cmd_detect(args) -> int:
    cfg = _load_cli_config(args)
    conf = read_confidence(args.conf)
    cands = detect_candidates(conf, cfg.detector_params())
    save_json(candidates_to_doc(cands), args.out)
    return EXIT_OK


def _cmd_partition(args) -> int:
    cfg = _load_cli_config(args)
    cands = candidates_from_doc(load_json(args.candidates))
    reg = read_regression(args.reg)
    votes = embed(cands, reg)
    parts = cluster_votes(votes, cfg.cluster_params(reg.norm_factor))
    save_json(partitions_to_doc(parts, cands), args.out)
    return EXIT_OK


def _cmd_decode(args) -> int:
    cfg = _load_cli_config(args)
    conf = read_confidence(args.conf)
    reg = read_regression(args.reg)
    result = decode_maps(conf, reg, cfg)
    save_json(poses_to_doc(result.poses, conf.height, conf.width), args.out)
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "energy"])
            for i, value in enumerate(result.energy_trace):
                writer.writerow([i, repr(value)])
    return EXIT_OK


def _cmd_eval(args) -> int:
    scene_paths = sorted(Path(args.scenes).glob("*.json"))
    if not scene_paths:
        raise SchemaError("no scene files (*.json) found in %s" % args.scenes)
    poses_dir = Path(args.poses)

    def load_pair(scene_path: Path):
        poses_path = poses_dir / scene_path.name
        if not poses_path.exists():
            raise SchemaError("no poses file %s for scene %s" % (poses_path, scene_path.name))
        scene = load_scene(scene_path)
        poses, h, w = poses_from_doc(load_json(poses_path))
        if (h, w) != (scene.height, scene.width):
            raise SchemaError(
                "%s canvas %dx%d does not match scene %dx%d"
                % (poses_path, w, h, scene.width, scene.height)
            )
        return poses, scene

    workers = _worker_count()
    if workers > 1 and len(scene_paths) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(load_pair, scene_paths))
    else:
        pairs = [load_pair(p) for p in scene_paths]

    try:
        params = MatchParams(
            pckh_fraction=args.pckh,
            fallback_px=args.fallback_px,
            min_joints=args.min_joints,
            min_score=args.min_score,
        )
    except ParameterError as exc:
        raise ConfigurationError(str(exc)) from exc
    report = evaluate_corpus(pairs, params)
    save_json(report_to_doc(report), args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report_csv(report))
    return EXIT_OK


def _cmd_render(args) -> int:
    scene = load_scene(args.scene)
    poses, h, w = poses_from_doc(load_json(args.poses))
    if (h, w) != (scene.height, scene.width):
        raise SchemaError("poses canvas %dx%d does not match scene %dx%d" % (w, h, scene.width, scene.height))
    write_ppm(poses, scene, args.out)
    return EXIT_OK


def _cmd_corpus(args) -> int:
    try:
        spec = corpus_mod.CorpusSpec(
            num_scenes=args.num_scenes,
            min_persons=args.min_persons,
            max_persons=args.max_persons,
            min_separation=args.separation,
            height=args.height,
            width=args.width,
            jitter=args.jitter,
        )
    except ParameterError as exc:
        raise ConfigurationError(str(exc)) from exc
    scenes = corpus_mod.generate_corpus(spec, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(max(len(scenes) - 1, 0))))
    for i, scene in enumerate(scenes):
        save_scene(scene, out_dir / ("scene_%0*d.json" % (width, i)))
    return EXIT_OK


def _cmd_config(args) -> int:
    if args.check:
        load_config(args.check)
        print("ok")
        return EXIT_OK
    text = dump_config(PipelineConfig())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posepartition",
        description="Synthesize, decode, and evaluate joint confidence plus centroid regression maps.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="scene JSON -> ground-truth map pair")
    p.add_argument("--scene", required=True)
    p.add_argument("--out-conf", required=True)
    p.add_argument("--out-reg", required=True)
    _add_config_flags(p, forward=True)
    p.set_defaults(func=_cmd_synth)

    p = subs.add_parser("detect", help="confidence maps -> joint candidates JSON")
    p.add_argument("--conf", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p, detector=True)
    p.set_defaults(func=_cmd_detect)

    p = subs.add_parser("partition", help="candidates + regression maps -> partitions JSON")
    p.add_argument("--candidates", required=True)
    p.add_argument("--reg", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p, cluster=True)
    p.set_defaults(func=_cmd_partition)

    p = subs.add_parser("decode", help="map pair -> poses JSON (detect, partition, assemble)")
    p.add_argument("--conf", required=True)
    p.add_argument("--reg", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="optional CSV of the per-step energy trace")
    _add_config_flags(p, detector=True, cluster=True)
    p.set_defaults(func=_cmd_decode)

    p = subs.add_parser("eval", help="poses dir + scenes dir -> evaluation report")
    p.add_argument("--poses", required=True, help="directory of poses JSON files named like the scenes")
    p.add_argument("--scenes", required=True, help="directory of ground-truth scene JSON files")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--csv", help="optional one-row CSV with grouped joint APs")
    p.add_argument("--pckh", type=float, default=0.5, help="fraction of head size for a hit")
    p.add_argument(
        "--fallback-px",
        dest="fallback_px",
        type=float,
        default=None,
        help="absolute hit distance when a person has no head size",
    )
    p.add_argument(
        "--min-joints",
        dest="min_joints",
        type=int,
        default=1,
        help="discard predicted poses with fewer assigned joints",
    )
    p.add_argument(
        "--min-score",
        dest="min_score",
        type=float,
        default=None,
        help="discard predicted poses whose mean joint score is below this",
    )
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("render", help="poses + scene -> PPM overlay")
    p.add_argument("--poses", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = subs.add_parser("corpus", help="generate a seeded synthetic scene corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--num-scenes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-persons", type=int, default=1)
    p.add_argument("--max-persons", type=int, default=5)
    p.add_argument("--separation", type=float, default=60.0)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--jitter", type=int, default=4)
    p.set_defaults(func=_cmd_corpus)

    p = subs.add_parser("config", help="print default configuration or check a config file")
    p.add_argument("--print-defaults", action="store_true", help="write defaults (the default action)")
    p.add_argument("--out", help="write defaults to a file instead of stdout")
    p.add_argument("--check", help="validate a config file and exit")
    p.set_defaults(func=_cmd_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
