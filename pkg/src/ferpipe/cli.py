"""Command-line front end.

Subcommands cover dataset plumbing (ingest, synth), the model lifecycle
(train, predict, evaluate, bench), and the detector (train-detector,
detect). Every failure exits with the code of its error family; 0 means
success.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import facedetect as fd
from . import pipeline, synth
from .bundle import load_bundle
from .config import PipelineConfig, load_config
from .dataset import ingest_dataset, load_images, write_manifest
from .errors import FerError
from .imgio import read_image, write_pgm

MANIFEST_NAME = "manifest.csv"


def _config_for(args) -> PipelineConfig:
    config = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    return config


def _load_dataset(args):
    manifest = ingest_dataset(args.root, args.manifest)
    return manifest, load_images(args.root, manifest)


def cmd_ingest(args) -> int:
    manifest = ingest_dataset(args.root, args.manifest)
    print(f"ingested {len(manifest)} images across {len(manifest.class_names)} classes")
    print("classes: " + " ".join(manifest.class_names))
    return 0


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 42
    manifest, images = synth.synth_dataset(seed, per_class=args.per_class,
                                           classes=args.classes, noise=args.noise)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for entry, img in zip(manifest.entries, images):
        write_pgm(out / entry.path, img)
    write_manifest(manifest, out / MANIFEST_NAME)
    print(f"wrote {len(manifest)} images and {MANIFEST_NAME} to {out}")
    return 0


def cmd_train(args) -> int:
    config = _config_for(args)
    manifest, images = _load_dataset(args)
    cascade = fd.load_cascade(args.cascade) if args.cascade else None
    out_path = args.out if args.out else "model.ferb"
    result = pipeline.train(config, manifest, images, out_path=out_path, cascade=cascade)
    for stage, seconds in result.timings:
        print(f"{stage:<11s} {seconds:9.3f} s")
    print(f"bundle {out_path} checksum {result.checksum}")
    return 0


def cmd_predict(args) -> int:
    bundle = load_bundle(args.bundle)
    img = read_image(args.image)
    label, similarity = pipeline.predict(bundle, img)
    print(f"{label} {similarity:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    config = _config_for(args)
    manifest, images = _load_dataset(args)
    cascade = fd.load_cascade(args.cascade) if args.cascade else None
    report, text = pipeline.evaluate(config, manifest, images,
                                     out_path=args.out, cascade=cascade)
    print(text, end="")
    if args.out:
        print(f"report written to {args.out}")
    return 0


def cmd_bench(args) -> int:
    config = _config_for(args)
    manifest, images = _load_dataset(args)
    for stage, seconds in pipeline.bench(config, manifest, images):
        print(f"{stage:<11s} {seconds * 1000.0:9.3f} ms/image")
    return 0


def cmd_train_detector(args) -> int:
    seed = args.seed if args.seed is not None else 3
    cascade, det, fp = pipeline.train_detector(seed)
    out_path = args.out if args.out else "cascade.fcd"
    fd.save_cascade(out_path, cascade)
    sizes = " ".join(str(len(learners)) for learners, _ in cascade.stages)
    print(f"stages {len(cascade.stages)} (learners per stage: {sizes})")
    print(f"training detection rate {det:.4f}, false-positive rate {fp:.4f}")
    print(f"cascade written to {out_path}")
    return 0


def cmd_detect(args) -> int:
    cascade = fd.load_cascade(args.cascade)
    img = read_image(args.image)
    boxes = fd.detect(img, cascade)
    print(f"{len(boxes)} detection(s)")
    for b in boxes:
        print(f"{b.x} {b.y} {b.side} {b.score:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ferpipe",
        description="facial-expression pipeline: detect, normalize, extract, embed, classify",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--out", default=None, help="output path")
        return p

    p = add("ingest", cmd_ingest, "validate a manifest against its dataset root")
    p.add_argument("--root", required=True)
    p.add_argument("--manifest", required=True)

    p = add("synth", cmd_synth, "generate the synthetic expression dataset")
    p.add_argument("--per-class", type=int, default=14)
    p.add_argument("--classes", type=int, default=7)
    p.add_argument("--noise", type=float, default=0.8)
    p.set_defaults(out_required=True)

    p = add("train", cmd_train, "fit the chain and persist a model bundle")
    p.add_argument("--root", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--cascade", default=None, help="detector cascade file (when detector is on)")

    p = add("predict", cmd_predict, "classify one image under a trained bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--image", required=True)

    p = add("evaluate", cmd_evaluate, "cross-validate the configured chain")
    p.add_argument("--root", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--cascade", default=None)

    p = add("bench", cmd_bench, "per-stage per-image wall-clock timings")
    p.add_argument("--root", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)

    add("train-detector", cmd_train_detector, "boost a cascade on the planted-pattern corpus")

    p = add("detect", cmd_detect, "run the sliding-window detector on one image")
    p.add_argument("--cascade", required=True)
    p.add_argument("--image", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and not args.out:
        parser.error("synth requires --out")
    try:
        return args.fn(args)
    except FerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
