"""Command line entry points.

Subcommands: ``standardize`` (images to edge maps), ``genscenes`` (procedural
corpus), ``train`` (either stage), ``synthesize`` (sketch plus reference(s) to
photo), ``evaluate`` (metrics report), and ``serve`` (HTTP service).
"""

from __future__ import annotations

import argparse
import json
import logging
from dataclasses import replace
from pathlib import Path

from . import images
from .data import CorpusConfig, build_pair_dataset, write_procedural_corpus
from .losses import LossWeights
from .models import ArchConfig, desk_config, load_checkpoint
from .standardize import EdgeOperatorConfig, standardize_photo, standardize_sketch
from .trainer import AblationFlags, TrainConfig, run_training

logger = logging.getLogger(__name__)


def _edge_config_from_args(args) -> EdgeOperatorConfig:
    return EdgeOperatorConfig(
        operator=args.operator,
        blur_sigma=args.sigma,
        threshold=args.threshold,
        invert_input=args.invert,
        target_size=args.size,
        external_command=getattr(args, "external_command", None),
    )


def cmd_standardize(args) -> int:
    cfg = _edge_config_from_args(args)
    src = Path(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = [src] if src.is_file() else sorted(
        p for p in src.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    fn = standardize_sketch if args.sketch else standardize_photo
    for path in files:
        edge = fn(images.load_image(path), cfg)
        target = out_dir / (path.stem + ".edge.png")
        images.save_image(edge, target)
        logger.info("wrote %s", target)
    return 0


def cmd_genscenes(args) -> int:
    paths = write_procedural_corpus(args.out, args.n, args.size, seed=args.seed, palette=args.palette)
    logger.info("wrote %d scenes under %s", len(paths), args.out)
    return 0


def _load_train_json(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def cmd_train(args) -> int:
    raw = _load_train_json(args.config)
    stage = f"stage{args.stage}"
    weights = LossWeights(
        theta=raw.get("theta", 0.5), alpha=raw.get("alpha", 0.5), beta=raw.get("beta", 0.5)
    )
    ablation = AblationFlags(
        disable_content_loss=args.ablate == "content",
        disable_style_loss=args.ablate == "style",
        skip_stage2=args.ablate == "stage2",
    )
    cfg = TrainConfig(
        stage=stage,
        lr=raw.get("lr"),
        adam_beta1=raw.get("adam_beta1", 0.0),
        adam_beta2=raw.get("adam_beta2", 0.99),
        batch_size=raw.get("batch_size", 8),
        max_steps=raw.get("max_steps", 2000),
        weights=weights,
        ablation=ablation,
        seed=raw.get("seed", 0),
        checkpoint_every=raw.get("checkpoint_every", 500),
    )
    arch = desk_config(raw.get("image_size", 64), raw.get("base_channels", 32))
    if "style_dim" in raw or "content_channels" in raw:
        arch = replace(
            arch,
            style_dim=raw.get("style_dim", arch.style_dim),
            content_channels=raw.get("content_channels", arch.content_channels),
        )
    corpus = CorpusConfig(
        root=args.data,
        resize_to=raw.get("resize_to", arch.image_size + arch.image_size // 8),
        crop_to=raw.get("crop_to", arch.image_size),
        seed=raw.get("data_seed", cfg.seed),
        augment_flip=raw.get("augment_flip", False),
        p_same=raw.get("p_same", 0.1),
    )
    edge_cfg = EdgeOperatorConfig(
        blur_sigma=raw.get("blur_sigma", 1.0),
        threshold=raw.get("edge_threshold", 0.2),
        target_size=corpus.crop_to,
    )
    pairs = build_pair_dataset(corpus, edge_cfg)
    init_model = load_checkpoint(args.init) if args.init else None
    run_training(
        cfg,
        pairs,
        corpus,
        args.out,
        resume=args.resume,
        init_model=init_model,
        arch=arch if stage == "stage1" else None,
    )
    logger.info("training finished; final checkpoint in %s", args.out)
    return 0


def cmd_synthesize(args) -> int:
    from .synthesis import synthesize, synthesize_blended, two_reference_blend
    from .synthesis import encode_style

    model = load_checkpoint(args.model)
    cfg = EdgeOperatorConfig(
        invert_input=args.invert, target_size=model.arch.image_size
    )
    sketch = images.load_image(args.sketch)
    ref = images.load_image(args.ref)
    if args.ref2 is not None:
        blend = two_reference_blend(
            encode_style(ref, model), encode_style(images.load_image(args.ref2), model), args.gamma
        )
        photo = synthesize_blended(sketch, blend, model, cfg)
    else:
        photo = synthesize(sketch, ref, model, cfg)
    images.save_image(photo, args.out)
    logger.info("wrote %s", args.out)
    return 0


def cmd_evaluate(args) -> int:
    import numpy as np

    from .evaluate import (
        distribution_distance,
        export_embeddings_csv,
        recon_distance,
        separability_report,
    )
    from .models import decode, encode

    model = load_checkpoint(args.model)
    size = model.arch.image_size
    corpus = CorpusConfig(root=args.data, resize_to=size, crop_to=size)
    pairs = build_pair_dataset(corpus, EdgeOperatorConfig(target_size=size))
    recons = []
    distances = []
    for pair in pairs:
        content, style = encode(pair.photo, model)
        recon = decode(content, style, model)
        recons.append(recon)
        distances.append(recon_distance(pair.photo, recon))
    report = {
        "n_images": len(pairs),
        "mean_recon_distance": float(np.mean(distances)),
    }
    if len(pairs) >= 10:
        report["recon_distribution_distance"] = distribution_distance(
            recons, [p.photo for p in pairs]
        )
        sep = separability_report(
            [p.photo for p in pairs] + [p.edge for p in pairs],
            ["photo"] * len(pairs) + ["sketch"] * len(pairs),
            model,
        )
        report["style_probe_accuracy"] = sep.style_accuracy
        report["content_probe_accuracy"] = sep.content_accuracy
        export_embeddings_csv(sep, Path(args.report).with_suffix(".embeddings.csv"))
    Path(args.report).write_text(json.dumps(report, indent=2))
    logger.info("wrote %s", args.report)
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.model, args.references, bind=args.bind)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchsynth")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("standardize", help="convert photos/sketches to edge maps")
    p.add_argument("--in", dest="input", required=True, help="input file or directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--operator", default="gradient-magnitude")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--invert", action="store_true")
    p.add_argument("--sketch", action="store_true", help="use the sketch pipeline")
    p.add_argument("--external-command", dest="external_command")
    p.set_defaults(fn=cmd_standardize)

    p = sub.add_parser("genscenes", help="generate a procedural scene corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--palette", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_genscenes)

    p = sub.add_parser("train", help="run one training stage")
    p.add_argument("--stage", type=int, choices=(1, 2), required=True)
    p.add_argument("--config", help="JSON file of flat training options")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--init", help="stage-1 checkpoint to initialize stage 2")
    p.add_argument("--ablate", choices=("content", "style", "stage2"))
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("synthesize", help="sketch + reference(s) to photo")
    p.add_argument("--sketch", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--ref2")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--invert", action="store_true")
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("evaluate", help="metrics report for a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
