"""Command-line front end: separate, metrics, loss, and eval subcommands.

Every command is deterministic: identical inputs and flags produce
byte-identical JSON (sorted keys, floats at 9 significant digits). Exit
codes: 0 when the output artifact was fully written, 2 for bad arguments or
inconsistent inputs, 1 for I/O failures. Processing is always serial; the
STAIN_NO_PARALLEL environment variable is accepted but changes nothing.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import her2, jsonfmt, losses, metrics, separation
from .images import DEFAULT_EPS, load_image, save_image

#: Components of the loss breakdown that cmd_loss can derive or accept.
_COMPONENTS = ("h", "dab", "ssim", "mae", "cmp", "level", "gan")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stainkit",
        description="Stain-channel separation, image metrics, loss kernels, "
        "and HER2-level evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--basis", metavar="JSON", help="stain basis override: 9 numbers, row-major"
    )
    common.add_argument(
        "--eps", type=float, default=DEFAULT_EPS, help="log-clamp floor (default 1e-6)"
    )
    common.add_argument("--out", metavar="PATH", help="output file path")
    common.add_argument(
        "--json", action="store_true", help="also print the JSON report to stdout"
    )

    p = sub.add_parser(
        "separate", parents=[common], help="isolate stain channels of an image"
    )
    p.add_argument("--in", dest="input", required=True, metavar="PNG")
    p.add_argument(
        "--channel", required=True, choices=sorted(separation.CHANNEL_NAMES)
    )
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser(
        "metrics", parents=[common], help="SSIM / PSNR / MAE between two images"
    )
    p.add_argument("--a", required=True, metavar="PNG")
    p.add_argument("--b", required=True, metavar="PNG")
    _add_ssim_flags(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser(
        "loss", parents=[common], help="compose the loss breakdown from inputs"
    )
    p.add_argument("--generated", metavar="PNG", help="generated image")
    p.add_argument("--truth", metavar="PNG", help="ground-truth image")
    p.add_argument(
        "--h-features",
        nargs=2,
        metavar=("CSV_A", "CSV_B"),
        help="two feature vectors for the encoder-alignment component",
    )
    p.add_argument(
        "--cmp-features",
        nargs=2,
        metavar=("CSV_A", "CSV_B"),
        help="two feature vectors for the comparator component",
    )
    p.add_argument("--probs", metavar="P0,P1,P2,P3", help="class probabilities")
    p.add_argument("--target", type=int, metavar="LEVEL", help="true class index")
    p.add_argument("--focal-alpha", type=float, default=1.0)
    p.add_argument("--focal-gamma", type=float, default=2.0)
    p.add_argument("--gan-512", type=float, metavar="X", help="patch GAN loss at 512")
    p.add_argument("--gan-256", type=float, metavar="X", help="patch GAN loss at 256")
    p.add_argument(
        "--component",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="inject a component value directly (repeatable)",
    )
    p.add_argument("--weights", metavar="JSON", help="loss-weight overrides")
    _add_ssim_flags(p)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser(
        "eval", parents=[common], help="top-k and kNN HER2-level accuracy"
    )
    p.add_argument("--library", required=True, metavar="CSV")
    p.add_argument("--queries", required=True, metavar="CSV")
    p.add_argument("--topk", default="1,3,5", metavar="K,K,...")
    p.add_argument("--knn", type=int, default=10, metavar="K")
    p.set_defaults(func=cmd_eval)

    return parser


def _add_ssim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window-size", type=int, default=11)
    p.add_argument("--sigma", type=float, default=1.5)
    p.add_argument("--k1", type=float, default=0.01)
    p.add_argument("--k2", type=float, default=0.03)
    p.add_argument("--dynamic-range", type=float, default=1.0)


def _ssim_params(args) -> metrics.SsimParams:
    return metrics.SsimParams(
        window_size=args.window_size,
        gaussian_sigma=args.sigma,
        k1=args.k1,
        k2=args.k2,
        dynamic_range=args.dynamic_range,
    )


def _basis(args) -> separation.StainBasis:
    if args.basis:
        return separation.load_basis(args.basis)
    return separation.default_basis()


def _emit(args, report: dict) -> int:
    text = jsonfmt.dumps(report) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if args.json:
            sys.stdout.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_separate(args) -> int:
    if not args.out:
        raise ValueError("separate requires --out for the isolated-channel PNG")
    sel = separation.ChannelSelector.from_name(args.channel)
    img = load_image(args.input)
    result = separation.isolate_channel(img, sel, _basis(args), args.eps)
    save_image(result, args.out)
    if args.json:
        report = {
            "channel": args.channel,
            "eps": float(args.eps),
            "input": args.input,
            "output": args.out,
        }
        sys.stdout.write(jsonfmt.dumps(report) + "\n")
    return 0


def cmd_metrics(args) -> int:
    a = load_image(args.a)
    b = load_image(args.b)
    report = metrics.compute_report(a, b, _ssim_params(args))
    return _emit(args, report.to_json_dict())


def _load_vector(path: str) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        raise ValueError(f"empty feature-vector CSV: {path}")
    try:
        return np.array([float(v) for v in text.replace("\n", ",").split(",") if v])
    except ValueError:
        raise ValueError(f"malformed feature-vector CSV: {path}") from None


def _parse_injections(pairs: list[str]) -> dict[str, float]:
    injected: dict[str, float] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or name not in _COMPONENTS:
            raise ValueError(
                f"--component expects NAME=VALUE with NAME in {_COMPONENTS}, got {pair!r}"
            )
        if name in injected:
            raise ValueError(f"component {name} injected twice")
        injected[name] = float(value)
    return injected


def cmd_loss(args) -> int:
    values: dict[str, float | None] = {name: None for name in _COMPONENTS}

    if (args.generated is None) != (args.truth is None):
        raise ValueError("--generated and --truth must be given together")
    if args.generated is not None:
        generated = load_image(args.generated)
        truth = load_image(args.truth)
        params = _ssim_params(args)
        basis = _basis(args)
        values["ssim"] = losses.ssim_loss(generated, truth, params)
        values["mae"] = metrics.mae(generated, truth)
        gen_dab = separation.isolate_channel(
            generated, separation.ChannelSelector.from_name("DAB"), basis, args.eps
        )
        truth_dab = separation.isolate_channel(
            truth, separation.ChannelSelector.from_name("DAB"), basis, args.eps
        )
        values["dab"], _ = losses.l1_loss(gen_dab.data, truth_dab.data)

    if args.h_features:
        va, vb = (_load_vector(p) for p in args.h_features)
        values["h"], _, _ = losses.cosine_similarity_loss(va, vb)
    if args.cmp_features:
        va, vb = (_load_vector(p) for p in args.cmp_features)
        values["cmp"], _, _ = losses.cosine_similarity_loss(va, vb)

    if (args.probs is None) != (args.target is None):
        raise ValueError("--probs and --target must be given together")
    if args.probs is not None:
        probs = np.array([float(v) for v in args.probs.split(",")])
        values["level"], _ = losses.focal_loss(
            probs, args.target, args.focal_alpha, args.focal_gamma
        )

    if (args.gan_512 is None) != (args.gan_256 is None):
        raise ValueError("--gan-512 and --gan-256 must be given together")
    if args.gan_512 is not None:
        values["gan"] = losses.multiscale_gan_loss(args.gan_512, args.gan_256)

    for name, value in _parse_injections(args.component).items():
        if values[name] is not None:
            raise ValueError(f"component {name} both derived and injected")
        values[name] = value

    weights = losses.LossWeights(**_load_weights(args.weights))
    breakdown = losses.overall_loss(
        **{n: (0.0 if values[n] is None else values[n]) for n in _COMPONENTS},
        weights=weights,
    )
    report: dict = dict(values)
    report["stain"] = breakdown.stain
    report["content"] = breakdown.content
    report["total"] = breakdown.total
    return _emit(args, report)


def _load_weights(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"weights file must hold a JSON object: {path}")
    return raw


def cmd_eval(args) -> int:
    library = her2.load_feature_library(args.library)
    queries = her2.load_feature_records(args.queries)
    if not queries:
        raise ValueError(f"queries CSV holds no records: {args.queries}")
    try:
        ks = [int(k) for k in args.topk.split(",") if k]
    except ValueError:
        raise ValueError(f"--topk expects a comma-separated int list: {args.topk!r}")
    report = her2.accuracy_report(library, queries, ks, args.knn)
    return _emit(args, report)


if __name__ == "__main__":
    sys.exit(main())
