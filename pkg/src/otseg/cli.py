"""Command-line entry point: ``otseg {synth,train,segment,eval,plot,sweep}``.

Exit codes: 0 success, 2 config error, 3 data/format error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import FUSION_MODES, RunConfig, load_config
from .dataset import load_bundle, load_video, load_videos, read_cluster_labels, video_dirs
from .errors import ConfigError, DataError, OTSegError
from .featio import atomic_write_text, read_labels, write_labels
from .latent import load_checkpoint, save_checkpoint
from .metrics import DEFAULT_THRESHOLDS, evaluate, mean_report
from .plot import timeline_svg
from .synth import SynthSpec, write_fixture
from .trainer import fit_predict, new_model, segment, train
from .transport import save_plan

log = logging.getLogger("otseg")

# CLI flag -> config field
CONFIG_FLAGS = {
    "k": int, "beta": float, "alpha": float, "eps": float, "lambda_ub": float, "rho": float,
    "radius": float, "max_outer": int, "max_inner": int, "tol": float, "window_len": float,
    "fps": float, "epochs": int, "steps_per_epoch": int, "learning_rate": float,
    "temperature": float, "latent_dim": int,
}


def _add_shared(p: argparse.ArgumentParser, solver: bool = True) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="random seed (overrides config)")
    p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory (default: out)")
    p.add_argument("--jobs", type=int, default=1, help="videos processed concurrently")
    p.add_argument("-v", "--verbose", action="store_true")
    if not solver:
        return
    g = p.add_argument_group("configuration overrides")
    g.add_argument("--preset", help="dataset preset supplying k (cholec80, autolaparo, multibypass-phases, multibypass-steps)")
    g.add_argument("--fusion-mode", choices=FUSION_MODES)
    g.add_argument("--hard-labels", action="store_true", default=None, help="train on argmax pseudo-labels")
    for name, typ in CONFIG_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), type=typ, dest=name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otseg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"otseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic fixture directory")
    _add_shared(p, solver=False)
    p.add_argument("--n-videos", type=int, default=1)
    p.add_argument("--t-frames", type=int, default=500)
    p.add_argument("--k-true", type=int, default=5)
    p.add_argument("--d-img", type=int, default=32)
    p.add_argument("--d-text", type=int, default=32)
    p.add_argument("--sigma-img", type=float, default=0.15)
    p.add_argument("--sigma-text", type=float, default=0.05)
    p.add_argument("--min-seg-len", type=int, default=20)
    p.add_argument("--order", choices=("monotone", "shuffled"), default="monotone")
    p.add_argument("--coverage", type=float, default=1.0, help="fraction of segments with captions")
    p.add_argument("--img-angle", type=float, help="exact pairwise angle of visual centers (degrees)")

    p = sub.add_parser("train", help="self-train heads and prototypes")
    _add_shared(p)
    p.add_argument("data", type=Path, help="fixture directory, manifest.json or video directory")
    p.add_argument("--resume", type=Path, help="checkpoint directory to continue from")
    p.add_argument("--k-file", type=Path, help="JSON map video_id -> k; trains one model per video")

    p = sub.add_parser("segment", help="segment videos with a (possibly fresh) model")
    _add_shared(p)
    p.add_argument("data", type=Path, help="video/fixture directory, or a visual feature file")
    p.add_argument("--captions", type=Path, help="caption JSON (when DATA is a feature file)")
    p.add_argument("--caption-embeddings", type=Path, help="tensor file, row j embeds caption j")
    p.add_argument("--text-dim", type=int, help="text embedding size when captions carry none")
    p.add_argument("--model", type=Path, help="checkpoint directory (or directory of per-video checkpoints)")
    p.add_argument("--k-file", type=Path, help="JSON map video_id -> k")
    p.add_argument("--dump-plan", action="store_true", help="also write plan.tsr and its JSON sidecar")

    p = sub.add_parser("eval", help="score predictions against ground truth")
    _add_shared(p, solver=False)
    p.add_argument("pred", type=Path, help="prediction label file or segment output directory")
    p.add_argument("gt", type=Path, help="ground-truth label file or fixture directory")
    p.add_argument("--csv", action="store_true", help="also write report.csv")

    p = sub.add_parser("plot", help="SVG timeline of prediction vs ground truth")
    _add_shared(p, solver=False)
    p.add_argument("pred", type=Path)
    p.add_argument("gt", type=Path)
    p.add_argument("--out", type=Path, help="SVG path (default: OUT_DIR/timeline.svg)")

    p = sub.add_parser("sweep", help="grid over beta/k/alpha, metrics to CSV")
    _add_shared(p)
    p.add_argument("data", type=Path)
    p.add_argument("--beta-grid", help="comma separated betas")
    p.add_argument("--k-grid", help="comma separated cluster counts")
    p.add_argument("--alpha-grid", help="comma separated alphas")
    return parser


# ---------------------------------------------------------------- helpers

def resolve(args) -> RunConfig:
    overrides = {name: getattr(args, name, None) for name in CONFIG_FLAGS}
    overrides["fusion_mode"] = getattr(args, "fusion_mode", None)
    overrides["hard_labels"] = getattr(args, "hard_labels", None)
    overrides["seed"] = args.seed
    if getattr(args, "preset", None):
        overrides["preset"] = args.preset
    return load_config(args.config, overrides)


def _out(args) -> Path:
    args.out_dir.mkdir(parents=True, exist_ok=True)
    return args.out_dir


def write_run_manifest(args, config: RunConfig | None) -> None:
    doc = {
        "command": args.command,
        "args": {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()},
        "config": config.to_dict() if config is not None else None,
        "version": __version__,
    }
    atomic_write_text(_out(args) / "run.json", json.dumps(doc, indent=2, default=str))


def _pmap(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _k_map(path) -> dict[str, int]:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
        return {str(k): int(v) for k, v in doc.items()}
    except (OSError, ValueError, AttributeError) as exc:
        raise ConfigError(f"bad --k-file {path}: {exc}") from exc


def _grid(text, cast) -> list | None:
    if text is None:
        return None
    values = [cast(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ConfigError("empty grid")
    return values


def _needs_text(config: RunConfig) -> bool:
    return config.fusion_mode in ("text-only", "concat")


# ---------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    base = args.seed or 0
    specs = [
        SynthSpec(t_frames=args.t_frames, k_true=args.k_true, d_img=args.d_img, d_text=args.d_text,
                  sigma_img=args.sigma_img, sigma_text=args.sigma_text, min_seg_len=args.min_seg_len,
                  order=args.order, caption_coverage=args.coverage, seed=base + i,
                  img_angle=args.img_angle)
        for i in range(args.n_videos)
    ]
    ids = write_fixture(_out(args), specs)
    write_run_manifest(args, None)
    print(f"wrote {len(ids)} synthetic video(s) to {args.out_dir}")
    return 0


def cmd_train(args) -> int:
    config = resolve(args)
    out = _out(args)
    videos = load_videos(args.data, fps=config.fps, window_len=config.window_len,
                         require_text=_needs_text(config))
    bundles = [v.bundle for v in videos]
    k_map = _k_map(args.k_file)
    log_path = out / "train_log.jsonl"
    with open(log_path, "w") as fh:
        if k_map:
            for b in bundles:
                cfg = config.replace(k=k_map.get(b.video_id, config.k))
                state = train([b], cfg, log_fh=fh)
                save_checkpoint(state.model, out / "models" / b.video_id, {"k": cfg.k})
            print(f"trained {len(bundles)} per-video models under {out / 'models'}")
        else:
            model = load_checkpoint(args.resume) if args.resume else None
            state = train(bundles, config, model=model, log_fh=fh)
            save_checkpoint(state.model, out / "model", {"epochs": config.train.epochs})
            means = state.epoch_means(config.train.steps_per_epoch, len(bundles))
            if means:
                print(f"epochs={len(means)} first-epoch loss={means[0]:.4f} last-epoch loss={means[-1]:.4f}")
            print(f"checkpoint written to {out / 'model'}")
    write_run_manifest(args, config)
    return 0


def _model_for(args, config, bundle, k):
    if args.model is None:
        return new_model(bundle, config, k)
    per_video = args.model / bundle.video_id
    if (per_video / "manifest.json").exists():
        return load_checkpoint(per_video)
    return load_checkpoint(args.model)


def cmd_segment(args) -> int:
    config = resolve(args)
    out = _out(args)
    need = _needs_text(config)
    if args.data.is_file() and args.data.suffix in (".tsr", ".csv"):
        if need and args.captions is None:
            raise ConfigError(f"fusion mode {config.fusion_mode} needs --captions")
        bundles = [load_bundle(args.data, args.captions, args.caption_embeddings,
                               video_id=args.data.stem, fps=config.fps, window_len=config.window_len,
                               text_dim=args.text_dim, require_text=need)]
    else:
        dirs = video_dirs(args.data)
        for d in dirs:
            if need and not (d / "captions.json").exists():
                raise ConfigError(f"fusion mode {config.fusion_mode} needs captions, none in {d}")
        bundles = [load_video(d, fps=config.fps, window_len=config.window_len).bundle for d in dirs]
    k_map = _k_map(args.k_file)

    def run(bundle):
        k = k_map.get(bundle.video_id, config.k)
        cfg = config.replace(k=k)
        model = _model_for(args, cfg, bundle, k)
        if model.k != k:
            cfg = cfg.replace(k=model.k)
        result = segment(model, bundle, cfg)
        vdir = out / bundle.video_id
        vdir.mkdir(parents=True, exist_ok=True)
        write_labels(result.labels, vdir / "pred.txt")
        if args.dump_plan:
            save_plan(result, vdir / "plan.tsr")
        return bundle.video_id, result

    for vid, result in _pmap(run, bundles, args.jobs):
        state = "converged" if result.converged else "not converged"
        print(f"{vid}: {state} after {result.outer_iters} outer iterations, objective {result.objective:.6f}")
    write_run_manifest(args, config)
    return 0


def _pairs(pred: Path, gt: Path) -> list[tuple[str, Path, Path]]:
    if pred.is_file() and gt.is_file():
        return [(gt.parent.name or gt.stem, pred, gt)]
    if pred.is_dir():
        pairs = []
        for d in video_dirs(gt) if gt.is_dir() else []:
            p = pred / d.name / "pred.txt"
            if not p.exists():
                raise DataError(f"no prediction for video {d.name} under {pred}")
            pairs.append((d.name, p, d / "labels.txt"))
        if pairs:
            return pairs
    raise DataError("pred/gt must both be label files, or a segment output dir and a fixture dir")


def _score(item):
    vid, pred_path, gt_path = item
    pred = read_cluster_labels(pred_path)
    gt = read_labels(gt_path)
    if pred.shape != gt.labels.shape:
        raise DataError(f"{vid}: {pred.size} predicted frames vs {gt.labels.size} ground-truth frames")
    return evaluate(pred, gt.labels, DEFAULT_THRESHOLDS, n_classes=gt.n_classes, video_id=vid)


def cmd_eval(args) -> int:
    reports = _pmap(_score, _pairs(args.pred, args.gt), args.jobs)
    doc = {"videos": [r.to_dict() for r in reports], "mean": mean_report(reports)}
    out = _out(args)
    atomic_write_text(out / "report.json", json.dumps(doc, indent=2))
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["video_id", "mof", "frame_f1", "seg_f1_t10", "seg_f1_t25", "seg_f1_t50"])
        for r in reports:
            d = r.to_dict()
            w.writerow([r.video_id, r.mof, r.frame_f1, d["seg_f1"]["t10"], d["seg_f1"]["t25"], d["seg_f1"]["t50"]])
        atomic_write_text(out / "report.csv", buf.getvalue())
    print(json.dumps(doc["mean"], indent=2))
    write_run_manifest(args, None)
    return 0


def cmd_plot(args) -> int:
    pred = read_cluster_labels(args.pred)
    gt = read_labels(args.gt)
    svg = timeline_svg(pred, gt.labels, gt.class_names)
    path = args.out or (_out(args) / "timeline.svg")
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, svg)
    print(f"wrote {path}")
    return 0


def run_sweep(videos, config: RunConfig, betas=None, ks=None, alphas=None, jobs: int = 1) -> list[dict]:
    """Train-and-segment every video for each grid point; one row per setting."""
    betas = betas or [config.beta]
    ks = ks or [config.k]
    alphas = alphas or [config.alpha]
    rows = []
    for beta, k, alpha in itertools.product(betas, ks, alphas):
        cfg = config.replace(beta=beta, k=k, alpha=alpha)

        def one(video, cfg=cfg):
            if video.gt is None:
                raise DataError(f"{video.video_id} has no labels.txt to score against")
            _, plan = fit_predict(video.bundle, cfg)
            return evaluate(plan.labels, video.gt.labels, n_clusters=cfg.k,
                            n_classes=video.gt.n_classes, video_id=video.video_id)

        mean = mean_report(_pmap(one, videos, jobs))
        rows.append({"beta": beta, "k": k, "alpha": alpha, "mof": mean["mof"],
                     "frame_f1": mean["frame_f1"],
                     **{f"seg_f1_{t}": v for t, v in mean["seg_f1"].items()}})
    return rows


def cmd_sweep(args) -> int:
    config = resolve(args)
    betas = _grid(args.beta_grid, float)
    ks = _grid(args.k_grid, int)
    alphas = _grid(args.alpha_grid, float)
    if betas is None and ks is None and alphas is None:
        raise ConfigError("sweep needs at least one of --beta-grid, --k-grid, --alpha-grid")
    videos = load_videos(args.data, fps=config.fps, window_len=config.window_len,
                         require_text=_needs_text(config))
    rows = run_sweep(videos, config, betas, ks, alphas, args.jobs)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    atomic_write_text(_out(args) / "sweep.csv", buf.getvalue())
    sys.stdout.write(buf.getvalue())
    write_run_manifest(args, config)
    return 0


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "segment": cmd_segment,
            "eval": cmd_eval, "plot": cmd_plot, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except OTSegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
