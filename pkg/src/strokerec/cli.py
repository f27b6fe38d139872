"""Command-line surface: gen | train | eval | recover | render.

Exit codes: 0 success, 1 runtime failure, 2 usage error. All errors go to
stderr with an "error:" prefix.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import checkpoint as ckpt
from . import data as dat
from . import evalmetrics as ev
from . import model as mdl
from . import trainer as tr
from .raster import read_pgm, skeletonize, snap_to_skeleton, write_pgm
from .render import render_svg
from .trajectory import PenTrajectory


def _build_parser():
    p = argparse.ArgumentParser(prog="strokerec",
                                description="Pen-trajectory recovery from offline character images")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic glyph dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--per-class", type=int, default=500)
    g.add_argument("--classes", default=",".join(dat.CLASSES))

    t = sub.add_parser("train", help="train a recovery model")
    t.add_argument("--data", required=True)
    t.add_argument("--val")
    t.add_argument("--config", help="key = value training config file")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--loss-csv")

    e = sub.add_parser("eval", help="evaluate a checkpoint or the baseline tracer")
    e.add_argument("--data", required=True)
    e.add_argument("--ckpt")
    e.add_argument("--baseline", action="store_true")
    e.add_argument("--no-snap", action="store_true")
    e.add_argument("--csv-out")

    r = sub.add_parser("recover", help="recover the trajectory of one PGM image")
    r.add_argument("--image", required=True, help="P5 PGM input")
    r.add_argument("--ckpt", required=True)
    r.add_argument("--out", required=True, help="SVG output")
    r.add_argument("--no-snap", action="store_true")
    r.add_argument("--hist-out", help="CSV histogram of raw predicted X/Y values")

    d = sub.add_parser("render", help="draw GT and/or predicted trajectories as SVG")
    d.add_argument("--data", required=True)
    d.add_argument("--id", required=True)
    d.add_argument("--pred", help="CSV of predicted x,y points")
    d.add_argument("--out", required=True)
    return p


def _load_pairs(path, n_points=50):
    records = dat.load_dataset(path)
    pairs = []
    for rec in records:
        img, target = dat.make_pair(rec, n_points=n_points)
        pairs.append((rec.id, img, target))
    return pairs


def _load_checkpoint_model(path):
    records = ckpt.read_records(path)
    if ckpt.CONFIG_RECORD not in records:
        raise ckpt.CheckpointError("checkpoint has no config record")
    cfg = mdl.config_from_vec(records[ckpt.CONFIG_RECORD])
    store = mdl.init_params(cfg, seed=0)
    ckpt.load_into_store(records, store)
    return store, cfg


def _cmd_gen(args):
    classes = tuple(c.strip() for c in args.classes.split(",") if c.strip())
    records = dat.generate_corpus(args.seed, args.per_class, classes=classes)
    dat.save_dataset(args.out, records)
    print(f"wrote {len(records)} records to {args.out} (digest {dat.corpus_digest(records)[:12]})")
    return 0


def _cmd_train(args):
    cfg = tr.TrainConfig()
    if args.config:
        with open(args.config) as f:
            cfg = tr.parse_train_config(f.read())
    n = getattr(mdl.ModelConfig, cfg.model)().seq.n_steps
    train_pairs = [(img, t.points) for _, img, t in _load_pairs(args.data, n)]
    val_pairs = [(img, t.points) for _, img, t in _load_pairs(args.val, n)] if args.val else None

    def log(epoch, train_loss, val_loss):
        msg = f"epoch {epoch}: train L1 {train_loss:.4f}"
        if val_loss is not None:
            msg += f", val L1 {val_loss:.4f}"
        print(msg)

    _, history = tr.train(train_pairs, cfg, val=val_pairs, ckpt_path=args.out, log=log)
    if args.loss_csv:
        with open(args.loss_csv, "w") as f:
            f.write(tr.history_csv(history))
    print(f"checkpoint written to {args.out}")
    return 0


def _cmd_eval(args):
    pairs = _load_pairs(args.data)
    samples = [ev.EvalSample(id=i, image=img, gt=t) for i, img, t in pairs]
    if args.baseline:
        recover_fn = ev.baseline_recoverer
        label = "baseline trace (simplified graph tracer)"
    else:
        if not args.ckpt:
            raise ValueError("--ckpt is required unless --baseline is given")
        store, cfg = _load_checkpoint_model(args.ckpt)
        recover_fn = ev.model_recoverer(store, cfg, snap=not args.no_snap)
        label = "encoder-decoder model"
    report = ev.evaluate(samples, recover_fn)
    print(report.to_table(label=label), end="")
    if args.csv_out:
        with open(args.csv_out, "w") as f:
            f.write(report.to_csv())
    return 0


def _cmd_recover(args):
    img = read_pgm(args.image)
    store, cfg = _load_checkpoint_model(args.ckpt)
    pred = mdl.recover_trajectory(img, store, cfg)
    if args.hist_out:
        edges = np.arange(-8, 73, 1.0)
        hx, _ = np.histogram(pred.points[:, 0], bins=edges)
        hy, _ = np.histogram(pred.points[:, 1], bins=edges)
        with open(args.hist_out, "w") as f:
            f.write("bin_left,count_x,count_y\n")
            for left, cx, cy in zip(edges[:-1], hx, hy):
                f.write(f"{left:.0f},{cx},{cy}\n")
    if not args.no_snap:
        pred = snap_to_skeleton(pred, skeletonize(img))
    with open(args.out, "w") as f:
        f.write(render_svg(pred=pred, img=img))
    print(f"recovered {len(pred)} points -> {args.out}")
    return 0


def _cmd_render(args):
    records = {r.id: r for r in dat.load_dataset(args.data)}
    if args.id not in records:
        raise ValueError(f"record id {args.id!r} not in {args.data}")
    img, gt = dat.make_pair(records[args.id])
    pred = None
    if args.pred:
        pts = np.loadtxt(args.pred, delimiter=",", ndmin=2)
        pred = PenTrajectory(pts)
    with open(args.out, "w") as f:
        f.write(render_svg(gt=gt, pred=pred, img=img))
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "recover": _cmd_recover,
    "render": _cmd_render,
}


def run(argv) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
