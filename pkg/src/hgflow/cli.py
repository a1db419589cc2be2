"""The ``hgfm`` command line.

Subcommands: gen-data, train, sample, run, report, describe. ``run``
exits 0 when every cell completed and 2 on partial failure. The train
config file is flat ``key = value`` text; unknown keys are rejected.
"""

import argparse
import dataclasses
import json
import os
import sys

from . import __version__
from ._kernels import BACKEND_NAME
from . import binfile
from .checkpoint import load_checkpoint, save_checkpoint
from .data import generate_to_dir, load_dataset
from .harness import emit_report, plan_from_json, run_experiment
from .models import build_model, describe
from .sampler import generate
from .train import TrainConfig, TrainingDiverged, train


def _parse_config_file(path, variant, n):
    """Flat key=value text -> TrainConfig; '#' starts a comment."""
    fields = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    casts = {
        "batch_size": int, "steps": int, "seed": int, "eval_every": int,
        "n_eval_pairs": int, "hidden": int,
        "lr": float, "beta1": float, "beta2": float, "eps": float,
        "deterministic": lambda s: s.lower() in ("1", "true", "yes"),
        "independent_direction": lambda s: s.lower() in ("1", "true", "yes"),
        "two_field": lambda s: s.lower() in ("1", "true", "yes"),
    }
    values = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise SystemExit(f"{path}:{lineno}: expected key = value")
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key in ("variant", "n"):
                    raise SystemExit(
                        f"{path}:{lineno}: {key} comes from the command line"
                    )
                if key not in fields or key not in casts:
                    raise SystemExit(f"{path}:{lineno}: unknown config key {key!r}")
                values[key] = casts[key](value)
    return TrainConfig(variant=variant, n=n, **values)


def _cmd_gen_data(args):
    spec, paths = generate_to_dir(args.n, args.seed, args.out, csv=args.csv)
    print(f"wrote {paths['train']} and {paths['test']} (K={spec.k})")
    return 0


def _cmd_train(args):
    train_ds = load_dataset(os.path.join(args.data, "train.bin"))
    test_ds = load_dataset(os.path.join(args.data, "test.bin"))
    n = train_ds.spec.n
    config = _parse_config_file(args.config, args.model, n)
    model = build_model(
        args.model, n, seed=config.seed, hidden=config.hidden,
        independent_direction=config.independent_direction,
        two_field=config.two_field,
    )
    os.makedirs(args.out, exist_ok=True)
    metrics_path = os.path.join(args.out, "metrics.jsonl")
    with open(metrics_path, "w", encoding="utf-8") as stream:

        def on_step(step, metrics):
            record = {"step": step, "train_loss": metrics.train_curve[-1][1]}
            if metrics.test_curve and metrics.test_curve[-1][0] == step:
                record["test_loss"] = metrics.test_curve[-1][1]
            stream.write(json.dumps(record) + "\n")

        try:
            model, metrics = train(
                model, train_ds, config, test_dataset=test_ds, on_step=on_step
            )
        except TrainingDiverged as exc:
            ckpt = os.path.join(args.out, "last_good.ckpt")
            save_checkpoint(ckpt, model, step=exc.step - 1, seed=config.seed)
            print(f"training diverged: {exc}; last-good checkpoint at {ckpt}",
                  file=sys.stderr)
            return 1
    ckpt = os.path.join(args.out, "model.ckpt")
    save_checkpoint(ckpt, model, step=config.steps, seed=config.seed)
    summary = {
        "variant": args.model,
        "n": n,
        "final_train": metrics.final_train,
        "final_test": metrics.final_test,
        "params": metrics.param_count,
        "wall_time": metrics.wall_time,
        "eval_digest": metrics.eval_digest,
        "kernel_backend": BACKEND_NAME,
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    print(json.dumps(summary))
    return 0


def _cmd_sample(args):
    model, meta = load_checkpoint(args.ckpt)
    points = generate(model, args.n, steps=args.steps, seed=args.seed)
    binfile.write_array(
        args.out,
        points,
        kind="hgflow-samples",
        meta={
            "n": model.n,
            "variant": model.variant,
            "steps": args.steps,
            "seed": args.seed,
            "checkpoint_step": meta.get("step"),
        },
    )
    print(f"wrote {args.n} samples to {args.out}")
    return 0


def _cmd_run(args):
    with open(args.plan, encoding="utf-8") as fh:
        plan = plan_from_json(json.load(fh), out_dir=args.out)
    report = run_experiment(plan)
    print(f"report written to {os.path.join(plan.out_dir, 'report.json')}")
    return 0 if report["all_ok"] else 2


def _cmd_report(args):
    report_path = os.path.join(args.in_dir, "report.json")
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    out_path = args.out or os.path.join(args.in_dir, f"report.{args.format}")
    emit_report(report, args.format, out_path)
    print(f"wrote {out_path}")
    return 0


def _cmd_describe(args):
    rows = describe(args.variant, args.n)
    print(json.dumps(rows, indent=1))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hgfm",
        description="higher-gauge flow models: data, training, sampling, benchmark",
    )
    parser.add_argument("--version", action="version",
                        version=f"hgfm {__version__} (kernels: {BACKEND_NAME})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a mixture dataset pair")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=lambda s: int(s, 0), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train", help="train one model variant")
    p.add_argument("--model", choices=("plain", "gauge", "hgfm"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("sample", help="integrate a trained flow from the prior")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("run", help="run the full comparison experiment")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("report", help="render a finished run as json/csv/md")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--format", choices=("json", "csv", "md"), default="md")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("describe", help="emit the network table as JSON")
    p.add_argument("--variant", choices=("plain", "gauge", "hgfm"), default="hgfm")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=_cmd_describe)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
