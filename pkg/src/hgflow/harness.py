"""End-to-end benchmark: data, three trained variants, normalized report.

For every (N, seed) cell the three variants share one dataset and one
frozen evaluation-triple stream (digest-checked), so loss comparisons
are paired. Final losses are averaged over seeds, then normalized by the
higher-gauge model's value at the same N. A per-N directional verdict
(higher-gauge beats both baselines on test loss) is printed as
pass/warn; a warn never fails the run.

Any cell that raises is marked failed and the remaining cells continue.
"""

import json
import os
import traceback
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import save_checkpoint
from .data import load_dataset, make_spec, sample_dataset, save_dataset
from .models import build_model, count_params
from .train import TrainConfig, train

REPORT_VARIANTS = ("plain", "gauge", "hgfm")
CSV_COLUMNS = ("N", "variant", "train", "test", "train_norm", "test_norm", "params")


@dataclass
class ExperimentPlan:
    dims: list
    seeds: list
    out_dir: str
    config: dict = field(default_factory=dict)
    variant_config: dict = field(default_factory=dict)
    save_checkpoints: bool = True

    def __post_init__(self):
        if not self.dims or not all(3 <= n <= 32 for n in self.dims):
            raise ValueError("plan dims must be a non-empty subset of [3, 32]")
        if not self.seeds:
            raise ValueError("plan needs at least one seed")


def plan_from_json(doc, out_dir=None):
    known = {"dims", "seeds", "out_dir", "config", "variant_config",
             "save_checkpoints"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown plan fields: {sorted(unknown)}")
    args = dict(doc)
    if out_dir is not None:
        args["out_dir"] = out_dir
    return ExperimentPlan(**args)


def _dataset_pair(plan, n, seed):
    """Generate or load the cached dataset pair for one (N, seed) cell."""
    spec = make_spec(n, seed)
    cache = os.path.join(plan.out_dir, "data", f"n{n}_seed{seed}")
    pair = {}
    for split in ("train", "test"):
        path = os.path.join(cache, f"{split}.bin")
        if os.path.exists(path):
            pair[split] = load_dataset(path, expected_spec=spec)
        else:
            pair[split] = sample_dataset(spec, split)
            save_dataset(pair[split], path)
    return pair


def _cell_config(plan, variant, n, seed):
    overrides = dict(plan.config)
    overrides.update(plan.variant_config.get(variant, {}))
    return TrainConfig(variant=variant, n=n, seed=seed, **overrides)


def run_experiment(plan, log=print):
    """Execute the plan; returns the comparison report dict."""
    cells = {}
    for n in plan.dims:
        for seed in plan.seeds:
            try:
                datasets = _dataset_pair(plan, n, seed)
            except Exception as exc:  # noqa: BLE001 - cell isolation
                for variant in REPORT_VARIANTS:
                    cells[(n, variant, seed)] = {
                        "status": "failed",
                        "error": f"dataset: {exc}",
                    }
                log(f"[n={n} seed={seed}] dataset generation failed: {exc}")
                continue
            digests = set()
            for variant in REPORT_VARIANTS:
                key = (n, variant, seed)
                try:
                    config = _cell_config(plan, variant, n, seed)
                    model = build_model(
                        variant, n, seed=seed, hidden=config.hidden,
                        independent_direction=config.independent_direction,
                        two_field=config.two_field,
                    )
                    model, metrics = train(
                        model, datasets["train"], config,
                        test_dataset=datasets["test"],
                    )
                    digests.add(metrics.eval_digest)
                    if len(digests) > 1:
                        raise RuntimeError("evaluation triples diverged across variants")
                    cells[key] = {
                        "status": "ok",
                        "train": metrics.final_train,
                        "test": metrics.final_test,
                        "params": count_params(model),
                        "wall_time": metrics.wall_time,
                        "eval_digest": metrics.eval_digest,
                        "dataset_hash": datasets["train"].spec_hash,
                        "train_curve": metrics.train_curve[:: max(1, config.eval_every)],
                        "test_curve": metrics.test_curve,
                    }
                    if plan.save_checkpoints:
                        ckpt = os.path.join(
                            plan.out_dir, "runs", f"n{n}", f"seed{seed}",
                            f"{variant}.ckpt",
                        )
                        save_checkpoint(ckpt, model, step=config.steps, seed=seed)
                    log(
                        f"[n={n} seed={seed}] {variant}: train {metrics.final_train:.4f} "
                        f"test {metrics.final_test:.4f} "
                        f"({metrics.wall_time:.1f}s, {count_params(model)} params)"
                    )
                except Exception as exc:  # noqa: BLE001 - cell isolation
                    cells[key] = {
                        "status": "failed",
                        "error": "".join(
                            traceback.format_exception_only(type(exc), exc)
                        ).strip(),
                    }
                    log(f"[n={n} seed={seed}] {variant} FAILED: {exc}")
    return _assemble_report(plan, cells, log)


def _assemble_report(plan, cells, log):
    rows = []
    verdicts = {}
    for n in plan.dims:
        per_variant = {}
        for variant in REPORT_VARIANTS:
            ok = [
                cells[(n, variant, s)]
                for s in plan.seeds
                if cells.get((n, variant, s), {}).get("status") == "ok"
            ]
            if ok:
                per_variant[variant] = {
                    "train": float(np.mean([c["train"] for c in ok])),
                    "test": float(np.mean([c["test"] for c in ok])),
                    "params": ok[0]["params"],
                    "seeds_ok": len(ok),
                }
        ref = per_variant.get("hgfm")
        for variant in REPORT_VARIANTS:
            cell = per_variant.get(variant)
            if cell is None:
                rows.append({"N": n, "variant": variant, "status": "failed"})
                continue
            row = {"N": n, "variant": variant, "status": "ok", **cell}
            if ref is not None:
                row["train_norm"] = (
                    1.0 if variant == "hgfm" else cell["train"] / ref["train"]
                )
                row["test_norm"] = (
                    1.0 if variant == "hgfm" else cell["test"] / ref["test"]
                )
            rows.append(row)
        if ref is not None and len(per_variant) == len(REPORT_VARIANTS):
            beats = (
                ref["test"] <= per_variant["plain"]["test"]
                and ref["test"] <= per_variant["gauge"]["test"]
            )
            verdicts[str(n)] = "pass" if beats else "warn"
            log(
                f"[n={n}] directional verdict: {verdicts[str(n)]} "
                f"(hgfm test {ref['test']:.4f} vs plain "
                f"{per_variant['plain']['test']:.4f}, gauge "
                f"{per_variant['gauge']['test']:.4f})"
            )
    report = {
        "dims": list(plan.dims),
        "seeds": list(plan.seeds),
        "rows": rows,
        "verdicts": verdicts,
        "cells": {
            f"n{n}/{variant}/seed{seed}": value
            for (n, variant, seed), value in sorted(cells.items(), key=str)
        },
        "all_ok": all(c.get("status") == "ok" for c in cells.values()),
    }
    os.makedirs(plan.out_dir, exist_ok=True)
    with open(os.path.join(plan.out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    return report


def _format_cell(row, key):
    value = row.get(key)
    if value is None:
        # failed cells are marked explicitly rather than left blank
        return "failed" if row.get("status") == "failed" else ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def emit_report(report, fmt, out_path):
    """Render the report as json, csv, or a markdown table."""
    if fmt == "json":
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
        return out_path
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in report["rows"]:
            lines.append(",".join(_format_cell(row, k) for k in CSV_COLUMNS))
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        return out_path
    if fmt == "md":
        header = "| " + " | ".join(CSV_COLUMNS) + " |"
        sep = "|" + "|".join(["---"] * len(CSV_COLUMNS)) + "|"
        lines = [header, sep]
        for row in report["rows"]:
            lines.append(
                "| " + " | ".join(_format_cell(row, k) for k in CSV_COLUMNS) + " |"
            )
        if report.get("verdicts"):
            lines.append("")
            for n, verdict in sorted(report["verdicts"].items()):
                lines.append(f"- N={n}: directional verdict **{verdict}**")
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        return out_path
    raise ValueError(f"unknown report format {fmt!r}")
