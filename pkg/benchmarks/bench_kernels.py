"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the primitive kernels and one full training step of each model
variant under both backends (each backend runs in a fresh subprocess so
the import-time selection is honest). Run from the repo root:

    python3 benchmarks/bench_kernels.py [--steps 200] [--batch 256]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _backends():
    from hgflow._kernels import numpy_backend

    out = {"python": numpy_backend}
    try:
        from hgflow._kernels import _core

        out["c"] = _core
    except ImportError:
        pass
    return out


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_primitives(backend, batch):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((batch, 64))
    w = rng.standard_normal((64, 64))
    b = rng.standard_normal(64)
    gy = rng.standard_normal((batch, 64))
    z = rng.standard_normal((batch, 64))
    _, s = backend.silu_forward(z)
    values = rng.standard_normal(50000)
    grad = rng.standard_normal(50000)
    m = np.zeros(50000)
    v = np.zeros(50000)
    return {
        "affine_forward": time_fn(lambda: backend.affine_forward(x, w, b), 200),
        "affine_backward": time_fn(
            lambda: backend.affine_backward(x, w, gy, True), 200
        ),
        "silu_forward": time_fn(lambda: backend.silu_forward(z), 200),
        "silu_backward": time_fn(lambda: backend.silu_backward(z, s, gy), 200),
        "adam_update(50k)": time_fn(
            lambda: backend.adam_update(values, grad, m, v, 1, 1e-3, 0.9,
                                        0.999, 1e-8),
            200,
        ),
    }


def bench_train_step(batch, steps):
    from hgflow.data import Dataset, make_spec, sample_dataset, spec_hash
    from hgflow.models import build_model
    from hgflow.train import TrainConfig, train

    spec = make_spec(3, seed=0)
    full = sample_dataset(spec, "train")
    ds = Dataset(points=full.points[:4000], split="train", spec=spec,
                 spec_hash=spec_hash(spec))
    out = {}
    for variant in ("plain", "gauge", "hgfm"):
        model = build_model(variant, 3, seed=1)
        cfg = TrainConfig(variant=variant, n=3, steps=steps, batch_size=batch,
                          seed=1, eval_every=10**9)
        start = time.perf_counter()
        train(model, ds, cfg)
        out[variant] = (time.perf_counter() - start) / steps
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--batch", type=int, default=256)
    parser.add_argument("--train-step-json", action="store_true",
                        help="internal: emit per-step training times as JSON")
    args = parser.parse_args()

    if args.train_step_json:
        print(json.dumps(bench_train_step(args.batch, args.steps)))
        return

    backends = _backends()
    if "c" not in backends:
        print("compiled extension not available; benchmarking numpy only")

    print(f"primitive kernels (batch {args.batch}, best of 200, ms):")
    rows = {name: bench_primitives(mod, args.batch) for name, mod in backends.items()}
    keys = list(next(iter(rows.values())))
    print(f"{'kernel':<18}" + "".join(f"{name:>12}" for name in rows))
    for key in keys:
        line = f"{key:<18}"
        for name in rows:
            line += f"{rows[name][key] * 1e3:>12.4f}"
        if len(rows) == 2:
            line += f"   python/c = {rows['python'][key] / rows['c'][key]:.2f}"
        print(line)

    print(f"\nfull training step, ms/step (batch {args.batch}, {args.steps} steps):")
    results = {}
    for name in backends:
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--train-step-json",
             "--steps", str(args.steps), "--batch", str(args.batch)],
            capture_output=True, text=True,
            env={**os.environ, "HGFLOW_KERNELS": name},
            check=True,
        )
        results[name] = json.loads(proc.stdout.strip().splitlines()[-1])
    print(f"{'variant':<10}" + "".join(f"{name:>12}" for name in results))
    for variant in ("plain", "gauge", "hgfm"):
        line = f"{variant:<10}"
        for name in results:
            line += f"{results[name][variant] * 1e3:>12.2f}"
        if len(results) == 2:
            line += f"   python/c = {results['python'][variant] / results['c'][variant]:.2f}"
        print(line)


if __name__ == "__main__":
    main()
