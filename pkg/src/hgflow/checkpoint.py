"""Model checkpoints: all parameters as one float64 payload + JSON header."""

from . import binfile
from .models import build_model

import numpy as np

CHECKPOINT_VERSION = 1


def save_checkpoint(path, model, step=0, seed=None):
    params = model.parameters()
    flat = np.concatenate([p.values.reshape(-1) for p in params])
    meta = {
        "checkpoint_version": CHECKPOINT_VERSION,
        "variant": model.variant,
        "n": model.n,
        "hidden": getattr(model, "hidden", None),
        "independent_direction": getattr(model, "independent_direction", False),
        "two_field": getattr(model, "two_field", False),
        "build_seed": model.seed if seed is None else seed,
        "step": step,
        "networks": [
            {"name": name, "layer_dims": list(net.spec.layer_dims)}
            for name, net in model.nets.items()
        ],
    }
    binfile.write_array(path, flat.reshape(1, -1), kind="hgflow-checkpoint", meta=meta)


def load_checkpoint(path):
    """Rebuild the model and restore its parameters; returns (model, meta)."""
    flat, meta = binfile.read_array(path, kind="hgflow-checkpoint")
    if meta.get("checkpoint_version") != CHECKPOINT_VERSION:
        raise binfile.BlobError(f"{path}: unsupported checkpoint version")
    model = build_model(
        meta["variant"],
        meta["n"],
        seed=meta["build_seed"],
        hidden=meta["hidden"],
        independent_direction=meta["independent_direction"],
        two_field=meta["two_field"],
    )
    expected = [
        (name, tuple(net.spec.layer_dims)) for name, net in model.nets.items()
    ]
    stored = [(n["name"], tuple(n["layer_dims"])) for n in meta["networks"]]
    if expected != stored:
        raise binfile.BlobError(f"{path}: checkpoint networks do not match the build")
    flat = flat.reshape(-1)
    pos = 0
    for p in model.parameters():
        p.values[...] = flat[pos : pos + p.size].reshape(p.values.shape)
        pos += p.size
    if pos != flat.size:
        raise binfile.BlobError(f"{path}: parameter payload size mismatch")
    return model, meta
