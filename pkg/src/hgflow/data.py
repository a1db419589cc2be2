"""Deterministic Gaussian-mixture datasets.

Component means follow a three-step construction (primary axis,
secondary axis, extra offset for k >= N when K > N); weights are uniform
and covariances isotropic. The size schedule pairs dimension brackets
with component counts: [3,8) -> (K=3000, 15k/5k), [8,12) -> (K=5000,
20k/7.5k), [12,32] -> (K=7000, 27k/10k).

Randomness is counter-derived per row: every row's stream is a SplitMix64
mix of (seed, split, row, word), so generation is order-independent and
embarrassingly parallel. Component draws use one word; normals come in
Box-Muller pairs. The algorithm ids are recorded in the file header.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from . import binfile

SPLITS = ("train", "test")
_SPLIT_SALT = {"train": np.uint64(0x747261696E), "test": np.uint64(0x74657374)}
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
RNG_ALGORITHM = "splitmix64/box-muller"


def spec_for_dimension(n):
    """(K, n_train, n_test) for a dimension in [3, 32]."""
    if not 3 <= n <= 32:
        raise ValueError(f"dimension {n} outside [3, 32]")
    if n < 8:
        return 3000, 15000, 5000
    if n < 12:
        return 5000, 20000, 7500
    return 7000, 27000, 10000


@dataclass(frozen=True)
class GmmSpec:
    """Mixture layout plus dataset sizes; weights are uniform 1/K."""

    n: int
    k: int
    n_train: int
    n_test: int
    seed: int
    spread: float = 25.0
    cov_scale: float = 0.5


def make_spec(n, seed):
    k, n_train, n_test = spec_for_dimension(n)
    return GmmSpec(n=n, k=k, n_train=n_train, n_test=n_test, seed=int(seed))


def spec_hash(spec):
    blob = json.dumps(asdict(spec), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def component_mean(spec, k):
    """Mean of component k: primary axis, secondary axis, extra offset."""
    if not 0 <= k < spec.k:
        raise ValueError(f"component {k} outside 0..{spec.k - 1}")
    n, kk, spread = spec.n, spec.k, spec.spread
    mu = np.zeros(n)
    a1 = k % n
    mu[a1] = (-1) ** k * spread
    a2 = (k + kk // 2) % n
    if a2 != a1:
        mu[a2] = (-1) ** (k + 1) * spread / 2.0
    if kk > n and k >= n:
        b = (a1 + k // n) % n
        s_k = 1.0 if k % 3 == 0 else -1.0
        mu[b] += s_k * 0.1 * spread * (k // n)
    return mu


def mean_table(spec):
    """All component means as a (K, N) array."""
    return np.stack([component_mean(spec, k) for k in range(spec.k)])


# ---- counter-derived row streams ------------------------------------------


def _mix64(x):
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    z = (x + _GOLDEN).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _row_words(spec, split, rows, word):
    """64-bit stream word ``word`` for each row index in ``rows``."""
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    # scalar uint64 ops warn on wraparound in numpy; stay in array land
    seed_arr = np.array([spec.seed % (1 << 64)], dtype=np.uint64)
    base = _mix64(seed_arr ^ _SPLIT_SALT[split])
    rows = np.asarray(rows, dtype=np.uint64)
    word_off = np.array([word], dtype=np.uint64) * _GOLDEN
    row_state = _mix64(base + rows * _GOLDEN)
    return _mix64(row_state + word_off)


def _uniform(words):
    """[0, 1) from the top 53 bits."""
    return (words >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _row_components(spec, split, rows):
    u = _uniform(_row_words(spec, split, rows, 0))
    return np.minimum((u * spec.k).astype(np.int64), spec.k - 1)


def _row_normals(spec, split, rows):
    """Standard normals, N per row, via Box-Muller on stream words 1.."""
    n_rows = len(rows)
    n_pairs = (spec.n + 1) // 2
    z = np.empty((n_rows, 2 * n_pairs))
    for p in range(n_pairs):
        w1 = _row_words(spec, split, rows, 1 + 2 * p)
        w2 = _row_words(spec, split, rows, 2 + 2 * p)
        u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
        u2 = _uniform(w2)
        r = np.sqrt(-2.0 * np.log(u1))
        z[:, 2 * p] = r * np.cos(2.0 * np.pi * u2)
        z[:, 2 * p + 1] = r * np.sin(2.0 * np.pi * u2)
    return z[:, : spec.n]


@dataclass
class Dataset:
    points: np.ndarray
    split: str
    spec: GmmSpec
    spec_hash: str

    @property
    def n_rows(self):
        return self.points.shape[0]


def sample_dataset(spec, split):
    """Draw the full split; deterministic per (spec, split), any row order."""
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    rows = np.arange(spec.n_train if split == "train" else spec.n_test)
    means = mean_table(spec)
    ks = _row_components(spec, split, rows)
    z = _row_normals(spec, split, rows)
    points = means[ks] + np.sqrt(spec.cov_scale) * z
    return Dataset(points=points, split=split, spec=spec, spec_hash=spec_hash(spec))


def save_dataset(ds, path):
    meta = {
        "spec": asdict(ds.spec),
        "split": ds.split,
        "spec_hash": ds.spec_hash,
        "rng": RNG_ALGORITHM,
    }
    binfile.write_array(path, ds.points, kind="hgflow-dataset", meta=meta)


def load_dataset(path, expected_spec=None):
    points, meta = binfile.read_array(path, kind="hgflow-dataset")
    spec = GmmSpec(**meta["spec"])
    if spec_hash(spec) != meta["spec_hash"]:
        raise binfile.BlobError(f"{path}: header spec hash mismatch")
    if expected_spec is not None and spec_hash(expected_spec) != meta["spec_hash"]:
        raise binfile.BlobError(
            f"{path}: dataset was generated from a different spec"
        )
    return Dataset(points=points, split=meta["split"], spec=spec,
                   spec_hash=meta["spec_hash"])


def export_csv(ds, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    header = ",".join(f"x{i}" for i in range(ds.spec.n))
    np.savetxt(path, ds.points, delimiter=",", header=header, comments="")


def generate_to_dir(n, seed, out_dir, csv=False):
    """Write train.bin/test.bin/spec.json (the gen-data CLI surface)."""
    spec = make_spec(n, seed)
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for split in SPLITS:
        ds = sample_dataset(spec, split)
        path = os.path.join(out_dir, f"{split}.bin")
        save_dataset(ds, path)
        paths[split] = path
        if csv:
            export_csv(ds, os.path.join(out_dir, f"{split}.csv"))
    with open(os.path.join(out_dir, "spec.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {"spec": asdict(spec), "spec_hash": spec_hash(spec), "rng": RNG_ALGORITHM},
            fh,
            indent=1,
            sort_keys=True,
        )
    return spec, paths
