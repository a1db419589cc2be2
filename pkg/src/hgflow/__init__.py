"""hgflow: higher-gauge flow models on a verifiable graded-algebra core.

Subpackages of note:

- ``graded`` / ``son``: graded vectors, bracket tables, law checkers, and
  the concrete two-term algebra on so(N).
- ``nn``: minimal float64 MLP stack (tape autodiff + Adam) over swappable
  compiled/numpy kernels.
- ``models`` / ``field``: the three model variants and their vector fields.
- ``data`` / ``train`` / ``sampler``: deterministic Gaussian-mixture data,
  conditional flow-matching training, ODE sampling.
- ``harness`` / ``cli``: the end-to-end benchmark (``hgfm`` command).
"""

__version__ = "0.1.0"

from ._kernels import BACKEND_NAME
from .data import GmmSpec, make_spec, sample_dataset, spec_for_dimension
from .graded import (
    GradedVector,
    LInfinityAlgebra,
    check_jacobi,
    check_skew,
    eval_bracket,
    koszul_sign,
)
from .models import build_baseline, build_hgfm, build_model, count_params
from .sampler import generate, integrate
from .son import build_two_term, killing_form
from .train import TrainConfig, cfm_loss, evaluate, sample_path

__all__ = [
    "BACKEND_NAME",
    "GmmSpec",
    "GradedVector",
    "LInfinityAlgebra",
    "TrainConfig",
    "__version__",
    "build_baseline",
    "build_hgfm",
    "build_model",
    "build_two_term",
    "cfm_loss",
    "check_jacobi",
    "check_skew",
    "count_params",
    "eval_bracket",
    "evaluate",
    "generate",
    "integrate",
    "killing_form",
    "koszul_sign",
    "make_spec",
    "sample_dataset",
    "sample_path",
    "spec_for_dimension",
]
