"""Pure-numpy implementations of the hot training kernels.

Fallback used when the compiled extension is unavailable (or when
``HGFLOW_KERNELS=python`` is set). Same call surface as ``_core``.
"""

import numpy as np
from scipy.special import expit

NAME = "python"


def affine_forward(x, w, b):
    """y = x @ w + b for a batch x of shape (B, m)."""
    return x @ w + b


def affine_backward(x, w, gy, need_gx):
    """Gradients of the affine map; gx is None when need_gx is false."""
    gx = gy @ w.T if need_gx else None
    gw = x.T @ gy
    gb = gy.sum(axis=0)
    return gx, gw, gb


def silu_forward(z):
    """Returns (silu(z), sigmoid(z)); the sigmoid is kept for backward."""
    s = expit(z)
    return z * s, s


def silu_backward(z, s, gy):
    return gy * (s * (1.0 + z * (1.0 - s)))


def adam_update(values, grad, m, v, step, lr, beta1, beta2, eps):
    """Bias-corrected Adam update, in place on flat float64 arrays."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**step)
    vhat = v / (1.0 - beta2**step)
    values -= lr * mhat / (np.sqrt(vhat) + eps)
