"""Fixed-step ODE integration of a trained field from t=0 to t=1."""

import numpy as np

from .field import field_fn

METHODS = ("euler", "rk4")


class IntegrationError(RuntimeError):
    def __init__(self, step, t):
        super().__init__(f"non-finite state at step {step} (t={t:.4f})")
        self.step = step


def integrate(field, x0, steps, method="rk4", return_trajectory=False):
    """Integrate dx/dt = field(x, t) over [0, 1] on a uniform grid.

    ``field`` maps ((B, N), t) -> (B, N); ``x0`` may be a single point or
    a batch. Returns x(1), or the full (steps+1, B, N) trajectory.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    x = np.atleast_2d(np.asarray(x0, dtype=np.float64)).copy()
    single = np.asarray(x0).ndim == 1
    h = 1.0 / steps
    trajectory = [x.copy()] if return_trajectory else None
    for i in range(steps):
        t = i * h
        if method == "euler":
            x = x + h * field(x, t)
        else:
            k1 = field(x, t)
            k2 = field(x + 0.5 * h * k1, t + 0.5 * h)
            k3 = field(x + 0.5 * h * k2, t + 0.5 * h)
            k4 = field(x + h * k3, t + h)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(i + 1, t + h)
        if return_trajectory:
            trajectory.append(x.copy())
    if return_trajectory:
        out = np.stack(trajectory)
        return out[:, 0, :] if single else out
    return x[0] if single else x


def generate(model, n_samples, steps=100, seed=0, method="rk4", max_batch=4096):
    """Draw prior points and push them through the model's flow."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5A3)))
    x0 = rng.standard_normal((n_samples, model.n))
    field = field_fn(model)
    out = np.empty_like(x0)
    for lo in range(0, n_samples, max_batch):
        hi = min(lo + max_batch, n_samples)
        out[lo:hi] = integrate(field, x0[lo:hi], steps, method=method)
    return out
