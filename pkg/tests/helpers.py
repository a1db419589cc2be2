"""Shared test oracles: finite differences, commutators, Koszul pair rule."""

import numpy as np

from hgflow.field import field_batched
from hgflow.nn import Tape


def commutator(a, b):
    return a @ b - b @ a


def koszul_pair_oracle(word, degrees, convention="wedge"):
    """Closed-form sign: one factor per inversion pair of the permuted word."""
    sign = 1
    for p in range(len(word)):
        for q in range(p + 1, len(word)):
            if word[p] > word[q]:
                dp, dq = degrees[word[p]], degrees[word[q]]
                if convention == "wedge":
                    sign *= -((-1) ** (dp * dq))
                else:
                    sign *= (-1) ** ((dp + 1) * (dq + 1))
    return sign


def loss_value(model, x, t, u):
    tape = Tape()
    return tape.mse(field_batched(tape, model, x, t), u).value


def loss_with_grads(model, x, t, u):
    for p in model.parameters():
        p.zero_grad()
    tape = Tape()
    loss = tape.mse(field_batched(tape, model, x, t), u)
    tape.backward(loss)
    return loss.value


def gradcheck_model(model, x, t, u, rng, per_network=30, h=1e-5,
                    rtol=1e-4, atol=1e-7):
    """Central-difference check at randomly chosen parameter entries.

    Samples ``per_network`` entries uniformly over each network's
    flattened parameter space. Returns the worst relative error, with an
    absolute floor (atol/rtol) guarding near-zero entries against
    finite-difference roundoff.
    """
    loss_with_grads(model, x, t, u)
    worst = 0.0
    for net in model.nets.values():
        tensors = net.params()
        sizes = np.array([p.size for p in tensors])
        bounds = np.cumsum(sizes)
        for _ in range(per_network):
            flat_index = int(rng.integers(bounds[-1]))
            which = int(np.searchsorted(bounds, flat_index, side="right"))
            i = flat_index - (bounds[which - 1] if which else 0)
            p = tensors[which]
            flat = p.values.reshape(-1)
            saved = flat[i]
            flat[i] = saved + h
            up = loss_value(model, x, t, u)
            flat[i] = saved - h
            down = loss_value(model, x, t, u)
            flat[i] = saved
            fd = (up - down) / (2.0 * h)
            an = p.grad.reshape(-1)[i]
            err = abs(fd - an) / max(abs(fd), abs(an), atol / rtol)
            worst = max(worst, err)
    for p in model.parameters():
        p.zero_grad()
    return worst
