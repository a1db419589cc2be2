"""Vector-field assembly for the three model variants.

The full field is

    v(x, t) = base_field(x, t)
              - alpha(t) * project(x, t, gauge_action(A(x, t) . d, vhat(x, t)))

where d is the direction vector (the base field's own output unless an
independent direction net was requested), A(x, t) is reshaped to an
(N, algebra_dim) coefficient array, and the projection acts through the
fundamental representation: degree-0 and degree-1 so(N) blocks act on x
as antisymmetric matrices, the central coordinate acts by scaling, and
each degree's contribution is gated elementwise by its projection net.

Two call surfaces: single-sample reference functions built on
``eval_bracket`` (the law-checked tables), and batched tape versions used
by training and sampling. A parity test keeps them identical.
"""

from dataclasses import dataclass

import numpy as np

from .graded import GradedVector, eval_bracket
from .models import flatten_graded, flatten_offsets, unflatten_graded
from .nn import Tape, mlp_forward


@dataclass
class FlowState:
    """A point of the flow: position in R^N and time in [0, 1]."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if not np.all(np.isfinite(self.x)):
            raise ValueError("non-finite flow position")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"time {self.t} outside [0, 1]")


@dataclass
class GaugeCoefficients:
    """Gauge coefficients a[mu, a]: direction index by algebra basis index."""

    a: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.a.ndim != 2:
            raise ValueError("gauge coefficients must be a 2-d array")


def contract_direction(coeffs, d_vec):
    """out[a] = sum_mu coeffs[mu, a] * d_vec[mu]."""
    d_vec = np.asarray(d_vec, dtype=np.float64)
    if d_vec.shape != (coeffs.a.shape[0],):
        raise ValueError(
            f"direction shape {d_vec.shape} does not match {coeffs.a.shape[0]} rows"
        )
    return coeffs.a.T @ d_vec


def gauge_action(alg, contracted, v_hat, v_hat2=None):
    """sum_a contracted[a] * sum_m b_m(e_a, vhat, ..., vhat) via the tables.

    ``v_hat2``, when given, replaces the second repeated slot of the
    ternary bracket (the two-field generalization).
    """
    offsets, total = flatten_offsets(alg.dims)
    contracted = np.asarray(contracted, dtype=np.float64)
    if contracted.shape != (total,):
        raise ValueError(f"expected {total} contracted coefficients")
    if v_hat.dims != alg.dims:
        raise ValueError("graded field dims do not match the algebra")
    out = alg.zero()
    for deg, off in offsets.items():
        for idx in range(alg.dims[deg]):
            coeff = float(contracted[off + idx])
            if coeff == 0.0:
                continue
            e_a = alg.basis(deg, idx)
            for m in range(1, alg.max_arity + 1):
                rest = [v_hat] * (m - 1)
                if m == 3 and v_hat2 is not None:
                    rest = [v_hat, v_hat2]
                out = out + coeff * eval_bracket(alg, m, [e_a] + rest)
    return out


def _stack_time(x, t):
    """(x, t) input rows; x is (B, N), t broadcastable to (B, 1)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    t_col = np.empty((x.shape[0], 1))
    t_col[:] = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    return np.ascontiguousarray(np.concatenate([x, t_col], axis=1)), t_col


def project_to_tangent(model, state, w):
    """Gated fundamental-representation projection of a graded vector.

    g0(x,t) * (mat(w0) x) + g1(x,t) * (mat(w1_so) x + w1_c * x), with the
    g's the projection nets' outputs and mat(.) the antisymmetric-matrix
    realization.
    """
    if w.dims != model.algebra.dims:
        raise ValueError("graded vector dims do not match the model's algebra")
    inp, _ = _stack_time(state.x[None, :], state.t)
    act = model.so_action
    d = act.shape[0]
    g0 = model.proj_net_deg0(inp)[0]
    m0 = np.einsum("aij,a,j->i", act, w.coords(0), state.x)
    out = g0 * m0
    if model.variant == "hgfm":
        w1 = w.coords(1)
        g1 = model.proj_net_deg1(inp)[0]
        m1 = np.einsum("aij,a,j->i", act, w1[:d], state.x) + w1[d] * state.x
        out = out + g1 * m1
    return out


def _direction_net(model):
    return model.nets.get("direction_net")


def hgfm_field(model, state):
    """Single-sample reference evaluation of the full field."""
    inp, t_col = _stack_time(state.x[None, :], state.t)
    v_theta = model.base_field_net(inp)[0]
    alpha = float(model.alpha_net(t_col)[0, 0])
    total = model.gauge_ops.total_dim
    coeffs = GaugeCoefficients(model.gauge_net(inp)[0].reshape(model.n, total))
    d_net = _direction_net(model)
    d_vec = d_net(inp)[0] if d_net is not None else v_theta
    contracted = contract_direction(coeffs, d_vec)
    v0 = model.graded_field_net_deg0(inp)[0]
    v1 = model.graded_field_net_deg1(inp)[0]
    v_hat = GradedVector(dict(model.algebra.dims), {0: v0, 1: v1})
    v_hat2 = None
    if model.two_field:
        v_hat2 = GradedVector(
            dict(model.algebra.dims),
            {
                0: model.graded_field2_net_deg0(inp)[0],
                1: model.graded_field2_net_deg1(inp)[0],
            },
        )
    w = gauge_action(model.algebra, contracted, v_hat, v_hat2)
    return v_theta - alpha * project_to_tangent(model, state, w)


def baseline_field(model, state):
    """Single-sample reference evaluation for the plain and gauge variants."""
    inp, t_col = _stack_time(state.x[None, :], state.t)
    if model.variant == "plain":
        return model.field_net(inp)[0]
    v_theta = model.base_field_net(inp)[0]
    alpha = float(model.alpha_net(t_col)[0, 0])
    total = model.gauge_ops.total_dim
    coeffs = GaugeCoefficients(model.gauge_net(inp)[0].reshape(model.n, total))
    d_net = _direction_net(model)
    d_vec = d_net(inp)[0] if d_net is not None else v_theta
    contracted = contract_direction(coeffs, d_vec)
    v0 = model.graded_field_net_deg0(inp)[0]
    w = gauge_action(model.algebra, contracted, GradedVector(dict(model.algebra.dims), {0: v0}))
    return v_theta - alpha * project_to_tangent(model, state, w)


# ---- batched tape versions (training / sampling path) --------------------


def _so_matvec(tape, act, w_node, x):
    """Batched mat(w) @ x: out[n, i] = sum_{a, j} act[a, i, j] w[n, a] x[n, j].

    x carries no gradient, so this is the bilinear op with the position
    folded into a per-sample constant factor.
    """
    table = np.transpose(act, (0, 2, 1))  # [a, j, i] for the bilinear layout
    x_node_free = np.asarray(x, dtype=np.float64)
    return tape.bilinear(table, w_node, x_node_free)


def _gauge_term(tape, model, inp, t_col, x, v_theta):
    """alpha(t) * projection(gauge action), shared by hgfm and gauge variants."""
    ops = model.gauge_ops
    total = ops.total_dim
    d = model.so_action.shape[0]
    batch = inp.shape[0]

    alpha = mlp_forward(tape, model.alpha_net, t_col)
    a_flat = mlp_forward(tape, model.gauge_net, inp)
    a_resh = tape.reshape(a_flat, (batch, model.n, total))
    d_net = _direction_net(model)
    d_vec = mlp_forward(tape, d_net, inp) if d_net is not None else v_theta
    contracted = tape.bmatvec(a_resh, d_vec)

    v0 = mlp_forward(tape, model.graded_field_net_deg0, inp)
    if model.variant == "hgfm":
        v1 = mlp_forward(tape, model.graded_field_net_deg1, inp)
        v_hat = tape.concat([v0, v1])
    else:
        v_hat = v0

    w = tape.add(
        tape.matmul_const(contracted, ops.unary),
        tape.bilinear(ops.binary, contracted, v_hat),
    )
    if ops.ternary is not None and model.two_field:
        # With a repeated graded field the ternary term and its gradient
        # vanish identically (the bracket is antisymmetric in the repeated
        # slots), so it is only evaluated in two-field mode; the parity
        # test against the literal single-sample composition pins this.
        v2 = tape.concat(
            [
                mlp_forward(tape, model.graded_field2_net_deg0, inp),
                mlp_forward(tape, model.graded_field2_net_deg1, inp),
            ]
        )
        w = tape.add(w, tape.trilinear(ops.ternary, contracted, v_hat, v2))

    g0 = mlp_forward(tape, model.proj_net_deg0, inp)
    w0 = tape.slice_cols(w, 0, d)
    proj = tape.mul(g0, _so_matvec(tape, model.so_action, w0, x))
    if model.variant == "hgfm":
        g1 = mlp_forward(tape, model.proj_net_deg1, inp)
        w1_so = tape.slice_cols(w, d, 2 * d)
        w1_c = tape.slice_cols(w, 2 * d, 2 * d + 1)
        m1 = tape.add(
            _so_matvec(tape, model.so_action, w1_so, x),
            tape.mul(w1_c, np.asarray(x, dtype=np.float64)),
        )
        proj = tape.add(proj, tape.mul(g1, m1))
    return tape.mul(alpha, proj)


def field_batched(tape, model, x, t):
    """Record the model's field on the tape; returns a (B, N) node."""
    inp, t_col = _stack_time(x, t)
    if model.variant == "plain":
        return mlp_forward(tape, model.field_net, inp)
    v_theta = mlp_forward(tape, model.base_field_net, inp)
    gauge = _gauge_term(tape, model, inp, t_col, x, v_theta)
    return tape.sub(v_theta, gauge)


def field_fn(model):
    """Plain (x, t) -> velocity callable for integrators and quick evals."""

    def fn(x, t):
        tape = Tape()
        return field_batched(tape, model, x, t).value

    return fn
