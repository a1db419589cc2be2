"""Minimal float64 MLP stack: tape reverse-mode gradients and Adam.

The op set is fixed to what the flow fields need (affine layers, SiLU,
elementwise arithmetic, constant-tensor contractions, batched
matrix-vector products, mean-squared-error); there is no general graph
compiler. Hot kernels (affine, SiLU, Adam) go through
``hgflow._kernels`` and therefore run compiled when the extension is
available.

Every evaluation builds a fresh ``Tape``; reverse iteration over the
tape's creation order is the topological order of the forward pass.
Parameter gradients accumulate directly into ``ParamTensor.grad``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K


@dataclass
class ParamTensor:
    """A learnable array with a persistent gradient buffer."""

    values: np.ndarray
    name: str = ""
    grad: np.ndarray = field(init=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.grad = np.zeros_like(self.values)

    @property
    def size(self):
        return self.values.size

    def zero_grad(self):
        self.grad[...] = 0.0


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths; SiLU after every layer except the last."""

    layer_dims: tuple
    activation: str = "silu"

    def __post_init__(self):
        if len(self.layer_dims) < 2:
            raise ValueError("an MLP needs at least input and output dims")
        if self.activation != "silu":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def in_dim(self):
        return self.layer_dims[0]

    @property
    def out_dim(self):
        return self.layer_dims[-1]


def param_count(spec):
    """Closed-form parameter count: sum of d_i * d_{i+1} + d_{i+1}."""
    dims = spec.layer_dims
    return sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1))


def init_params(spec, seed, name=""):
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for i, (din, dout) in enumerate(zip(spec.layer_dims, spec.layer_dims[1:])):
        bound = np.sqrt(6.0 / (din + dout))
        w = rng.uniform(-bound, bound, size=(din, dout))
        weights.append(ParamTensor(w, name=f"{name}.w{i}"))
        biases.append(ParamTensor(np.zeros(dout), name=f"{name}.b{i}"))
    return weights, biases


class Mlp:
    """An MLP spec bound to its parameter tensors."""

    def __init__(self, spec, seed, name=""):
        self.spec = spec
        self.name = name
        self.weights, self.biases = init_params(spec, seed, name=name)

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def n_params(self):
        return sum(p.size for p in self.params())

    def __call__(self, x):
        """Forward pass without gradient recording; accepts (d,) or (B, d)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = np.ascontiguousarray(np.atleast_2d(x))
        if h.shape[1] != self.spec.in_dim:
            raise ValueError(f"input dim {h.shape[1]} != {self.spec.in_dim}")
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = K.affine_forward(h, w.values, b.values.ravel())
            if i != last:
                h, _ = K.silu_forward(h)
        return h[0] if single else h


class Node:
    """One recorded value in a forward pass."""

    __slots__ = ("value", "grad", "_vjp")

    def __init__(self, value, vjp=None):
        self.value = value
        self.grad = None
        self._vjp = vjp


def _val(x):
    return x.value if isinstance(x, Node) else x


def _acc(node, g):
    if isinstance(node, Node):
        if node.grad is None:
            node.grad = np.array(g, dtype=np.float64)
        else:
            node.grad += g


def _unbroadcast(g, shape):
    """Reduce a gradient back to a broadcast operand's shape."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


class Tape:
    """Records a forward computation; one backward sweep per tape."""

    def __init__(self):
        self._nodes = []
        self._consumed = False

    def _push(self, value, vjp):
        node = Node(value, vjp)
        self._nodes.append(node)
        return node

    # ---- ops ------------------------------------------------------------

    def affine(self, x, w, b):
        """x @ w + b with ParamTensors w, b; x may be a Node or an array."""
        xv = np.ascontiguousarray(_val(x))
        y = K.affine_forward(xv, w.values, b.values.ravel())

        def vjp(g):
            g = np.ascontiguousarray(g)
            gx, gw, gb = K.affine_backward(xv, w.values, g, isinstance(x, Node))
            w.grad += gw
            b.grad += gb
            if gx is not None:
                _acc(x, gx)

        return self._push(y, vjp)

    def silu(self, x):
        z = _val(x)
        y, s = K.silu_forward(z)

        def vjp(g):
            _acc(x, K.silu_backward(z, s, np.ascontiguousarray(g)))

        return self._push(y, vjp)

    def add(self, a, b):
        def vjp(g):
            _acc(a, g)
            _acc(b, g)

        return self._push(_val(a) + _val(b), vjp)

    def sub(self, a, b):
        def vjp(g):
            _acc(a, g)
            _acc(b, -g)

        return self._push(_val(a) - _val(b), vjp)

    def mul(self, a, b):
        """Elementwise product with numpy broadcasting."""
        av, bv = _val(a), _val(b)

        def vjp(g):
            _acc(a, _unbroadcast(g * bv, av.shape))
            _acc(b, _unbroadcast(g * av, bv.shape))

        return self._push(av * bv, vjp)

    def scale(self, x, c):
        c = float(c)

        def vjp(g):
            _acc(x, c * g)

        return self._push(c * _val(x), vjp)

    def matmul_const(self, x, m):
        """x @ m for a constant matrix m."""

        def vjp(g):
            _acc(x, g @ m.T)

        return self._push(_val(x) @ m, vjp)

    def bmatvec(self, a, d):
        """Batched contraction out[n,k] = sum_mu a[n,mu,k] * d[n,mu]."""
        av, dv = _val(a), _val(d)

        def vjp(g):
            _acc(a, dv[:, :, None] * g[:, None, :])
            _acc(d, np.einsum("nmk,nk->nm", av, g))

        return self._push(np.einsum("nmk,nm->nk", av, dv), vjp)

    def bilinear(self, t, u, v):
        """out[n,k] = sum_ab t[a,b,k] u[n,a] v[n,b] for a constant tensor t."""
        uv, vv = _val(u), _val(v)
        da, db, dk = t.shape
        t_flat = t.reshape(da, db * dk)
        mid = (uv @ t_flat).reshape(-1, db, dk)  # mid[n,b,k] = sum_a t*u

        def vjp(g):
            outer = (vv[:, :, None] * g[:, None, :]).reshape(-1, db * dk)
            _acc(u, outer @ t_flat.T)
            _acc(v, (mid * g[:, None, :]).sum(axis=2))

        return self._push((mid * vv[:, :, None]).sum(axis=1), vjp)

    def trilinear(self, t, u, v, w):
        """out[n,k] = sum_abc t[a,b,c,k] u[n,a] v[n,b] w[n,c]."""
        uv, vv, wv = _val(u), _val(v), _val(w)

        def vjp(g):
            _acc(u, np.einsum("abck,nb,nc,nk->na", t, vv, wv, g))
            _acc(v, np.einsum("abck,na,nc,nk->nb", t, uv, wv, g))
            _acc(w, np.einsum("abck,na,nb,nk->nc", t, uv, vv, g))

        return self._push(np.einsum("abck,na,nb,nc->nk", t, uv, vv, wv), vjp)

    def concat(self, parts):
        """Column-wise concatenation of (B, d_i) pieces."""
        vals = [_val(p) for p in parts]
        widths = [v.shape[1] for v in vals]

        def vjp(g):
            lo = 0
            for p, width in zip(parts, widths):
                _acc(p, g[:, lo : lo + width])
                lo += width

        return self._push(np.concatenate(vals, axis=1), vjp)

    def slice_cols(self, x, lo, hi):
        xv = _val(x)

        def vjp(g):
            gx = np.zeros_like(xv)
            gx[:, lo:hi] = g
            _acc(x, gx)

        return self._push(xv[:, lo:hi], vjp)

    def reshape(self, x, shape):
        xv = _val(x)

        def vjp(g):
            _acc(x, g.reshape(xv.shape))

        return self._push(xv.reshape(shape), vjp)

    def mse(self, pred, target):
        """Mean over the batch of the squared Euclidean residual norm."""
        diff = _val(pred) - target
        batch = diff.shape[0]

        def vjp(g):
            _acc(pred, (2.0 * float(g) / batch) * diff)

        return self._push(float(np.mean(np.sum(diff * diff, axis=1))), vjp)

    # ---- reverse sweep ---------------------------------------------------

    def backward(self, node, cotangent=1.0):
        """Accumulate gradients of ``node`` into all touched ParamTensors."""
        if self._consumed:
            raise RuntimeError("tape already consumed by a previous backward")
        self._consumed = True
        if isinstance(node.value, float):
            node.grad = float(cotangent)
        else:
            cot = np.asarray(cotangent, dtype=np.float64)
            if cot.shape != np.shape(node.value):
                raise ValueError(
                    f"cotangent shape {cot.shape} != value shape {np.shape(node.value)}"
                )
            node.grad = cot.copy()
        for n in reversed(self._nodes):
            if n.grad is not None and n._vjp is not None:
                n._vjp(n.grad)


def mlp_forward(tape, mlp, x):
    """Record an MLP forward pass on the tape; x is (B, in_dim)."""
    xv = _val(x)
    if xv.shape[1] != mlp.spec.in_dim:
        raise ValueError(f"input dim {xv.shape[1]} != {mlp.spec.in_dim}")
    h = x
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        h = tape.affine(h, w, b)
        if i != last:
            h = tape.silu(h)
    return h


@dataclass
class AdamState:
    """Adam moments for a fixed parameter list."""

    params: list
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: list = field(init=False)
    second_moment: list = field(init=False)

    def __post_init__(self):
        self.first_moment = [np.zeros(p.size) for p in self.params]
        self.second_moment = [np.zeros(p.size) for p in self.params]


def adam_step(state):
    """One bias-corrected Adam update; zeroes every gradient afterwards."""
    state.step += 1
    for p, m, v in zip(state.params, state.first_moment, state.second_moment):
        K.adam_update(
            p.values.reshape(-1),
            np.ascontiguousarray(p.grad.reshape(-1)),
            m,
            v,
            state.step,
            state.lr,
            state.beta1,
            state.beta2,
            state.eps,
        )
        p.zero_grad()
