"""The three model variants and their network layouts.

Network widths follow the dimension rule (hidden 64 for N <= 10, else
32); every network takes (x, t) concatenated except the time-weight net,
which sees t alone. Output sizes:

- gauge_net: N * (2d + 1) coefficients, one per (direction, algebra
  basis element), with d = N(N-1)/2;
- graded field nets: d and d + 1 coordinates (the two degree blocks);
- projection nets: N gating coefficients each;
- base field net: N; time-weight net: scalar.

The gauge baseline is the degree-0 truncation (drop the degree-1 block,
the unary and ternary brackets; keep the commutator); the plain baseline
is a single [N+1, 128, 128, 128, N] MLP.

Bracket tables and the flattened gauge operators are built lazily on
first use: an arity-2 dense table is O(N^6) memory, which parameter
counting across N up to 32 must not allocate.
"""

from dataclasses import dataclass

import numpy as np

from .graded import eval_bracket
from .nn import Mlp, MlpSpec, param_count
from .son import SoNBasis, build_so_lie, build_two_term

VARIANTS = ("plain", "gauge", "hgfm")


def hidden_width(n):
    """Hidden layer width: 32 for N > 10, 64 otherwise."""
    return 32 if n > 10 else 64


def so_dim(n):
    return n * (n - 1) // 2


def network_layouts(variant, n, hidden=None, independent_direction=False,
                    two_field=False):
    """Layer specs per network, keyed by network name (insertion-ordered)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if n < 3:
        raise ValueError("models need N >= 3")
    h = hidden_width(n) if hidden is None else hidden
    d = so_dim(n)
    if variant == "plain":
        return {"field_net": MlpSpec((n + 1, 128, 128, 128, n))}
    layouts = {}
    algebra_dim = 2 * d + 1 if variant == "hgfm" else d
    layouts["gauge_net"] = MlpSpec((n + 1, h, h, n * algebra_dim))
    layouts["base_field_net"] = MlpSpec((n + 1, h, h, n))
    layouts["graded_field_net_deg0"] = MlpSpec((n + 1, h, h, d))
    if variant == "hgfm":
        layouts["graded_field_net_deg1"] = MlpSpec((n + 1, h, h, d + 1))
    layouts["proj_net_deg0"] = MlpSpec((n + 1, h, h, n))
    if variant == "hgfm":
        layouts["proj_net_deg1"] = MlpSpec((n + 1, h, h, n))
    layouts["alpha_net"] = MlpSpec((1, 16, 1))
    if independent_direction:
        layouts["direction_net"] = MlpSpec((n + 1, h, h, n))
    if two_field and variant == "hgfm":
        layouts["graded_field2_net_deg0"] = MlpSpec((n + 1, h, h, d))
        layouts["graded_field2_net_deg1"] = MlpSpec((n + 1, h, h, d + 1))
    return layouts


@dataclass
class GaugeOperators:
    """Bracket tables flattened onto the stacked coordinate layout.

    Coordinates stack degree 0 first, then degree 1; ``unary[a]`` is the
    flattened b1(e_a), ``binary[a, b]`` the flattened b2(e_a, e_b), and
    ``ternary`` (N=3 only) the flattened b3 on basis triples.
    """

    offsets: dict
    total_dim: int
    unary: np.ndarray
    binary: np.ndarray
    ternary: np.ndarray | None = None


def flatten_offsets(dims):
    offsets, pos = {}, 0
    for deg in sorted(dims):
        offsets[deg] = pos
        pos += dims[deg]
    return offsets, pos


def flatten_graded(vec):
    offsets, total = flatten_offsets(vec.dims)
    out = np.zeros(total)
    for deg, off in offsets.items():
        out[off : off + vec.dims[deg]] = vec.coords(deg)
    return out


def unflatten_graded(alg, flat):
    from .graded import GradedVector

    offsets, total = flatten_offsets(alg.dims)
    if len(flat) != total:
        raise ValueError(f"expected {total} coordinates, got {len(flat)}")
    comps = {
        deg: np.array(flat[off : off + alg.dims[deg]])
        for deg, off in offsets.items()
    }
    return GradedVector(dims=dict(alg.dims), components=comps)


def build_gauge_operators(alg):
    """Assemble flattened operators from the algebra's dense blocks."""
    offsets, total = flatten_offsets(alg.dims)

    def place(arity, target):
        table = alg.bracket(arity)
        for degs, block in table.blocks.items():
            out_deg = table.output_degree(degs)
            sl = tuple(
                slice(offsets[deg], offsets[deg] + alg.dims[deg])
                for deg in (*degs, out_deg)
            )
            target[sl] = block

    unary = np.zeros((total, total))
    if alg.max_arity >= 1:
        place(1, unary)
    binary = np.zeros((total, total, total))
    if alg.max_arity >= 2:
        place(2, binary)
    ternary = None
    if alg.max_arity >= 3:
        ternary = np.zeros((total, total, total, total))
        place(3, ternary)
    return GaugeOperators(
        offsets=offsets, total_dim=total, unary=unary, binary=binary,
        ternary=ternary,
    )


class _GaugeModelBase:
    """Shared wiring for the algebra-backed variants."""

    def __init__(self, n, seed, hidden, independent_direction, two_field):
        self.n = n
        self.seed = seed
        self.hidden = hidden
        self.independent_direction = independent_direction
        self.two_field = two_field
        layouts = network_layouts(
            self.variant, n, hidden=hidden,
            independent_direction=independent_direction, two_field=two_field,
        )
        children = np.random.SeedSequence(seed).spawn(len(layouts))
        self.nets = {
            name: Mlp(spec, child, name=name)
            for (name, spec), child in zip(layouts.items(), children)
        }
        self._algebra = None
        self._ops = None
        self._action = None

    def __getattr__(self, name):
        nets = self.__dict__.get("nets", {})
        if name in nets:
            return nets[name]
        raise AttributeError(name)

    @property
    def algebra(self):
        if self._algebra is None:
            self._algebra = self._build_algebra()
        return self._algebra

    @property
    def gauge_ops(self):
        if self._ops is None:
            self._ops = build_gauge_operators(self.algebra)
        return self._ops

    @property
    def so_action(self):
        """Tensor T[a, i, j] = (E_a)_{ij} realizing so(N) coords on R^N."""
        if self._action is None:
            self._action = SoNBasis(self.n).action_tensor()
        return self._action

    def parameters(self):
        out = []
        for net in self.nets.values():
            out.extend(net.params())
        return out


class HgfmModel(_GaugeModelBase):
    variant = "hgfm"

    def _build_algebra(self):
        return build_two_term(self.n)


class GaugeBaseline(_GaugeModelBase):
    variant = "gauge"

    def __init__(self, n, seed, hidden=None, independent_direction=False):
        super().__init__(n, seed, hidden, independent_direction, False)

    def _build_algebra(self):
        return build_so_lie(self.n)


class PlainBaseline:
    variant = "plain"

    def __init__(self, n, seed, hidden=None):
        self.n = n
        self.seed = seed
        self.hidden = hidden
        layouts = network_layouts("plain", n, hidden=hidden)
        (child,) = np.random.SeedSequence(seed).spawn(1)
        self.nets = {"field_net": Mlp(layouts["field_net"], child, name="field_net")}
        self.field_net = self.nets["field_net"]

    def parameters(self):
        return self.field_net.params()


def build_hgfm(n, seed, hidden=None, independent_direction=False, two_field=False):
    if n < 3:
        raise ValueError("build_hgfm needs N >= 3")
    return HgfmModel(n, seed, hidden, independent_direction, two_field)


def build_baseline(variant, n, seed, hidden=None):
    if n < 3:
        raise ValueError("build_baseline needs N >= 3")
    if variant == "plain":
        return PlainBaseline(n, seed, hidden=hidden)
    if variant == "gauge":
        return GaugeBaseline(n, seed, hidden=hidden)
    raise ValueError(f"unknown baseline variant {variant!r}")


def build_model(variant, n, seed, hidden=None, independent_direction=False,
                two_field=False):
    if variant == "hgfm":
        return build_hgfm(n, seed, hidden=hidden,
                          independent_direction=independent_direction,
                          two_field=two_field)
    return build_baseline(variant, n, seed, hidden=hidden)


def count_params(model):
    """Exact total size of all parameter tensors."""
    return sum(p.size for p in model.parameters())


def count_params_closed_form(variant, n, hidden=None, independent_direction=False,
                             two_field=False):
    """Independent count from the layer spec formula sum(d_i*d_{i+1} + d_{i+1})."""
    layouts = network_layouts(variant, n, hidden=hidden,
                              independent_direction=independent_direction,
                              two_field=two_field)
    return sum(param_count(spec) for spec in layouts.values())


def describe(variant, n, hidden=None):
    """Network table (name, layer dims, activation, parameter count) as JSON-ready rows."""
    layouts = network_layouts(variant, n, hidden=hidden)
    return [
        {
            "field": name,
            "layer_dims": list(spec.layer_dims),
            "activation": spec.activation,
            "params": param_count(spec),
        }
        for name, spec in layouts.items()
    ]


def gauge_action_flat(ops, contracted, v_flat, v2_flat=None):
    """Reference flat-coordinate gauge action (single sample).

    sum_a contracted[a] * [b1(e_a) + b2(e_a, v) + b3(e_a, v, v2)] with the
    ternary term present only when the algebra carries one; v2 defaults
    to v (the repeated-field form).
    """
    out = contracted @ ops.unary
    out = out + np.einsum("abk,a,b->k", ops.binary, contracted, v_flat)
    if ops.ternary is not None:
        second = v_flat if v2_flat is None else v2_flat
        out = out + np.einsum(
            "abck,a,b,c->k", ops.ternary, contracted, v_flat, second
        )
    return out


def check_operators_against_tables(model, rng, trials=20, tol=1e-12):
    """Cross-check flattened operators against eval_bracket on random inputs."""
    alg = model.algebra
    ops = model.gauge_ops
    worst = 0.0
    for _ in range(trials):
        c = rng.standard_normal(ops.total_dim)
        v = rng.standard_normal(ops.total_dim)
        flat = gauge_action_flat(ops, c, v)
        vec = unflatten_graded(alg, v)
        acc = alg.zero()
        for a in range(ops.total_dim):
            e_a = unflatten_graded(alg, np.eye(ops.total_dim)[a])
            for m in range(1, alg.max_arity + 1):
                term = eval_bracket(alg, m, [e_a] + [vec] * (m - 1))
                acc = acc + float(c[a]) * term
        worst = max(worst, float(np.max(np.abs(flat - flatten_graded(acc)))))
    return worst <= tol, worst
