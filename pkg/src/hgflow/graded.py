"""Graded vector spaces, Koszul signs, and multi-bracket law checking.

Degrees are plain integers. The machinery is written for arbitrary finite
degree sets; the shipped algebras only populate degrees {0, 1}.

Sign conventions. ``koszul_sign`` supports two conventions for the sign
picked up by an adjacent transposition of homogeneous elements x, y:

- ``"wedge"`` (default): -(-1)^(|x||y|), the graded skew-symmetric rule
  induced by the wedge product.
- ``"shifted"``: (-1)^((|x|+1)(|y|+1)), the symmetric-rule sign evaluated
  on degree-shifted elements. Kept so the checkers can interrogate a
  bracket table under the alternative convention.

``check_jacobi`` evaluates the homotopy Jacobi identity

    sum_{m+n=k+1} sum_{(m, k-m) unshuffles s} Xi(s) * (-1)^(m(n-1))
        b_n(b_m(l_{s(1)}, ..., l_{s(m)}), l_{s(m+1)}, ..., l_{s(k)}) = 0

with Xi from ``koszul_sign``; ``mn_prefactor=False`` drops the
(-1)^(m(n-1)) factor (the shifted-convention form of the identity).
"""

from dataclasses import dataclass, field
from itertools import combinations
import json

import numpy as np

CONVENTIONS = ("wedge", "shifted")


def _transposition_sign(da, db, convention):
    if convention == "wedge":
        return -((-1) ** (da * db))
    if convention == "shifted":
        return (-1) ** ((da + 1) * (db + 1))
    raise ValueError(f"unknown sign convention {convention!r}")


def koszul_sign(permutation, degrees, convention="wedge"):
    """Sign Xi(s) with which b(l_1..l_k) = Xi(s) * b(l_{s(1)}..l_{s(k)}).

    ``permutation[p]`` is the source index of the element at position p in
    the permuted word. Computed by bubble-sorting the permuted word back
    to the identity, accumulating one transposition sign per adjacent
    swap.
    """
    k = len(permutation)
    if len(degrees) != k:
        raise ValueError("permutation and degrees must have equal length")
    word = list(permutation)
    if sorted(word) != list(range(k)):
        raise ValueError(f"not a permutation of 0..{k - 1}: {permutation}")
    sign = 1
    for top in range(k - 1, 0, -1):
        for p in range(top):
            if word[p] > word[p + 1]:
                sign *= _transposition_sign(
                    degrees[word[p]], degrees[word[p + 1]], convention
                )
                word[p], word[p + 1] = word[p + 1], word[p]
    return sign


@dataclass
class GradedVector:
    """Element of a graded vector space, stored per degree.

    ``dims`` declares the dimension of every populated degree;
    ``components`` holds a float64 coordinate array per degree, always of
    the declared length.
    """

    dims: dict
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for deg, coords in self.components.items():
            arr = np.asarray(coords, dtype=np.float64)
            if deg not in self.dims:
                raise ValueError(f"degree {deg} not in dims {self.dims}")
            if arr.shape != (self.dims[deg],):
                raise ValueError(
                    f"degree {deg}: got {arr.shape}, dims say ({self.dims[deg]},)"
                )
            clean[deg] = arr
        self.components = clean

    @classmethod
    def zero(cls, dims):
        return cls(dims=dict(dims))

    @classmethod
    def basis(cls, dims, degree, index):
        coords = np.zeros(dims[degree])
        coords[index] = 1.0
        return cls(dims=dict(dims), components={degree: coords})

    def coords(self, degree):
        if degree in self.components:
            return self.components[degree]
        return np.zeros(self.dims[degree])

    def degrees(self):
        """Degrees carrying a nonzero component."""
        return sorted(d for d, c in self.components.items() if np.any(c))

    def is_homogeneous(self):
        return len(self.degrees()) <= 1

    def degree(self):
        """Degree of a homogeneous vector (None for the zero vector)."""
        degs = self.degrees()
        if len(degs) > 1:
            raise ValueError("vector is not homogeneous")
        return degs[0] if degs else None

    def norm_inf(self):
        if not self.components:
            return 0.0
        return max(float(np.max(np.abs(c))) for c in self.components.values())

    def _check_compatible(self, other):
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")

    def __add__(self, other):
        self._check_compatible(other)
        out = {}
        for deg in set(self.components) | set(other.components):
            out[deg] = self.coords(deg) + other.coords(deg)
        return GradedVector(dims=dict(self.dims), components=out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        out = {d: float(scalar) * c for d, c in self.components.items()}
        return GradedVector(dims=dict(self.dims), components=out)

    def allclose(self, other, tol=1e-12):
        return (self - other).norm_inf() <= tol


def braid_swap(v, w):
    """Braiding on homogeneous elements: (v, w) -> (w, v, (-1)^(|v||w|)).

    Zero vectors braid with sign +1 (their degree is taken as 0).
    """
    for name, vec in (("v", v), ("w", w)):
        if not vec.is_homogeneous():
            raise ValueError(f"{name} is not homogeneous")
    dv = v.degree() or 0
    dw = w.degree() or 0
    return w, v, (-1) ** (dv * dw)


@dataclass
class BracketTable:
    """Dense structure constants for one bracket arity.

    ``blocks`` maps an input degree tuple (d_1..d_m) to an array of shape
    (dims[d_1], ..., dims[d_m], dims[out]) where out = sum(d_i) + m - 2.
    Degree tuples without a populated output degree are omitted: the
    grading itself forces those sectors to vanish.
    """

    arity: int
    blocks: dict

    def output_degree(self, in_degrees):
        return sum(in_degrees) + self.arity - 2


@dataclass
class LInfinityAlgebra:
    """Graded space with bracket tables of arities 1..m_max."""

    dims: dict
    brackets: list
    label: str = ""

    @property
    def max_arity(self):
        return len(self.brackets)

    def bracket(self, m):
        if not 1 <= m <= self.max_arity:
            raise ValueError(f"arity {m} out of range 1..{self.max_arity}")
        table = self.brackets[m - 1]
        if table.arity != m:
            raise ValueError(f"bracket table at slot {m} has arity {table.arity}")
        return table

    def total_dim(self):
        return sum(self.dims.values())

    def zero(self):
        return GradedVector.zero(self.dims)

    def basis(self, degree, index):
        return GradedVector.basis(self.dims, degree, index)


def eval_bracket(alg, m, args):
    """Multilinear bracket evaluation b_m(args) over structure tables.

    Each argument is expanded over its homogeneous parts; every populated
    degree sector contributes a full tensor contraction.
    """
    if len(args) != m:
        raise ValueError(f"expected {m} arguments, got {len(args)}")
    table = alg.bracket(m)
    for a in args:
        if a.dims != alg.dims:
            raise ValueError("argument dims do not match the algebra")
    out = alg.zero()
    for degs, block in table.blocks.items():
        coords = []
        for deg, arg in zip(degs, args):
            c = arg.components.get(deg)
            if c is None or not np.any(c):
                break
            coords.append(c)
        else:
            res = block
            for c in coords:
                res = np.tensordot(c, res, axes=(0, 0))
            out_deg = table.output_degree(degs)
            out = out + GradedVector(dims=dict(alg.dims), components={out_deg: res})
    return out


@dataclass
class CheckReport:
    """Outcome of a randomized law check."""

    name: str
    passed: bool
    max_residual: float
    trials: int
    tol: float
    detail: str = ""

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"{self.name}: {verdict} (max residual {self.max_residual:.3e}, "
            f"tol {self.tol:.1e}, {self.trials} trials){self.detail}"
        )


def _random_homogeneous(alg, rng):
    deg = int(rng.choice(sorted(alg.dims)))
    coords = rng.standard_normal(alg.dims[deg])
    return GradedVector(dims=dict(alg.dims), components={deg: coords})


def check_skew(alg, m, trials, tol, seed=0, convention="wedge"):
    """Graded skew-symmetry of b_m under random permutations.

    Verifies b_m(l) = Xi(s) * b_m(l_{s(1)}, ..., l_{s(m)}) on random
    homogeneous tuples; reports the worst max-norm residual.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        args = [_random_homogeneous(alg, rng) for _ in range(m)]
        degrees = [a.degree() or 0 for a in args]
        perm = list(rng.permutation(m))
        lhs = eval_bracket(alg, m, args)
        rhs = eval_bracket(alg, m, [args[p] for p in perm])
        sign = koszul_sign(perm, degrees, convention)
        worst = max(worst, (lhs - float(sign) * rhs).norm_inf())
    return CheckReport(
        name=f"skew[m={m}, {alg.label}]",
        passed=worst <= tol,
        max_residual=worst,
        trials=trials,
        tol=tol,
    )


def unshuffles(k, m):
    """All (m, k-m) unshuffles of 0..k-1 as full index words."""
    out = []
    for head in combinations(range(k), m):
        tail = [i for i in range(k) if i not in head]
        out.append(list(head) + tail)
    return out


def jacobi_defect(alg, args, convention="wedge", mn_prefactor=True):
    """Signed homotopy-Jacobi sum for one tuple of homogeneous elements."""
    k = len(args)
    degrees = [a.degree() or 0 for a in args]
    total = alg.zero()
    for m in range(1, min(k, alg.max_arity) + 1):
        n = k - m + 1
        if n > alg.max_arity:
            continue
        pref = (-1) ** (m * (n - 1)) if mn_prefactor else 1
        for word in unshuffles(k, m):
            sign = pref * koszul_sign(word, degrees, convention)
            inner = eval_bracket(alg, m, [args[i] for i in word[:m]])
            outer = eval_bracket(alg, n, [inner] + [args[i] for i in word[m:]])
            total = total + float(sign) * outer
    return total


def check_jacobi(alg, k, trials, tol, seed=0, convention="wedge", mn_prefactor=True):
    """Homotopy Jacobi identity at word length k on random tuples."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        args = [_random_homogeneous(alg, rng) for _ in range(k)]
        worst = max(worst, jacobi_defect(alg, args, convention, mn_prefactor).norm_inf())
    return CheckReport(
        name=f"jacobi[k={k}, {alg.label}]",
        passed=worst <= tol,
        max_residual=worst,
        trials=trials,
        tol=tol,
    )


ALGEBRA_FORMAT_VERSION = 1


def algebra_to_json(alg):
    """Serialize to a versioned document with sparse nonzero entries."""
    brackets = []
    for table in alg.brackets:
        blocks = []
        for degs, block in sorted(table.blocks.items()):
            nz = np.argwhere(block != 0.0)
            entries = [[*map(int, idx), float(block[tuple(idx)])] for idx in nz]
            blocks.append({"degrees": list(degs), "entries": entries})
        brackets.append({"arity": table.arity, "blocks": blocks})
    return {
        "format": "hgflow-algebra",
        "version": ALGEBRA_FORMAT_VERSION,
        "label": alg.label,
        "dims": {str(d): int(n) for d, n in sorted(alg.dims.items())},
        "brackets": brackets,
    }


def algebra_from_json(doc):
    if doc.get("format") != "hgflow-algebra":
        raise ValueError("not an hgflow algebra document")
    if doc.get("version") != ALGEBRA_FORMAT_VERSION:
        raise ValueError(f"unsupported algebra format version {doc.get('version')}")
    dims = {int(d): int(n) for d, n in doc["dims"].items()}
    brackets = []
    for tdoc in doc["brackets"]:
        arity = int(tdoc["arity"])
        table = BracketTable(arity=arity, blocks={})
        for bdoc in tdoc["blocks"]:
            degs = tuple(int(d) for d in bdoc["degrees"])
            out_deg = sum(degs) + arity - 2
            shape = tuple(dims[d] for d in degs) + (dims[out_deg],)
            block = np.zeros(shape)
            for entry in bdoc["entries"]:
                *idx, value = entry
                block[tuple(int(i) for i in idx)] = float(value)
            table.blocks[degs] = block
        brackets.append(table)
    return LInfinityAlgebra(dims=dims, brackets=brackets, label=doc.get("label", ""))


def save_algebra(alg, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(algebra_to_json(alg), fh, indent=1, sort_keys=True)


def load_algebra(path):
    with open(path, encoding="utf-8") as fh:
        return algebra_from_json(json.load(fh))
