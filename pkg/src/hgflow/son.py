"""The concrete two-term algebra on so(N).

Degree 0 carries so(N); degree 1 carries a second copy of so(N) plus one
central scalar coordinate, stored last. Brackets:

- b1: identity from the degree-1 so(N) block onto degree 0; zero on the
  central coordinate (it has no degree-0 target).
- b2 on (0,0): the so(N) commutator. On (0,1): the adjoint action on the
  so(N) block, zero into and out of the central line; (1,0) is filled by
  graded skew-symmetry. (1,1) vanishes on degree grounds.
- b3, only at N=3: (x, y, z) -> killing(x, [y, z]) * c into the central
  line. Absent entirely for N > 3.

Basis indexing of so(N) is lexicographic over pairs (i, j) with i < j;
``so3_cyclic_generators`` provides the conventional so(3) triple
satisfying [g1, g2] = g3 cyclically for tests written in that basis.
"""

from dataclasses import dataclass, field

import numpy as np

from .graded import BracketTable, LInfinityAlgebra, koszul_sign


@dataclass
class SoNBasis:
    """Lexicographic basis of antisymmetric N x N matrices."""

    n: int
    dim: int = field(init=False)
    pairs: list = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("so(N) basis needs N >= 2")
        self.pairs = [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]
        self.dim = len(self.pairs)  # N(N-1)/2

    def matrix(self, a):
        """Basis element E_a: +1 at (i, j), -1 at (j, i)."""
        i, j = self.pairs[a]
        mat = np.zeros((self.n, self.n))
        mat[i, j] = 1.0
        mat[j, i] = -1.0
        return mat

    def to_matrix(self, coords):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got {coords.shape}")
        mat = np.zeros((self.n, self.n))
        for a, (i, j) in enumerate(self.pairs):
            mat[i, j] = coords[a]
            mat[j, i] = -coords[a]
        return mat

    def to_coords(self, mat):
        mat = np.asarray(mat, dtype=np.float64)
        return np.array([mat[i, j] for (i, j) in self.pairs])

    def action_tensor(self):
        """T[a, i, j] = (E_a)_{ij}; realizes coords -> matrix as one tensor."""
        t = np.zeros((self.dim, self.n, self.n))
        for a in range(self.dim):
            t[a] = self.matrix(a)
        return t


def lie_bracket_constants(basis):
    """Structure constants f[a, b, c] with [E_a, E_b] = sum_c f[a,b,c] E_c."""
    d = basis.dim
    f = np.zeros((d, d, d))
    mats = [basis.matrix(a) for a in range(d)]
    for a in range(d):
        for b in range(a + 1, d):
            comm = mats[a] @ mats[b] - mats[b] @ mats[a]
            coeffs = basis.to_coords(comm)
            f[a, b] = coeffs
            f[b, a] = -coeffs
    return f


def killing_form(basis, x, y):
    """K(X, Y) = (N - 2) * trace(mat(X) @ mat(Y)); bilinear, symmetric."""
    mx = basis.to_matrix(x)
    my = basis.to_matrix(y)
    return (basis.n - 2) * float(np.trace(mx @ my))


def killing_matrix(basis):
    """Gram matrix K[a, b] = killing_form(E_a, E_b)."""
    d = basis.dim
    k = np.empty((d, d))
    eye = np.eye(d)
    for a in range(d):
        for b in range(d):
            k[a, b] = killing_form(basis, eye[a], eye[b])
    return k


def so3_cyclic_generators():
    """Coordinates of the conventional so(3) triple g_i with (g_i)_{jk} = -eps_{ijk}.

    Satisfies [g1, g2] = g3 cyclically; returned in the lexicographic
    coordinate basis as rows of a (3, 3) array.
    """
    basis = SoNBasis(3)
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[k, j, i] = -1.0
    gens = np.zeros((3, 3))
    for i in range(3):
        gens[i] = basis.to_coords(-eps[i])
    return gens


def build_two_term(n):
    """The two-term algebra on so(N); the ternary table exists only at N=3."""
    if n < 3:
        raise ValueError("two-term algebra needs N >= 3")
    basis = SoNBasis(n)
    d = basis.dim
    dims = {0: d, 1: d + 1}

    # b1: (1,) -> 0, identity on the so(N) block, zero on the central line.
    b1_block = np.zeros((d + 1, d))
    b1_block[:d, :] = np.eye(d)
    b1 = BracketTable(arity=1, blocks={(1,): b1_block})

    f = lie_bracket_constants(basis)

    # b2 (0,0): the commutator. (0,1): adjoint action on the so block; the
    # central line is a trivial representation (no input, no output).
    b2_00 = f
    b2_01 = np.zeros((d, d + 1, d + 1))
    b2_01[:, :d, :d] = f
    swap_sign = koszul_sign([1, 0], [0, 1])  # -1 under the wedge rule
    b2_10 = float(swap_sign) * np.transpose(b2_01, (1, 0, 2))
    b2 = BracketTable(arity=2, blocks={(0, 0): b2_00, (0, 1): b2_01, (1, 0): b2_10})

    brackets = [b1, b2]

    if n == 3:
        # b3 (0,0,0) -> central coordinate: killing(x, [y, z]) * c.
        kg = killing_matrix(basis)
        b3_block = np.zeros((d, d, d, d + 1))
        b3_block[:, :, :, d] = np.einsum("ae,bce->abc", kg, f)
        brackets.append(BracketTable(arity=3, blocks={(0, 0, 0): b3_block}))

    return LInfinityAlgebra(dims=dims, brackets=brackets, label=f"two-term-so({n})")


def build_so_lie(n):
    """Plain so(N) as a one-term algebra in degree 0 (commutator only).

    Degree-0 truncation used by the gauge baseline: no degree-1 block, no
    unary or ternary brackets.
    """
    if n < 3:
        raise ValueError("needs N >= 3")
    basis = SoNBasis(n)
    f = lie_bracket_constants(basis)
    b1 = BracketTable(arity=1, blocks={})
    b2 = BracketTable(arity=2, blocks={(0, 0): f})
    return LInfinityAlgebra(dims={0: basis.dim}, brackets=[b1, b2], label=f"so({n})")
