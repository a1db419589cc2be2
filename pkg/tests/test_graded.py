import itertools

import numpy as np
import pytest

from hgflow.graded import (
    BracketTable,
    GradedVector,
    LInfinityAlgebra,
    algebra_from_json,
    algebra_to_json,
    braid_swap,
    check_jacobi,
    check_skew,
    eval_bracket,
    jacobi_defect,
    koszul_sign,
    unshuffles,
)
from hgflow.son import SoNBasis, build_two_term, so3_cyclic_generators

from helpers import commutator, koszul_pair_oracle


class TestKoszulSign:
    def test_identity_is_plus_one(self):
        for k in range(1, 6):
            degrees = [i % 2 for i in range(k)]
            assert koszul_sign(list(range(k)), degrees) == 1

    def test_even_swap_is_minus_one(self):
        assert koszul_sign([1, 0], [0, 0]) == -1

    def test_odd_swap_is_plus_one(self):
        # -(-1)^(1*1): cross-checked by the wedge pair oracle
        assert koszul_pair_oracle([1, 0], [1, 1]) == 1
        assert koszul_sign([1, 0], [1, 1]) == 1

    def test_matches_pair_oracle_on_random_permutations(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            k = int(rng.integers(2, 7))
            word = list(rng.permutation(k))
            degrees = [int(d) for d in rng.integers(0, 2, size=k)]
            for convention in ("wedge", "shifted"):
                assert koszul_sign(word, degrees, convention) == koszul_pair_oracle(
                    word, degrees, convention
                )

    def test_group_homomorphism(self):
        # Xi(sigma after tau) = Xi(sigma on tau-permuted degrees) * Xi(tau)
        rng = np.random.default_rng(5)
        for _ in range(200):
            k = int(rng.integers(2, 6))
            tau = list(rng.permutation(k))
            sigma = list(rng.permutation(k))
            degrees = [int(d) for d in rng.integers(0, 2, size=k)]
            composed = [tau[s] for s in sigma]
            lhs = koszul_sign(composed, degrees)
            rhs = koszul_sign(sigma, [degrees[t] for t in tau]) * koszul_sign(
                tau, degrees
            )
            assert lhs == rhs

    def test_independent_of_transposition_decomposition(self):
        # walk a random sequence of adjacent swaps; the accumulated sign
        # must equal the sign computed for the final word
        rng = np.random.default_rng(11)
        for _ in range(100):
            k = int(rng.integers(2, 6))
            degrees = [int(d) for d in rng.integers(0, 2, size=k)]
            word = list(range(k))
            sign = 1
            for _ in range(int(rng.integers(1, 12))):
                p = int(rng.integers(k - 1))
                da, db = degrees[word[p]], degrees[word[p + 1]]
                sign *= -((-1) ** (da * db))
                word[p], word[p + 1] = word[p + 1], word[p]
            assert koszul_sign(word, degrees) == sign

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            koszul_sign([0, 0], [0, 0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            koszul_sign([0, 1], [0])


class TestBraiding:
    def setup_method(self):
        self.dims = {0: 2, 1: 3}

    def vec(self, degree):
        return GradedVector.basis(self.dims, degree, 0)

    def test_even_odd_sign(self):
        _, _, sign = braid_swap(self.vec(0), self.vec(1))
        assert sign == 1

    def test_odd_odd_sign(self):
        # f(|v|, |w|) = |v| * |w| -> (-1)^1
        _, _, sign = braid_swap(self.vec(1), self.vec(1))
        assert sign == -1

    def test_even_even_sign(self):
        w, v, sign = braid_swap(self.vec(0), self.vec(0))
        assert sign == 1

    def test_swaps_operands(self):
        a, b = self.vec(0), self.vec(1)
        first, second, _ = braid_swap(a, b)
        assert first is b and second is a

    def test_rejects_mixed_vector(self):
        mixed = GradedVector(
            self.dims, {0: np.array([1.0, 0.0]), 1: np.array([1.0, 0.0, 0.0])}
        )
        with pytest.raises(ValueError):
            braid_swap(mixed, self.vec(0))


class TestGradedVector:
    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            GradedVector({0: 2}, {0: np.array([1.0, 2.0, 3.0])})

    def test_add_requires_same_dims(self):
        a = GradedVector.basis({0: 2}, 0, 0)
        b = GradedVector.basis({0: 3}, 0, 0)
        with pytest.raises(ValueError):
            a + b

    def test_homogeneous_detection(self):
        dims = {0: 2, 1: 2}
        zero = GradedVector.zero(dims)
        assert zero.is_homogeneous() and zero.degree() is None
        mixed = GradedVector(dims, {0: np.ones(2), 1: np.ones(2)})
        assert not mixed.is_homogeneous()


def _so3_two_term():
    return build_two_term(3)


class TestEvalBracket:
    def test_zero_argument_gives_zero(self):
        alg = _so3_two_term()
        out = eval_bracket(alg, 2, [alg.zero(), alg.basis(0, 1)])
        assert out.norm_inf() == 0.0

    def test_so3_cyclic_commutator(self):
        # [g1, g2] = g3 for the conventional generators; oracle is the
        # explicit 3x3 matrix commutator
        alg = _so3_two_term()
        basis = SoNBasis(3)
        gens = so3_cyclic_generators()
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            args = [
                GradedVector(alg.dims, {0: gens[i]}),
                GradedVector(alg.dims, {0: gens[j]}),
            ]
            out = eval_bracket(alg, 2, args)
            oracle = basis.to_coords(
                commutator(basis.to_matrix(gens[i]), basis.to_matrix(gens[j]))
            )
            assert np.allclose(out.coords(0), gens[k], atol=1e-14)
            assert np.allclose(out.coords(0), oracle, atol=1e-14)

    def test_repeated_argument_vanishes(self):
        alg = _so3_two_term()
        rng = np.random.default_rng(0)
        x = GradedVector(alg.dims, {0: rng.standard_normal(3)})
        assert eval_bracket(alg, 2, [x, x]).norm_inf() < 1e-15

    def test_multilinearity_in_every_slot(self):
        alg = _so3_two_term()
        rng = np.random.default_rng(1)
        for m in (2, 3):
            for _ in range(15):
                slot = int(rng.integers(m))
                deg = int(rng.integers(0, 2))

                def mixed():
                    return GradedVector(
                        alg.dims,
                        {0: rng.standard_normal(3), 1: rng.standard_normal(4)},
                    )

                fixed = [mixed() for _ in range(m)]
                x = GradedVector(alg.dims, {deg: rng.standard_normal(alg.dims[deg])})
                y = GradedVector(alg.dims, {deg: rng.standard_normal(alg.dims[deg])})
                a, b = rng.standard_normal(2)

                def at(v):
                    args = list(fixed)
                    args[slot] = v
                    return eval_bracket(alg, m, args)

                lhs = at(a * x + b * y)
                rhs = a * at(x) + b * at(y)
                assert (lhs - rhs).norm_inf() < 1e-12

    def test_output_degree_law(self):
        alg = _so3_two_term()
        rng = np.random.default_rng(2)
        for m in (1, 2, 3):
            for _ in range(20):
                degs = [int(d) for d in rng.integers(0, 2, size=m)]
                args = [
                    GradedVector(alg.dims, {d: rng.standard_normal(alg.dims[d])})
                    for d in degs
                ]
                out = eval_bracket(alg, m, args)
                expected = sum(degs) + m - 2
                if expected in alg.dims and out.norm_inf() > 0:
                    assert out.degree() == expected
                else:
                    assert out.norm_inf() == 0.0

    def test_arity_out_of_range(self):
        alg = _so3_two_term()
        with pytest.raises(ValueError):
            eval_bracket(alg, 4, [alg.zero()] * 4)

    def test_wrong_argument_count(self):
        alg = _so3_two_term()
        with pytest.raises(ValueError):
            eval_bracket(alg, 2, [alg.zero()])


class TestCheckSkew:
    def test_so_n_passes(self):
        for n in (3, 4):
            alg = build_two_term(n)
            for m in range(1, alg.max_arity + 1):
                report = check_skew(alg, m, trials=100, tol=1e-12, seed=9)
                assert report.passed, str(report)

    def test_unary_passes_vacuously(self):
        alg = build_two_term(3)
        report = check_skew(alg, 1, trials=10, tol=0.0, seed=0)
        assert report.passed and report.max_residual == 0.0

    def test_deliberate_corruption_fails(self):
        alg = build_two_term(3)
        block = alg.brackets[1].blocks[(0, 0)].copy()
        block[1, 0] = block[0, 1]  # b2(e2, e1) = +b2(e1, e2)
        alg.brackets[1].blocks[(0, 0)] = block
        report = check_skew(alg, 2, trials=200, tol=1e-12, seed=1)
        assert not report.passed


class TestCheckJacobi:
    def test_k1_exact_zero(self):
        # b1 maps degree 1 to degree 0 and vanishes there: b1(b1(.)) = 0
        report = check_jacobi(build_two_term(3), 1, trials=50, tol=0.0, seed=0)
        assert report.passed and report.max_residual == 0.0

    def test_k3_degree_zero_reduces_to_classical_jacobi(self):
        for n in (4, 5):
            alg = build_two_term(n)
            rng = np.random.default_rng(7)
            worst = 0.0
            for _ in range(50):
                args = [
                    GradedVector(alg.dims, {0: rng.standard_normal(alg.dims[0])})
                    for _ in range(3)
                ]
                worst = max(worst, jacobi_defect(alg, args).norm_inf())
            assert worst < 1e-12

    def test_corrupted_table_fails(self):
        alg = build_two_term(4)
        block = alg.brackets[1].blocks[(0, 0)].copy()
        block[0, 1] *= 2.0
        alg.brackets[1].blocks[(0, 0)] = block
        report = check_jacobi(alg, 3, trials=200, tol=1e-10, seed=3)
        assert not report.passed

    def test_unshuffle_enumeration(self):
        words = unshuffles(4, 2)
        assert len(words) == 6
        for word in words:
            assert sorted(word) == [0, 1, 2, 3]
            assert word[0] < word[1] and word[2] < word[3]


class TestSerialization:
    def test_round_trip_exact(self):
        alg = build_two_term(3)
        doc = algebra_to_json(alg)
        back = algebra_from_json(doc)
        assert back.dims == alg.dims
        assert back.label == alg.label
        for t1, t2 in zip(alg.brackets, back.brackets):
            assert t1.arity == t2.arity
            assert set(t1.blocks) == set(t2.blocks)
            for degs in t1.blocks:
                assert np.array_equal(t1.blocks[degs], t2.blocks[degs])

    def test_rejects_wrong_format(self):
        with pytest.raises(ValueError):
            algebra_from_json({"format": "something-else"})

    def test_golden_file_matches_build(self):
        import json
        import os

        path = os.path.join(os.path.dirname(__file__), "data", "two_term_so3.json")
        with open(path, encoding="utf-8") as fh:
            golden = json.load(fh)
        assert algebra_to_json(build_two_term(3)) == golden
        back = algebra_from_json(golden)
        fresh = build_two_term(3)
        for t1, t2 in zip(back.brackets, fresh.brackets):
            for degs in t1.blocks:
                assert np.array_equal(t1.blocks[degs], t2.blocks[degs])
