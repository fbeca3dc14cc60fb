"""
Directive sequences, telescoping and the finite-scale conditions.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from pytest import approx

from src.speccoc.errors import NumericalFailure, PreconditionError
from src.speccoc.sadic import (
    DirectiveSequence,
    check_A1prime,
    check_A2_ell,
    check_A3,
    check_Ncond,
    expand,
    iter_telescope_matrices,
    lambda_hat,
    lambda_partials,
    measure_vectors,
    positive_block,
    prefix_path,
    reassemble_prefix,
    telescope,
    telescope_matrix,
)
from src.speccoc.substitution_core import (
    FIBONACCI,
    THREE_LETTER,
    THUE_MORSE,
    Substitution,
    perron_frobenius,
    substitution_matrix,
)

GOLDEN = (1 + math.sqrt(5)) / 2


class TestDirectiveSequence:
    def test_periodic_terms_are_one_based(self):
        a = DirectiveSequence.periodic([FIBONACCI, THUE_MORSE])
        assert a.term(1) == FIBONACCI
        assert a.term(2) == THUE_MORSE
        assert a.term(3) == FIBONACCI
        with pytest.raises(PreconditionError):
            a.term(0)

    def test_explicit_exhausted(self):
        a = DirectiveSequence.explicit([FIBONACCI])
        assert a.term(1) == FIBONACCI
        with pytest.raises(PreconditionError):
            a.term(2)

    def test_alphabet_mismatch(self):
        with pytest.raises(PreconditionError):
            DirectiveSequence.periodic([FIBONACCI, THREE_LETTER])

    def test_shift_shares_terms(self):
        a = DirectiveSequence.explicit([FIBONACCI, THUE_MORSE, FIBONACCI])
        b = a.shift(1)
        assert b.term(1) == THUE_MORSE
        assert b.shift(1).term(1) == a.term(3)

    def test_generated_sequence_is_memoized(self):
        calls = []

        def gen():
            while True:
                calls.append(1)
                yield FIBONACCI

        a = DirectiveSequence.generated(2, gen(), kind="test")
        a.term(3)
        a.term(2)
        a.shift(1).term(2)
        assert len(calls) == 3
        assert a.kind == "test"

    @pytest.mark.parametrize("kind", ["periodic", "explicit", "generated"])
    def test_matrices_read_out_of_order(self, kind):
        subs = [FIBONACCI, Substitution(((1, 2), (2, 1, 1)))] * 3
        if kind == "periodic":
            a = DirectiveSequence.periodic(subs[:2])
        elif kind == "explicit":
            a = DirectiveSequence.explicit(subs)
        else:
            a = DirectiveSequence.generated(2, iter(subs))
        late = a.shift(3).matrix(2)
        np.testing.assert_array_equal(late, substitution_matrix(subs[4]))
        for k in range(1, 6):
            S = a.matrix(k)
            assert S is not None
            np.testing.assert_array_equal(S, substitution_matrix(subs[k - 1]))

    def test_explicit_matrix_exhausted(self):
        with pytest.raises(PreconditionError):
            DirectiveSequence.explicit([FIBONACCI]).matrix(2)

    def test_concurrent_matrix_reads(self):
        def gen():
            k = 0
            while True:
                k += 1
                yield FIBONACCI if k % 3 else THUE_MORSE

        a = DirectiveSequence.generated(2, gen())
        expected = [substitution_matrix(FIBONACCI if k % 3 else THUE_MORSE) for k in range(1, 401)]

        def read(start):
            # each worker walks the indices in a different order
            order = list(range(1, 401))
            order = order[start:] + order[:start]
            return all(np.array_equal(a.matrix(k), expected[k - 1]) for k in order)

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(read, range(0, 400, 25)))
        assert all(results)


class TestTelescope:
    def test_fibonacci_depth_three(self, fib):
        t = telescope(fib, 3)
        assert t.zeta_n.images == ((1, 2, 1, 1, 2), (1, 2, 1))
        assert t.S_n.tolist() == [[3, 2], [2, 1]]
        assert telescope_matrix(fib, 3).tolist() == [[3, 2], [2, 1]]

    def test_depth_zero_is_identity(self, fib):
        assert telescope_matrix(fib, 0).tolist() == [[1, 0], [0, 1]]
        assert expand(fib, 0, 2) == (2,)

    def test_matrix_recursion(self):
        a = DirectiveSequence.periodic([FIBONACCI, THUE_MORSE])
        prev = np.identity(2, dtype=np.int64).astype(object)
        for n, P in enumerate(iter_telescope_matrices(a, 12), start=1):
            assert (P == prev.dot(a.matrix(n).astype(object))).all()
            prev = P

    def test_three_letter_expansion_starts_with_images(self, three_letter):
        word = expand(three_letter, 2, 2)
        assert word[:17] == (2, 2, 3, 1) + (2, 2, 3, 1) + (3, 1, 1, 2, 3) + (1, 2, 1, 3, 2, 1)[:4]
        assert len(word) == int(telescope_matrix(three_letter, 2)[:, 1].sum())

    def test_telescope_matches_substitution_matrix(self, three_letter):
        t = telescope(three_letter, 4)
        assert (substitution_matrix(t.zeta_n) == telescope_matrix(three_letter, 4).astype(np.int64)).all()


class TestExponents:
    def test_fibonacci_converges(self, fib):
        assert lambda_hat(fib, 40) == approx(math.log(GOLDEN), abs=2e-2)

    def test_thue_morse_exact(self, thue_morse):
        for n in range(1, 30):
            assert lambda_hat(thue_morse, n) == approx(math.log(2), abs=1e-12)

    def test_three_letter_against_pf(self, three_letter):
        theta = perron_frobenius(THREE_LETTER).theta1
        assert lambda_hat(three_letter, 40) == approx(math.log(theta), abs=2e-2)

    def test_partials_end_at_lambda_hat(self, fib):
        partials = lambda_partials(fib, 10)
        assert len(partials) == 10
        assert partials[-1] == approx(lambda_hat(fib, 10))

    def test_a2_ell_of_periodic_sequence_is_shift_invariant(self, fib):
        assert check_A2_ell(fib, 3, 20) == approx(lambda_hat(fib, 20))

    def test_a3(self, fib):
        assert check_A3(fib, 4) == approx(math.log(3) / 4)


class TestConditions:
    def test_positive_block(self, fib):
        assert positive_block(fib, 1, 5) == (1, 2)
        identity = DirectiveSequence.periodic([Substitution.identity(2)])
        assert positive_block(identity, 1, 5) is None

    def test_a1prime(self, fib):
        assert check_A1prime(fib, [FIBONACCI, FIBONACCI], 10, 0.5)
        assert not check_A1prime(fib, [THUE_MORSE], 10, 0.5)
        with pytest.raises(PreconditionError):
            check_A1prime(fib, [Substitution.identity(2)], 10, 0.5)

    @pytest.mark.parametrize("N,expected", [(3, True), (4, True), (16, True), (2, False), (17, False)])
    def test_ncond_fibonacci(self, fib, N, expected):
        assert check_Ncond(fib, 3, N) is expected


class TestMeasureVectors:
    def test_fibonacci_frequencies(self, fib):
        mv = measure_vectors(fib, 0, depth=40)
        assert mv.mu_n == approx([1 / GOLDEN, 1 / GOLDEN ** 2], abs=1e-6)
        assert mv.residual <= 1e-8

    def test_level_normalization(self, three_letter):
        mv = measure_vectors(three_letter, 3, depth=40)
        P = telescope_matrix(three_letter, 3).astype(float)
        assert (P @ mv.mu_n).sum() == approx(1.0)
        assert mv.residual <= 1e-8

    def test_no_positive_block(self):
        identity = DirectiveSequence.periodic([Substitution.identity(2)])
        with pytest.raises(NumericalFailure):
            measure_vectors(identity, 0, depth=10)


class TestPrefixPath:
    def test_reassembles_random_prefixes(self, fib, rng):
        for b in (1, 2):
            word = expand(fib, 10, b)
            for k in rng.integers(0, len(word) + 1, size=25):
                path = prefix_path(fib, 10, b, int(k))
                assert reassemble_prefix(fib, path) == word[: int(k)]

    def test_full_length_uses_anchor(self, fib):
        word = expand(fib, 5, 1)
        path = prefix_path(fib, 5, 1, len(word))
        assert path.prefixes[5] == (1,)
        assert reassemble_prefix(fib, path) == word

    def test_three_letter_prefixes(self, three_letter):
        word = expand(three_letter, 3, 3)
        for k in (0, 1, 7, 31, len(word) - 1):
            assert reassemble_prefix(three_letter, prefix_path(three_letter, 3, 3, k)) == word[:k]

    def test_k_out_of_range(self, fib):
        with pytest.raises(PreconditionError):
            prefix_path(fib, 3, 1, 6)
