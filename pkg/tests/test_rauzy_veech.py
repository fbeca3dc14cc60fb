"""
Rauzy-Veech and Zorich induction.
"""

import itertools
import math

import numpy as np
import pytest
from pytest import approx

from src.speccoc.errors import PreconditionError
from src.speccoc.rauzy_veech import (
    IETState,
    directive_from_iet,
    iet_apply,
    is_irreducible,
    move_type,
    random_iet,
    rauzy_class,
    rauzy_orbit,
    rauzy_step,
    reconstruct_lengths,
    tower_check,
    zorich_step,
)


class TestStates:
    def test_rotation(self):
        state = IETState((0.7, 0.3), (2, 1))
        assert iet_apply(state, 0.1) == approx(0.4)
        assert iet_apply(state, 0.8) == approx(0.1)

    def test_irreducibility(self):
        assert is_irreducible((3, 2, 1))
        assert is_irreducible((4, 3, 2, 1))
        assert not is_irreducible((1, 3, 2))
        assert not is_irreducible((2, 1, 3))

    @pytest.mark.parametrize(
        "lam,pi",
        [((0.5, 0.5), (1, 2)), ((0.5, 0.5), (2, 2)), ((0.5, -0.1), (2, 1)), ((0.3, 0.3, 0.4), (2, 1))],
    )
    def test_invalid_states(self, lam, pi):
        with pytest.raises(PreconditionError):
            IETState(lam, pi)

    def test_random_iet(self):
        state = random_iet(4, seed=3)
        assert state.pi == (4, 3, 2, 1)
        assert state.total == approx(1.0)
        assert random_iet(4, seed=3) == state


class TestMoves:
    def test_type_a_two_letters(self):
        move = rauzy_step(IETState((0.7, 0.3), (2, 1)))
        assert move.type == "a"
        assert move.new_state.lam == approx((0.4, 0.3))
        assert move.new_state.pi == (2, 1)
        assert move.substitution.images == ((1,), (1, 2))
        assert move.matrix.tolist() == [[1, 1], [0, 1]]

    def test_type_b_two_letters(self):
        move = rauzy_step(IETState((0.3, 0.7), (2, 1)))
        assert move.type == "b"
        assert move.new_state.lam == approx((0.3, 0.4))
        assert move.substitution.images == ((1, 2), (2,))

    def test_draw_is_refused(self):
        state = IETState((0.5, 0.5), (2, 1))
        assert state.is_draw
        with pytest.raises(PreconditionError):
            move_type(state)
        with pytest.raises(PreconditionError):
            directive_from_iet(state, 1)

    @pytest.mark.parametrize("m", [2, 3, 4, 5])
    def test_unimodular_and_towers(self, m):
        state = random_iet(m, seed=50 + m)
        for move in rauzy_orbit(state, 8):
            assert abs(round(np.linalg.det(move.matrix.astype(float)))) == 1
            assert sorted(move.return_times) == [1] * (m - 1) + [2]
        report = tower_check(state, samples=200, seed=1)
        assert report.ok
        assert report.max_return_error < 1e-9

    @pytest.mark.slow
    def test_thousand_random_steps(self):
        checked = 0
        for m in (2, 3, 4, 5):
            for seed in range(250):
                state = random_iet(m, seed=1000 * m + seed)
                move = rauzy_step(state)
                assert abs(round(np.linalg.det(move.matrix.astype(float)))) == 1
                report = tower_check(state, move, samples=1000, seed=seed)
                assert report.failures == 0, (m, seed, report)
                assert report.one_double_floor
                checked += 1
        assert checked == 1000

    def test_towers_along_walk(self):
        state = random_iet(4, seed=8).normalized()
        for k in range(10):
            move = rauzy_step(state)
            assert tower_check(state, move, samples=100, seed=k).ok
            state = move.new_state.normalized()

    def test_reconstruct_lengths(self):
        state = random_iet(4, seed=21)
        moves = rauzy_orbit(state, 15)
        assert reconstruct_lengths(moves) == approx(np.asarray(state.lam), abs=1e-9)
        with pytest.raises(PreconditionError):
            reconstruct_lengths([])


class TestZorich:
    def test_matches_composed_rauzy_moves(self):
        state = random_iet(3, seed=4)
        move, count = zorich_step(state)
        assert move.count == count >= 1
        S = np.identity(3, dtype=np.int64)
        cur = state
        for _ in range(count):
            step = rauzy_step(cur)
            assert step.type == move.type
            S = S @ step.matrix
            cur = step.new_state
        assert (move.matrix == S).all()
        assert move.new_state.lam == approx(cur.lam)

    def test_types_alternate(self):
        moves = rauzy_orbit(random_iet(4, seed=12), 8, accel="zorich")
        assert all(x.type != y.type for x, y in zip(moves, moves[1:]))

    def test_unknown_acceleration(self):
        with pytest.raises(PreconditionError):
            rauzy_orbit(random_iet(3, seed=1), 2, accel="fast")


def _rotation_from_quotients(quotients):
    # lambda_1 / lambda_2 = [q0; q1, ..., q_k + 1/phi], so the expansion continues with 1, 1, ...
    x = (1 + math.sqrt(5)) / 2
    for q in reversed(quotients):
        x = q + 1 / x
    return IETState((x / (1 + x), 1 / (1 + x)), (2, 1))


class TestContinuedFractions:
    def test_run_lengths_are_partial_quotients(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            quotients = [int(q) for q in rng.integers(1, 31, size=5)]
            state = _rotation_from_quotients(quotients)
            moves = rauzy_orbit(state, sum(quotients) + 1)
            runs = [(kind, len(list(group))) for kind, group in itertools.groupby(mv.type for mv in moves)]
            assert [n for _, n in runs[:5]] == quotients
            assert [kind for kind, _ in runs[:6]] == ["a", "b", "a", "b", "a", "b"]

    def test_zorich_counts_are_partial_quotients(self):
        quotients = [3, 1, 7, 30, 2]
        moves = rauzy_orbit(_rotation_from_quotients(quotients), 7, accel="zorich")
        assert [mv.count for mv in moves] == quotients + [1, 1]

    def test_directive_sequence_follows_expansion(self):
        quotients = [2, 5]
        a = directive_from_iet(_rotation_from_quotients(quotients), 8)
        images = [a.term(k).images for k in range(1, 8)]
        assert images == [((1,), (1, 2))] * 2 + [((1, 2), (2,))] * 5


class TestDirective:
    def test_terms_follow_induction(self):
        state = random_iet(3, seed=6)
        a = directive_from_iet(state, 5)
        assert a.kind == "rauzy"
        expected = [mv.substitution for mv in rauzy_orbit(state, 12)]
        assert [a.term(k) for k in range(1, 13)] == expected


class TestClasses:
    @pytest.mark.parametrize("m,size", [(2, 1), (3, 3), (4, 7), (5, 15)])
    def test_symmetric_class_sizes(self, m, size):
        graph = rauzy_class(tuple(range(m, 0, -1)))
        assert graph.size == size
        assert len(graph.edges) == 2 * size

    def test_reducible_rejected(self):
        with pytest.raises(PreconditionError):
            rauzy_class((1, 2))
