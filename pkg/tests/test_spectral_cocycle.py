"""
The matrix M_zeta(xi), cocycle products and exponent estimates.

Core claims:
    - M_zeta(0) = S^t and the products at xi = 0 reproduce (S^[n])^t
    - M_{z1 o z2}(xi) = M_{z2}(S_{z1}^t xi) M_{z1}(xi)
    - |M_a(xi, n)| is dominated entrywise by (S^[n])^t
    - torus orbits are exact; generic completion keeps omega s orbits alive
    - Rauzy-Veech substitutions have |det M(xi)| = 1, hence chi >= 0
"""

import math

import numpy as np
import pytest
from pytest import approx

from src.speccoc.errors import PreconditionError
from src.speccoc.rauzy_veech import directive_from_iet, random_iet, rauzy_step
from src.speccoc.sadic import DirectiveSequence, lambda_hat, telescope, telescope_matrix
from src.speccoc.spectral_cocycle import (
    TorusPoint,
    chi_estimate,
    cocycle_norm,
    cocycle_product,
    det_modulus,
    fourier_matrix,
    generic_torus_point,
    omega_point,
    required_tail_bits,
    self_similar_product,
    self_similar_roof,
    skew_step,
    torus_line_point,
)
from src.speccoc.substitution_core import (
    FIBONACCI,
    THREE_LETTER,
    THUE_MORSE,
    Substitution,
    compose,
    substitution_matrix,
)

GOLDEN = (1 + math.sqrt(5)) / 2


def _random_substitution(rng, m, max_len=8):
    return Substitution(
        tuple(tuple(int(x) for x in rng.integers(1, m + 1, size=int(rng.integers(1, max_len + 1)))) for _ in range(m))
    )


class TestTorusPoint:
    def test_from_reals_is_exact(self):
        pt = TorusPoint.from_reals([0.5, 0.25])
        assert pt.xi.tolist() == [0.5, 0.25]
        assert pt.denom == 4

    def test_reduced_mod_one(self):
        assert TorusPoint.from_reals([1.5, -0.25]).xi.tolist() == [0.5, 0.75]

    def test_apply_transpose(self):
        pt = TorusPoint.from_reals([0.5, 0.5]).apply_transpose(substitution_matrix(THUE_MORSE))
        assert pt.is_zero

    def test_skew_step(self, fib):
        shifted, pt = skew_step(fib, [0.25, 0.5])
        # S^t = [[1, 1], [1, 0]]
        assert pt.xi.tolist() == [0.75, 0.25]
        assert shifted.term(1) == FIBONACCI

    def test_line_point_without_tail(self):
        assert torus_line_point(0.5, [1.0, 3.0]).xi.tolist() == [0.5, 0.5]

    def test_line_point_tail_stays_close(self):
        pt = torus_line_point(0.7, [1.0, 2.0], tail_bits=200, seed=3)
        assert pt.xi == approx([0.7, 0.4], abs=1e-15)
        again = torus_line_point(0.7, [1.0, 2.0], tail_bits=200, seed=3)
        assert again == pt
        assert torus_line_point(0.7, [1.0, 2.0], tail_bits=200, seed=4) != pt

    def test_generic_point_is_seeded(self):
        a = generic_torus_point([0.1, 0.2], 128, seed=9)
        b = generic_torus_point([0.1, 0.2], 128, seed=9)
        assert a == b
        assert a.xi == approx([0.1, 0.2], abs=1e-15)

    def test_required_tail_bits(self, fib):
        assert required_tail_bits(fib, 10) == 74

    def test_omega_zero_stays_exact(self, fib):
        assert omega_point(fib, 0.0, [1.0, 1.0], 50, seed=1).is_zero


class TestFourierMatrix:
    def test_zero_gives_transpose(self):
        M = fourier_matrix(THREE_LETTER, [0.0, 0.0, 0.0]).entries
        assert np.allclose(M, substitution_matrix(THREE_LETTER).T)
        assert cocycle_norm(M) == approx(6.0)

    def test_three_letter_entry(self, rng):
        xi = rng.uniform(0, 1, 3)
        z = np.exp(-2j * np.pi * xi)
        M = fourier_matrix(THREE_LETTER, xi).entries
        # letter 1 sits at positions 0, 2, 5 of 121321
        expected = 1 + z[0] * z[1] + z[0] ** 2 * z[1] ** 2 * z[2]
        assert M[0, 0] == approx(expected, abs=1e-12)

    def test_thue_morse_half_point(self):
        M = fourier_matrix(THUE_MORSE, [0.5, 0.5]).entries
        assert np.allclose(M, [[1, -1], [-1, 1]])

    def test_cocycle_identity(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 5))
            z1, z2 = _random_substitution(rng, m), _random_substitution(rng, m)
            for _ in range(4):
                xi = TorusPoint.from_reals(rng.uniform(0, 1, m))
                lhs = fourier_matrix(compose(z1, z2), xi).entries
                rhs = (
                    fourier_matrix(z2, xi.apply_transpose(substitution_matrix(z1))).entries
                    @ fourier_matrix(z1, xi).entries
                )
                assert np.abs(lhs - rhs).max() < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(PreconditionError):
            fourier_matrix(FIBONACCI, [0.1, 0.2, 0.3])

    def test_rauzy_substitutions_are_unimodular(self, rng):
        for m in (2, 3, 4, 5):
            zeta = rauzy_step(random_iet(m, seed=m)).substitution
            for _ in range(20):
                assert det_modulus(zeta, rng.uniform(0, 1, m)) == approx(1.0, abs=1e-10)


class TestProducts:
    @pytest.mark.parametrize("zeta", [FIBONACCI, THUE_MORSE, THREE_LETTER])
    def test_extension_property(self, zeta):
        a = DirectiveSequence.periodic([zeta])
        for n in (1, 7, 30):
            S = telescope_matrix(a, n).T.astype(float)
            got = cocycle_product(a, TorusPoint.zero(a.m), n).true_value
            assert np.abs(got - S).max() / np.abs(S).max() < 1e-9

    def test_product_equals_composed_matrix(self, three_letter, rng):
        xi = TorusPoint.from_reals(rng.uniform(0, 1, 3))
        zeta3 = telescope(three_letter, 3).zeta_n
        direct = fourier_matrix(zeta3, xi).entries
        prod = cocycle_product(three_letter, xi, 3).true_value
        assert np.abs(prod - direct).max() / np.abs(direct).max() < 1e-10

    def test_domination(self, fib, rng):
        for n in (4, 12):
            S_t = telescope_matrix(fib, n).T.astype(float)
            for _ in range(10):
                M = cocycle_product(fib, rng.uniform(0, 1, 2), n).true_value
                assert (np.abs(M) <= S_t + 1e-9 * S_t.max()).all()

    def test_thue_morse_collapse(self, thue_morse):
        prod = cocycle_product(thue_morse, [0.5, 0.5], 4)
        assert prod.degenerate
        assert np.all(prod.true_value == 0)
        est = chi_estimate(thue_morse, [0.5, 0.5], 4)
        assert est.chi == -math.inf
        assert est.degenerate

    def test_needs_positive_n(self, fib):
        with pytest.raises(PreconditionError):
            cocycle_product(fib, [0.1, 0.2], 0)


class TestExponents:
    @pytest.mark.parametrize("n", [5, 20])
    def test_zero_point_gives_lambda_hat(self, fib, n):
        est = chi_estimate(fib, TorusPoint.zero(2), n)
        assert est.chi == approx(lambda_hat(fib, n), abs=1e-12)
        assert est.variant == "matrix"
        assert len(est.partials) == n

    def test_tail_max(self, fib, rng):
        est = chi_estimate(fib, rng.uniform(0, 1, 2), 20)
        assert est.tail_max == max(est.partials[16:])
        assert est.tail_spread >= 0

    def test_vector_variant_below_matrix(self, three_letter, rng):
        xi = TorusPoint.from_reals(rng.uniform(0, 1, 3))
        full = chi_estimate(three_letter, xi, 10)
        vec = chi_estimate(three_letter, xi, 10, z=[1, 1j, -1])
        assert vec.variant == "vector"
        assert vec.chi <= full.chi + math.log(3) / 10 + 1e-12

    def test_zero_vector_rejected(self, fib):
        with pytest.raises(PreconditionError):
            chi_estimate(fib, [0.1, 0.2], 5, z=[0, 0])

    def test_column_norm(self, fib):
        est = chi_estimate(fib, TorusPoint.zero(2), 10, norm="column")
        assert est.norm == "column"
        assert math.isfinite(est.chi)

    def test_generic_omega_orbit_does_not_collapse(self, fib):
        n = 60
        xi = omega_point(fib, 0.7, [1.0, 1.0], n, seed=1)
        est = chi_estimate(fib, xi, n)
        assert math.isfinite(est.chi)
        assert est.chi <= lambda_hat(fib, n) + 1e-9

    def test_rauzy_sequences_have_nonnegative_exponents(self, rng):
        for m in (3, 4):
            a = directive_from_iet(random_iet(m, seed=40 + m), 15)
            for _ in range(3):
                assert chi_estimate(a, rng.uniform(0, 1, m), 15).chi >= -1e-9


class TestSelfSimilar:
    def test_fibonacci_roof(self):
        data = self_similar_roof(FIBONACCI)
        assert float(data.theta1) == approx(GOLDEN, abs=1e-14)
        assert data.s_float == approx([GOLDEN, 1.0], abs=1e-14)
        assert data.s_float.min() == 1.0

    def test_sum_normalization(self):
        data = self_similar_roof(THREE_LETTER, normalize="sum")
        assert data.s_float.sum() == approx(1.0)

    def test_matches_torus_orbit(self, fib):
        prod, _ = self_similar_product(FIBONACCI, 0.37, 8)
        via_orbit = cocycle_product(fib, prod.xi0, 8).true_value
        assert np.abs(prod.true_value - via_orbit).max() / np.abs(via_orbit).max() < 1e-9

    def test_dominated_by_lambda_hat(self, fib):
        _, est = self_similar_product(FIBONACCI, 1.0, 20)
        assert est.chi <= lambda_hat(fib, 20) + 1e-9

    def test_non_primitive_rejected(self):
        with pytest.raises(PreconditionError):
            self_similar_roof(Substitution(((1, 2), (2,))))
