"""
verify.py

Property suites run by `speccoc verify`, all with fixed seeds:
- identities: cocycle identity, matrix homomorphism, abelianization,
  extension of the substitution matrices, entrywise domination
- oracles: fast vs direct twisted sums, concatenation, lambda_hat
  convergence, Perron-Frobenius vs numpy eigenvalues, Fejer constants
- towers: unimodularity, pointwise tower membership, return times,
  Rauzy class sizes, sign of exponents along Rauzy-generated sequences

User-supplied fixture substitutions are checked for admissibility under
the "class-A" invariant.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

import numpy as np

from .rauzy_veech import directive_from_iet, iter_moves, random_iet, rauzy_class, tower_check
from .sadic import DirectiveSequence, expand, lambda_hat, telescope_matrix
from .spectral_cocycle import (
    TWO_PI,
    TorusPoint,
    chi_estimate,
    cocycle_product,
    fourier_matrix,
    torus_line_point,
)
from .spectral_measure import c3_constant, fejer_kernel, holder_from_GR, twisted_sum, twisted_sum_fast
from .substitution_core import (
    FIBONACCI,
    THREE_LETTER,
    THUE_MORSE,
    Substitution,
    compose,
    perron_frobenius,
    population_vector,
    substitution_matrix,
    substitution_to_text,
    validate,
)

logger = logging.getLogger(__name__)

STOCK_SEQUENCES = {
    "fibonacci": FIBONACCI,
    "thue_morse": THUE_MORSE,
    "three_letter": THREE_LETTER,
}
RAUZY_CLASS_SIZES = {2: 1, 3: 3, 4: 7, 5: 15}


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    invariant: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed_invariants(self) -> List[str]:
        return sorted({c.invariant for c in self.checks if not c.passed})


def random_substitution(rng: np.random.Generator, m: int, max_len: int = 8) -> Substitution:
    images = []
    for _ in range(m):
        length = int(rng.integers(1, max_len + 1))
        images.append(tuple(int(x) for x in rng.integers(1, m + 1, size=length)))
    return Substitution(tuple(images))


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

def check_cocycle_identity(rng: np.random.Generator, pairs: int = 200, points: int = 10) -> CheckResult:
    """M_{z1 o z2}(xi) = M_{z2}(S_{z1}^t xi) M_{z1}(xi)."""
    worst = 0.0
    for _ in range(pairs):
        m = int(rng.integers(2, 5))
        z1, z2 = random_substitution(rng, m), random_substitution(rng, m)
        z12 = compose(z1, z2)
        S1 = substitution_matrix(z1)
        for _ in range(points):
            xi = TorusPoint.from_reals(rng.uniform(0.0, 1.0, m))
            lhs = fourier_matrix(z12, xi).entries
            rhs = fourier_matrix(z2, xi.apply_transpose(S1)).entries @ fourier_matrix(z1, xi).entries
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return CheckResult("identities", "cocycle identity", "cocycle-identity", worst < 1e-10, f"max error {worst:.3e}")


def check_homomorphism(rng: np.random.Generator, pairs: int = 100) -> CheckResult:
    bad = 0
    for _ in range(pairs):
        m = int(rng.integers(2, 5))
        z1, z2 = random_substitution(rng, m), random_substitution(rng, m)
        if not np.array_equal(substitution_matrix(compose(z1, z2)), substitution_matrix(z1) @ substitution_matrix(z2)):
            bad += 1
    return CheckResult("identities", "matrix homomorphism", "homomorphism", bad == 0, f"{bad}/{pairs} mismatches")


def check_abelianization(rng: np.random.Generator, trials: int = 100) -> CheckResult:
    bad = 0
    for _ in range(trials):
        m = int(rng.integers(2, 5))
        zeta = random_substitution(rng, m)
        v = tuple(int(x) for x in rng.integers(1, m + 1, size=int(rng.integers(0, 30))))
        if not np.array_equal(population_vector(zeta(v), m), substitution_matrix(zeta) @ population_vector(v, m)):
            bad += 1
    return CheckResult("identities", "abelianization", "abelianization", bad == 0, f"{bad}/{trials} mismatches")


def _rauzy_sequence(m: int, seed: int) -> DirectiveSequence:
    return directive_from_iet(random_iet(m, seed), 20)


def check_extension(n_max: int = 30) -> List[CheckResult]:
    """cocycle_product(a, 0, n) reproduces transpose(S^[n])."""
    out = []
    sequences = {name: DirectiveSequence.periodic([z]) for name, z in STOCK_SEQUENCES.items()}
    sequences.update({f"rauzy_m{m}": _rauzy_sequence(m, 100 + m) for m in (3, 4)})
    for name, a in sequences.items():
        worst = 0.0
        for n in (1, 5, 10, 20, n_max):
            S = telescope_matrix(a, n).T.astype(float)
            got = cocycle_product(a, TorusPoint.zero(a.m), n).true_value
            worst = max(worst, float(np.abs(got - S).max() / np.abs(S).max()))
        out.append(CheckResult("identities", f"extension {name}", "extension", worst < 1e-9, f"max relative error {worst:.3e}"))
    return out


def check_domination(rng: np.random.Generator, points: int = 10) -> CheckResult:
    worst = -math.inf
    for z in STOCK_SEQUENCES.values():
        a = DirectiveSequence.periodic([z])
        for n in (3, 8):
            S_t = telescope_matrix(a, n).T.astype(float)
            for _ in range(points):
                M = cocycle_product(a, rng.uniform(0.0, 1.0, a.m), n).true_value
                worst = max(worst, float((np.abs(M) - S_t - 1e-9 * max(1.0, S_t.max())).max()))
    return CheckResult("identities", "entrywise domination", "domination", worst <= 0.0, f"max excess {worst:.3e}")


def check_fixture(zeta: Substitution, suite: str = "identities") -> CheckResult:
    issues = validate(zeta)
    return CheckResult(suite, f"admissible {substitution_to_text(zeta)}", "class-A", not issues, "; ".join(issues))


def identities_suite(rng: np.random.Generator) -> List[CheckResult]:
    checks = [check_cocycle_identity(rng), check_homomorphism(rng), check_abelianization(rng)]
    checks.extend(check_extension())
    checks.append(check_domination(rng))
    checks.extend(check_fixture(z) for z in STOCK_SEQUENCES.values())
    return checks


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def _max_depth(a: DirectiveSequence, limit: int = 100_000, n_max: int = 12) -> int:
    n = 1
    while n < n_max and int(telescope_matrix(a, n + 1).sum(axis=0).max()) <= limit:
        n += 1
    return n


def check_fast_vs_direct(rng: np.random.Generator, trials: int = 50) -> CheckResult:
    worst = 0.0
    names = list(STOCK_SEQUENCES)
    for t in range(trials):
        zeta = STOCK_SEQUENCES[names[t % len(names)]]
        a = DirectiveSequence.periodic([zeta])
        n = int(rng.integers(1, _max_depth(a) + 1))
        omega = float(rng.uniform(-5.0, 5.0))
        s = rng.uniform(0.5, 2.0, a.m)
        phi = rng.normal(size=a.m) + 1j * rng.normal(size=a.m)
        vec, _ = twisted_sum_fast(a, n, 1, phi, s, omega)
        for b in range(1, a.m + 1):
            word = expand(a, n, b)
            direct = twisted_sum(word, phi, s, omega).value
            worst = max(worst, abs(vec[b - 1] - direct) / len(word))
    return CheckResult("oracles", "fast vs direct twisted sums", "phi-oracle", worst < 1e-9, f"max error per letter {worst:.3e}")


def check_concatenation(rng: np.random.Generator, trials: int = 100) -> CheckResult:
    """Phi(uv) = Phi(u) + exp(-2 pi i omega |u|_s) Phi(v)."""
    worst = 0.0
    for _ in range(trials):
        m = int(rng.integers(2, 5))
        u = rng.integers(1, m + 1, size=int(rng.integers(1, 60)))
        v = rng.integers(1, m + 1, size=int(rng.integers(1, 60)))
        omega = float(rng.uniform(-3.0, 3.0))
        s = rng.uniform(0.5, 2.0, m)
        phi = rng.normal(size=m) + 1j * rng.normal(size=m)
        frac = torus_line_point(omega, s).xi
        shift = np.exp(-1j * TWO_PI * float(frac @ population_vector(u, m)))
        lhs = twisted_sum(np.concatenate([u, v]), phi, s, omega).value
        rhs = twisted_sum(u, phi, s, omega).value + shift * twisted_sum(v, phi, s, omega).value
        worst = max(worst, abs(lhs - rhs) / (len(u) + len(v)))
    return CheckResult("oracles", "concatenation", "phi-concatenation", worst < 1e-12, f"max error per letter {worst:.3e}")


def check_lambda_convergence() -> List[CheckResult]:
    fib = DirectiveSequence.periodic([FIBONACCI])
    err_fib = abs(lambda_hat(fib, 40) - math.log((1 + math.sqrt(5)) / 2))
    tm = DirectiveSequence.periodic([THUE_MORSE])
    err_tm = max(abs(lambda_hat(tm, n) - math.log(2)) for n in range(1, 41))
    three = DirectiveSequence.periodic([THREE_LETTER])
    err_three = abs(lambda_hat(three, 40) - math.log(perron_frobenius(THREE_LETTER).theta1))
    return [
        CheckResult("oracles", "lambda_hat fibonacci", "lambda-convergence", err_fib < 2e-2, f"error {err_fib:.3e}"),
        CheckResult("oracles", "lambda_hat thue_morse", "lambda-convergence", err_tm < 1e-12, f"error {err_tm:.3e}"),
        CheckResult("oracles", "lambda_hat three_letter", "lambda-convergence", err_three < 2e-2, f"error {err_three:.3e}"),
    ]


def check_perron_frobenius() -> CheckResult:
    worst = 0.0
    for zeta in STOCK_SEQUENCES.values():
        theta = perron_frobenius(zeta).theta1
        ref = float(np.max(np.abs(np.linalg.eigvals(substitution_matrix(zeta).astype(float)))))
        worst = max(worst, abs(theta - ref) / ref)
    return CheckResult("oracles", "Perron-Frobenius vs eigvals", "pf-oracle", worst < 1e-9, f"max relative error {worst:.3e}")


def check_fejer_constants(rng: np.random.Generator, trials: int = 20) -> CheckResult:
    worst = 0.0
    for R in (1.0, 10.0, 1e3, 1e5):
        worst = max(worst, abs(float(fejer_kernel(R, 0.0)) - R) / R)
        worst = max(worst, abs(float(fejer_kernel(R, 1.0 / (2.0 * R))) - 4.0 * R / math.pi ** 2) / R)
    for _ in range(trials):
        C, alpha, R, f2 = rng.uniform(0.1, 5.0), rng.uniform(0.0, 1.99), rng.uniform(1.0, 1e4), rng.uniform(0.1, 3.0)
        r, bound = holder_from_GR(C, alpha, R)
        expect = C * math.pi ** 2 * 2.0 ** alpha * (1.0 / (2.0 * R)) ** alpha
        worst = max(worst, abs(bound - expect) / expect, abs(r - 0.5 / R) * R)
        c3 = c3_constant(C, alpha, f2)
        expect = C * (1.0 + 2.0 / (math.pi ** 2 * (2.0 - alpha))) + f2 ** 2 / math.pi ** 2
        worst = max(worst, abs(c3 - expect) / expect)
    return CheckResult("oracles", "Fejer constants", "fejer", worst < 1e-12, f"max relative error {worst:.3e}")


def oracles_suite(rng: np.random.Generator) -> List[CheckResult]:
    checks = [check_fast_vs_direct(rng), check_concatenation(rng)]
    checks.extend(check_lambda_convergence())
    checks.append(check_perron_frobenius())
    checks.append(check_fejer_constants(rng))
    return checks


# ---------------------------------------------------------------------------
# towers
# ---------------------------------------------------------------------------

def check_rauzy_steps(seed: int, states_per_m: int = 25, steps: int = 10, samples: int = 100) -> List[CheckResult]:
    """Unimodularity, tower membership and return times over random Rauzy walks."""
    non_unimodular = 0
    tower_failures = 0
    bad_floors = 0
    total = 0
    for m in (2, 3, 4, 5):
        for j in range(states_per_m):
            state = random_iet(m, seed * 1000 + 10 * m + j).normalized()
            for k, move in enumerate(iter_moves(state)):
                if k >= steps:
                    break
                total += 1
                det = int(round(np.linalg.det(move.matrix.astype(float))))
                non_unimodular += abs(det) != 1
                report = tower_check(state, move, samples, seed=total)
                tower_failures += report.failures
                bad_floors += not report.one_double_floor
                state = move.new_state.normalized()
    return [
        CheckResult("towers", "unimodularity", "unimodular", non_unimodular == 0, f"{non_unimodular}/{total} steps"),
        CheckResult("towers", "tower membership", "tower", tower_failures == 0, f"{tower_failures} failing samples"),
        CheckResult("towers", "one double floor", "return-times", bad_floors == 0, f"{bad_floors}/{total} steps"),
    ]


def check_class_sizes() -> CheckResult:
    sizes = {m: rauzy_class(tuple(range(m, 0, -1))).size for m in RAUZY_CLASS_SIZES}
    return CheckResult("towers", "Rauzy class sizes", "rauzy-class", sizes == RAUZY_CLASS_SIZES, str(sizes))


def check_rauzy_sign(rng: np.random.Generator, n: int = 20) -> CheckResult:
    worst = math.inf
    for m in (2, 3, 4):
        a = _rauzy_sequence(m, 200 + m)
        for _ in range(5):
            worst = min(worst, chi_estimate(a, rng.uniform(0.0, 1.0, m), n).chi)
    return CheckResult("towers", "exponent sign along Rauzy sequences", "rauzy-sign", worst >= -1e-6, f"min chi {worst:.3e}")


def towers_suite(rng: np.random.Generator, seed: int) -> List[CheckResult]:
    checks = check_rauzy_steps(seed)
    checks.append(check_class_sizes())
    checks.append(check_rauzy_sign(rng))
    return checks


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def run_suite(suite: str = "all", fixtures: Sequence[Substitution] = (), seed: int = 0) -> VerifyReport:
    runners: Dict[str, Callable[[np.random.Generator], List[CheckResult]]] = {
        "identities": identities_suite,
        "oracles": oracles_suite,
        "towers": lambda rng: towers_suite(rng, seed),
    }
    if suite != "all" and suite not in runners:
        raise ValueError(f"unknown suite {suite!r}")
    names = list(runners) if suite == "all" else [suite]

    report = VerifyReport()
    for i, name in enumerate(names):
        rng = np.random.default_rng([seed, i])
        checks = runners[name](rng)
        for c in checks:
            level = logging.INFO if c.passed else logging.ERROR
            logger.log(level, "[%s] %s: %s (%s)", name, c.name, "pass" if c.passed else "FAIL", c.detail)
        report.checks.extend(checks)
    report.checks.extend(check_fixture(z, "fixtures") for z in fixtures)
    return report
