"""
spectral_measure.py

Spectral estimates for suspension flows over S-adic systems:
- SuspensionSpec (roof s, level l, s^(l)) and cylindrical test functions
- twisted Birkhoff sums, direct and through the cocycle
- Fejer kernel, G_R estimates by Monte-Carlo over the suspension measure
- local dimension via the cocycle exponent and via G_R slopes
- explicit bound calculators linking G_R decay and local Hoelder bounds
- singularity and generic-vector scans, level-shift cross-check
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import InputFileError, NumericalFailure, PreconditionError
from .sadic import (
    DirectiveSequence,
    check_A2_ell,
    expand,
    iter_telescope_matrices,
    measure_vectors,
    telescope_matrix,
)
from .spectral_cocycle import (
    chi_estimate,
    cocycle_product,
    det_modulus,
    omega_point,
    skew_step,
    torus_line_point,
)
from .substitution_core import (
    DEFAULT_LENGTH_CAP,
    Substitution,
    perron_frobenius,
)
from .workers import ordered_map, task_seed

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
MAX_SAMPLING_DEPTH = 10_000
TAPERS = ("fejer", "hann")
# 1 / (mean of sin^4 over a period): unit mass for the Hann-tapered kernel
HANN_NORM = 8.0 / 3.0


# ---------------------------------------------------------------------------
# Suspensions and cylindrical functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SuspensionSpec:
    s: np.ndarray
    level: int
    s_ell: np.ndarray

    @property
    def s_max(self) -> float:
        return float(self.s_ell.max())

    @property
    def s_min(self) -> float:
        return float(self.s_ell.min())


def suspension(a: DirectiveSequence, s: Sequence[float], level: int = 0) -> SuspensionSpec:
    """s^(l) = (S^[l])^t s."""
    s = np.asarray(s, dtype=float)
    if s.shape != (a.m,):
        raise PreconditionError(f"roof vector needs {a.m} entries, got {s.shape}")
    if not np.all(s > 0):
        raise PreconditionError(f"roof vector must be strictly positive, got {s.tolist()}")
    if level < 0:
        raise PreconditionError(f"level must be >= 0, got {level}")
    if level == 0:
        s_ell = s.copy()
    else:
        s_ell = telescope_matrix(a, level).astype(float).T @ s
    return SuspensionSpec(s=s, level=level, s_ell=s_ell)


def gamma_omega(b: Sequence[complex], s: Sequence[float], omega: float) -> np.ndarray:
    """Fourier transforms of the indicator-step profiles: b (1 - e^{-2 pi i omega s}) / (2 pi i omega)."""
    b = np.asarray(b, dtype=complex)
    s = np.asarray(s, dtype=float)
    if omega == 0:
        return b * s
    # exact reduction mod 1, so that omega s_a in Z gives an exact zero
    frac = torus_line_point(omega, s).xi
    return b * (1.0 - np.exp(-1j * TWO_PI * frac)) / (1j * TWO_PI * omega)


def _node_count(omega: float, s_max: float) -> int:
    return 2 * math.ceil(abs(omega) * s_max) + 64


@dataclass(frozen=True, eq=False)
class CylFunction:
    """
    Level-l cylindrical function. kind "simple": f = b_a on the tile of
    letter a. kind "lipschitz": f = psi_a(t) at height t, psi_a given by
    samples (t, value) and interpolated linearly.
    """

    kind: str
    level: int
    b: Optional[np.ndarray] = None
    profiles: Optional[tuple[tuple[np.ndarray, np.ndarray], ...]] = None

    @property
    def m(self) -> int:
        return len(self.b) if self.kind == "simple" else len(self.profiles)

    @property
    def sup_norm(self) -> float:
        if self.kind == "simple":
            return float(np.abs(self.b).max())
        return float(max(np.abs(v).max() for _, v in self.profiles))

    def check_roof(self, s_ell: np.ndarray) -> None:
        if len(s_ell) != self.m:
            raise PreconditionError(f"function has {self.m} letters, roof has {len(s_ell)}")
        if self.kind == "lipschitz":
            for a, ((t, _), h) in enumerate(zip(self.profiles, s_ell), start=1):
                if abs(t[-1] - h) > 1e-9 * max(h, 1.0):
                    raise PreconditionError(
                        f"profile of letter {a} ends at {t[-1]!r}, tile height is {h!r}"
                    )

    def partial_integral(self, letter: int, u0: float, u1: float, omega: float, s_max: float) -> complex:
        """integral over [u0, u1] of psi_letter(u) e^{-2 pi i omega u} du."""
        if u1 <= u0:
            return 0j
        if self.kind == "simple":
            bval = self.b[letter - 1]
            if omega == 0:
                return complex(bval * (u1 - u0))
            e0 = np.exp(-1j * TWO_PI * omega * u0)
            e1 = np.exp(-1j * TWO_PI * omega * u1)
            return complex(bval * (e0 - e1) / (1j * TWO_PI * omega))
        t, v = self.profiles[letter - 1]
        span = (u1 - u0) / max(t[-1], 1e-300)
        nodes = max(int(math.ceil(_node_count(omega, s_max) * span)), 16, 8 * len(t))
        u = np.linspace(u0, u1, nodes + 1)
        vals = np.interp(u, t, v) * np.exp(-1j * TWO_PI * omega * u)
        return complex(integrate.trapezoid(vals, u))

    def fourier(self, omega: float, s_ell: np.ndarray) -> np.ndarray:
        """Vector of the per-letter profile transforms at omega."""
        self.check_roof(s_ell)
        if self.kind == "simple":
            return gamma_omega(self.b, s_ell, omega)
        s_max = float(np.max(s_ell))
        return np.array(
            [self.partial_integral(a, 0.0, float(h), omega, s_max) for a, h in enumerate(s_ell, start=1)],
            dtype=complex,
        )


def simple_function(b: Sequence[complex], level: int = 0) -> CylFunction:
    b = np.asarray(b, dtype=complex)
    if b.ndim != 1 or len(b) < 2:
        raise PreconditionError("simple function needs one value per letter")
    return CylFunction(kind="simple", level=level, b=b)


def lipschitz_function(
    profiles: Sequence[tuple[Sequence[float], Sequence[float]]],
    level: int = 0,
) -> CylFunction:
    out = []
    for a, (t, v) in enumerate(profiles, start=1):
        t = np.asarray(t, dtype=float)
        v = np.asarray(v, dtype=complex)
        if len(t) < 2 or len(t) != len(v):
            raise PreconditionError(f"profile of letter {a} needs >= 2 matching (t, value) samples")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise PreconditionError(f"profile of letter {a} must start at t=0 with increasing t")
        out.append((t, v))
    return CylFunction(kind="lipschitz", level=level, profiles=tuple(out))


def load_lipschitz_profiles(path: str | Path, level: int = 0) -> CylFunction:
    """
    CSV with one section per letter:

        letter,1
        t,value
        0.0,0.0
        0.5,1.0
        letter,2
        ...
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputFileError(f"cannot read profile file {path}: {e}") from e
    sections: Dict[int, List[tuple[float, float]]] = {}
    current: Optional[int] = None
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or not "".join(row).strip():
            continue
        head = row[0].strip().lower()
        if head == "t":
            continue
        try:
            if head == "letter":
                current = int(row[1])
                sections[current] = []
                continue
            sample = (float(row[0]), float(row[1]))
        except (IndexError, ValueError) as e:
            raise InputFileError(f"{path}:{lineno}: malformed row {row!r}") from e
        if current is None:
            raise PreconditionError(f"{path}: sample row before any 'letter' header")
        sections[current].append(sample)
    m = len(sections)
    if sorted(sections) != list(range(1, m + 1)):
        raise PreconditionError(f"{path}: letters must be 1..{m}, got {sorted(sections)}")
    profiles = [([t for t, _ in sections[a]], [v for _, v in sections[a]]) for a in range(1, m + 1)]
    return lipschitz_function(profiles, level)


# ---------------------------------------------------------------------------
# Twisted sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwistedSum:
    value: complex
    N: int
    omega: float
    s: tuple[float, ...]


def _phases(v: np.ndarray, s: np.ndarray, omega: float, inclusive: bool) -> np.ndarray:
    """omega |v_0 ... v_j|_s mod 1 (inclusive) or over v_0 ... v_{j-1}, from exact letter counts."""
    frac = torus_line_point(omega, s).xi
    ph = np.zeros(len(v))
    for c in range(len(s)):
        counts = np.cumsum(v == c + 1)
        if not inclusive:
            counts = counts - (v == c + 1)
        ph += frac[c] * counts
    return ph


def twisted_sum(v: Sequence[int], phi: Sequence[complex], s: Sequence[float], omega: float) -> TwistedSum:
    """sum_j phi(v_j) exp(-2 pi i omega |v_0 ... v_j|_s)."""
    s = np.asarray(s, dtype=float)
    if not np.all(s > 0):
        raise PreconditionError(f"roof vector must be strictly positive, got {s.tolist()}")
    phi = np.asarray(phi, dtype=complex)
    arr = np.asarray(v, dtype=np.int64)
    if arr.size == 0:
        return TwistedSum(0j, 0, omega, tuple(s.tolist()))
    ph = _phases(arr, s, omega, inclusive=True)
    value = complex(np.sum(phi[arr - 1] * np.exp(-1j * TWO_PI * ph)))
    return TwistedSum(value, int(arr.size), omega, tuple(s.tolist()))


def twisted_sum_fast(
    a: DirectiveSequence,
    n: int,
    b: int,
    phi: Sequence[complex],
    s: Sequence[float],
    omega: float,
) -> tuple[np.ndarray, complex]:
    """
    [Phi(zeta^[n](c))]_c = M_a(omega s, n) D phi, with D = diag(e^{-2 pi i omega s_c});
    returns the vector over all letters and its entry at b.
    """
    s = np.asarray(s, dtype=float)
    phi = np.asarray(phi, dtype=complex)
    if b < 1 or b > a.m:
        raise PreconditionError(f"letter {b} outside alphabet 1..{a.m}")
    pt = torus_line_point(omega, s)
    twisted = np.exp(-1j * TWO_PI * pt.xi) * phi
    prod = cocycle_product(a, pt, n)
    vec = prod.true_value @ twisted
    return vec, complex(vec[b - 1])


# ---------------------------------------------------------------------------
# Fejer kernel and G_R
# ---------------------------------------------------------------------------

def fejer_kernel(R: float, y):
    """R^{-1} (sin(pi R y) / (pi y))^2, equal to R at y = 0."""
    if R <= 0:
        raise PreconditionError(f"R must be positive, got {R}")
    return R * np.sinc(R * np.asarray(y, dtype=float)) ** 2


def spectral_ball_bound(G_R: float, R: float) -> tuple[float, float]:
    """(r, bound) with sigma_f(B_r(omega)) <= bound, r = 1/(2R): K_R >= 4R/pi^2 on the ball."""
    if R <= 0:
        raise PreconditionError(f"R must be positive, got {R}")
    return 1.0 / (2.0 * R), math.pi ** 2 * G_R / (4.0 * R)


@dataclass(frozen=True, eq=False)
class _SamplingWord:
    word: np.ndarray
    bounds: np.ndarray  # tile start times, len(word) + 1


def _sampling_word(a: DirectiveSequence, s_ell: np.ndarray, R: float, cap: int) -> _SamplingWord:
    target = 50.0 * R / float(s_ell.min())
    depth = None
    for k, P in enumerate(iter_telescope_matrices(a, MAX_SAMPLING_DEPTH), start=1):
        length = int(P[:, 0].sum())
        if length > cap:
            break
        if length >= target:
            depth = k
            break
    if depth is None:
        raise PreconditionError(
            f"sampling word of length {math.ceil(target)} unreachable under the cap of {cap} symbols"
        )
    word = np.asarray(expand(a, depth, 1, cap), dtype=np.int64)
    bounds = np.concatenate(([0.0], np.cumsum(s_ell[word - 1])))
    logger.debug("G_R sampling word: depth %d, %d tiles", depth, len(word))
    return _SamplingWord(word, bounds)


def _window_integral(
    sw: _SamplingWord,
    s_ell: np.ndarray,
    f: CylFunction,
    z: np.ndarray,
    omega: float,
    tau: float,
    R: float,
) -> complex:
    """integral_0^R f(h_t y) e^{-2 pi i omega t} dt for the base point at tiling time tau."""
    word, T = sw.word, sw.bounds
    s_max = float(s_ell.max())
    end = tau + R
    j0 = int(np.searchsorted(T, tau, side="right")) - 1
    j1 = min(int(np.searchsorted(T, end, side="right")) - 1, len(word) - 1)

    def phase(t: float) -> complex:
        return complex(np.exp(-1j * TWO_PI * omega * (t - tau)))

    if j0 == j1:
        return phase(T[j0]) * f.partial_integral(int(word[j0]), tau - T[j0], end - T[j0], omega, s_max)

    total = phase(T[j0]) * f.partial_integral(
        int(word[j0]), tau - T[j0], float(s_ell[word[j0] - 1]), omega, s_max
    )
    mid = word[j0 + 1 : j1]
    if mid.size:
        shifted = z * np.exp(1j * TWO_PI * omega * s_ell)
        total += phase(T[j0 + 1]) * twisted_sum(mid, shifted, s_ell, omega).value
    total += phase(T[j1]) * f.partial_integral(int(word[j1]), 0.0, end - T[j1], omega, s_max)
    return total


def _gr_from_word(
    sw: _SamplingWord,
    s_ell: np.ndarray,
    f: CylFunction,
    omega: float,
    R: float,
    samples: int,
    rng: np.random.Generator,
    taper: str = "fejer",
) -> float:
    total = float(sw.bounds[-1])
    taus = rng.uniform(0.0, total - R, size=samples)
    if taper == "fejer":
        z = f.fourier(omega, s_ell)
        acc = sum(abs(_window_integral(sw, s_ell, f, z, omega, float(tau), R)) ** 2 for tau in taus)
        return acc / samples / R
    # sin^2(pi t / R) = 1/2 - e^{2 pi i t / R} / 4 - e^{-2 pi i t / R} / 4
    freqs = (omega, omega - 1.0 / R, omega + 1.0 / R)
    zs = [f.fourier(w, s_ell) for w in freqs]
    acc = 0.0
    for tau in taus:
        S0, Sm, Sp = (_window_integral(sw, s_ell, f, z, w, float(tau), R) for z, w in zip(zs, freqs))
        acc += abs(0.5 * S0 - 0.25 * (Sm + Sp)) ** 2
    return HANN_NORM * acc / samples / R


def _check_gr_inputs(spec: SuspensionSpec, f: CylFunction, R: float, samples: int, taper: str = "fejer") -> None:
    if taper not in TAPERS:
        raise PreconditionError(f"taper must be one of {TAPERS}, got {taper!r}")
    if samples < 1:
        raise PreconditionError(f"samples must be >= 1, got {samples}")
    if R < spec.s_max:
        raise PreconditionError(f"R={R} is below the largest tile height {spec.s_max}")
    f.check_roof(spec.s_ell)


def G_R_estimate(
    a: DirectiveSequence,
    spec: SuspensionSpec,
    f: CylFunction,
    omega: float,
    R: float,
    samples: int,
    seed: Optional[int | np.random.SeedSequence] = None,
    cap: int = DEFAULT_LENGTH_CAP,
    taper: str = "fejer",
) -> float:
    """
    R^{-1} E|S_R(f, omega)|^2, averaged over base points drawn uniformly in
    tiling time along a long word of the level-shifted sequence.

    taper="hann" weights the window by sin^2(pi t / R) and rescales by 8/3,
    so the kernel keeps unit mass but its tail falls off like R^-5 y^-6
    instead of the Fejer R^-1 y^-2.
    """
    _check_gr_inputs(spec, f, R, samples, taper)
    a_ell = a.shift(spec.level)
    sw = _sampling_word(a_ell, spec.s_ell, R, cap)
    return _gr_from_word(sw, spec.s_ell, f, omega, R, samples, np.random.default_rng(seed), taper)


# ---------------------------------------------------------------------------
# Dimensions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionReport:
    omega: float
    chi_plus: float
    lam: float
    d_lower: Optional[float]
    regime: str  # "formula" | "clamped_ge_2" | "degenerate"
    n: int
    variant: str
    tail_max: float
    flag: Optional[str] = None


def dimension_from_exponents(omega: float, chi: float, lam: float, n: int, variant: str, tail_max: float) -> DimensionReport:
    if chi > 0:
        d = 2.0 - 2.0 * chi / lam
        flag = None
        if d < 0:
            if d < -1e-9:
                flag = "chi_hat exceeds lambda_hat: estimator inconsistency"
                logger.warning("omega=%g: %s (d=%.3g)", omega, flag, d)
            d = 0.0
        return DimensionReport(omega, chi, lam, d, "formula", n, variant, tail_max, flag)
    return DimensionReport(omega, chi, lam, 2.0, "clamped_ge_2", n, variant, tail_max)


def _suspension_mean(a: DirectiveSequence, level: int, z0: np.ndarray, depth: int) -> Optional[complex]:
    """mu_l . z0, the integral of f over one unit of suspension mass; None without a certificate."""
    try:
        mu = measure_vectors(a, level, depth).mu_n
    except (NumericalFailure, PreconditionError) as e:
        logger.warning("no frequency vector at level %d: %s", level, e)
        return None
    return complex(np.dot(mu / mu.sum(), z0))


def dim_via_cocycle(
    a: DirectiveSequence,
    spec: SuspensionSpec,
    f: CylFunction,
    omega: float,
    n: int,
    seed: Optional[int | np.random.SeedSequence] = None,
    variant: str = "vector",
    depth: int = 40,
) -> DimensionReport:
    """
    d = 2 - 2 chi / lambda with chi the vector exponent of z = f.fourier(omega)
    along xi = omega s^(l) under the shifted sequence sigma^l a.

    The vector variant measures z in the sup norm, ||M z||_inf / ||z||_inf;
    lambda is the 1-norm rate of S^[n], which is the row-sum norm of the
    transposed product the cocycle carries at xi = 0.

    At omega = 0 the product is exactly S^[n]^t. If f has nonzero mean
    (mu . z, with mu the frequency vector at the suspension level from a
    cone contraction of the given depth) chi is lambda itself and d = 0.
    """
    if variant not in ("vector", "matrix"):
        raise PreconditionError(f"variant must be 'vector' or 'matrix', got {variant!r}")
    a_ell = a.shift(spec.level)
    z = f.fourier(omega, spec.s_ell)
    lam = check_A2_ell(a, spec.level, n)
    if variant == "vector" and not np.any(np.abs(z) > 0):
        logger.warning("omega=%g: Fourier vector vanishes, no dimension claim", omega)
        return DimensionReport(omega, -math.inf, lam, None, "degenerate", n, variant, -math.inf,
                               "zero Fourier vector")
    if omega == 0:
        mean = _suspension_mean(a, spec.level, z, depth)
        if variant == "matrix" or (mean is not None and abs(mean) > 1e-12 * float(np.abs(z).max())):
            return dimension_from_exponents(omega, lam, lam, n, variant, lam)
    xi = omega_point(a_ell, omega, spec.s_ell, n, seed)
    est = chi_estimate(a_ell, xi, n, z if variant == "vector" else None)
    return dimension_from_exponents(omega, est.chi, lam, n, variant, est.tail_max)


@dataclass(frozen=True)
class GRFit:
    d_hat: float
    slope: float
    intercept: float
    r_value: float
    R: tuple[float, ...]
    G: tuple[float, ...]
    failed: bool = False
    taper: str = "fejer"


def dim_via_GR(
    a: DirectiveSequence,
    spec: SuspensionSpec,
    f: CylFunction,
    omega: float,
    R_list: Sequence[float],
    samples: int,
    seed: Optional[int] = None,
    cap: int = DEFAULT_LENGTH_CAP,
    taper: str = "hann",
) -> GRFit:
    """
    1 - slope of log G_R against log R; failed=True when some G_R is not positive.

    The default Hann taper keeps leakage from spectral mass away from omega
    (atoms included) out of the slope, which otherwise flattens it toward -1.
    """
    R_list = [float(r) for r in R_list]
    if len(R_list) < 3 or any(r2 <= r1 for r1, r2 in zip(R_list, R_list[1:])):
        raise PreconditionError("R_list must be increasing with at least 3 points")
    _check_gr_inputs(spec, f, R_list[0], samples, taper)
    a_ell = a.shift(spec.level)
    sw = _sampling_word(a_ell, spec.s_ell, R_list[-1], cap)
    G = [
        _gr_from_word(sw, spec.s_ell, f, omega, R, samples, np.random.default_rng(task_seed(seed, i)), taper)
        for i, R in enumerate(R_list)
    ]
    if any(not (g > 0) for g in G):
        logger.warning("omega=%g: non-positive G_R sample, slope not fitted", omega)
        return GRFit(math.nan, math.nan, math.nan, math.nan, tuple(R_list), tuple(G), failed=True, taper=taper)
    fit = stats.linregress(np.log(R_list), np.log(G))
    return GRFit(1.0 - fit.slope, fit.slope, fit.intercept, fit.rvalue, tuple(R_list), tuple(G), taper=taper)


def holder_from_GR(C1: float, alpha: float, R: float) -> tuple[float, float]:
    """r = 1/(2R), bound C1 pi^2 2^alpha r^alpha on sigma_f(B_r(omega))."""
    if alpha < 0:
        raise PreconditionError(f"alpha must be >= 0, got {alpha}")
    if R <= 0:
        raise PreconditionError(f"R must be positive, got {R}")
    r = 1.0 / (2.0 * R)
    return r, C1 * math.pi ** 2 * 2.0 ** alpha * r ** alpha


def c3_constant(C2: float, alpha: float, f_norm2: float) -> float:
    """C2 (1 + 2 / (pi^2 (2 - alpha))) + ||f||_2^2 / pi^2 for alpha < 2; C2 (1 + 2/pi^2) + ||f||_2^2 / pi^2 at alpha = 2."""
    tail = f_norm2 ** 2 / math.pi ** 2
    if alpha == 2:
        return C2 * (1.0 + 2.0 / math.pi ** 2) + tail
    return C2 * (1.0 + 2.0 / (math.pi ** 2 * (2.0 - alpha))) + tail


def GR_from_holder(C2: float, alpha: float, r0: float, R: float, f_norm2: float) -> float:
    """
    Upper bound on G_R(f, omega) from a local bound sigma_f(B_r(omega)) <= C2 r^alpha
    for r <= r0: C3 R^{1-alpha} for 0 < alpha < 2, C3~ R^{-1} ln R at alpha = 2.
    """
    if not 0 < alpha <= 2:
        raise PreconditionError(f"alpha must lie in (0, 2], got {alpha}")
    if r0 <= 0:
        raise PreconditionError(f"r0 must be positive, got {r0}")
    C3 = c3_constant(C2, alpha, f_norm2)
    if alpha == 2:
        threshold = max(1.0 / r0, math.exp(r0 ** -2))
        if R < threshold:
            raise PreconditionError(f"R={R} below the validity threshold {threshold}")
        return C3 * math.log(R) / R
    threshold = r0 ** (-2.0 / (2.0 - alpha))
    if R < threshold:
        raise PreconditionError(f"R={R} below the validity threshold {threshold}")
    return C3 * R ** (1.0 - alpha)


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------

def dimension_scan(
    a: DirectiveSequence,
    spec: SuspensionSpec,
    f: CylFunction,
    omegas: Sequence[float],
    n: int,
    seed: Optional[int] = None,
    variant: str = "vector",
    threads: Optional[int] = None,
    depth: int = 40,
) -> List[DimensionReport]:
    def one(i: int, omega: float) -> DimensionReport:
        return dim_via_cocycle(a, spec, f, omega, n, task_seed(seed, i), variant, depth)

    return ordered_map(one, list(omegas), threads)


@dataclass(frozen=True)
class ScanRow:
    omega: float
    chi: float
    tail_max: float
    margin: float


@dataclass
class SingularityReport:
    half_log_theta: float
    margin: float
    n: int
    rows: List[ScanRow] = field(default_factory=list)
    excluded: int = 0
    fraction_below: float = 0.0
    det_witness: float = 0.0
    verdict: str = ""
    policy: str = (
        "finite-n evidence only; the 95% fraction and the margin are estimator policy"
    )


def singularity_scan(
    zeta: Substitution,
    s: Sequence[float],
    omega_grid: Sequence[float],
    n: int,
    margin: float = 0.01,
    seed: Optional[int] = 0,
    threads: Optional[int] = None,
    witnesses: int = 16,
) -> SingularityReport:
    """
    chi_hat(omega) along omega s for the periodic sequence of zeta, compared with
    half of log theta_1; a fraction of the grid strictly below supports
    purely singular spectrum.
    """
    pf = perron_frobenius(zeta)
    half = 0.5 * math.log(pf.theta1)
    a = DirectiveSequence.periodic([zeta])
    grid = [float(w) for w in omega_grid if w != 0]
    excluded = len(omega_grid) - len(grid)

    def one(i: int, omega: float) -> ScanRow:
        xi = omega_point(a, omega, s, n, task_seed(seed, i))
        est = chi_estimate(a, xi, n)
        return ScanRow(omega, est.chi, est.tail_max, half - est.chi)

    rows = ordered_map(one, grid, threads)
    below = sum(1 for r in rows if r.chi < half - margin)
    fraction = below / len(rows) if rows else 0.0

    rng = np.random.default_rng(task_seed(seed, len(grid)))
    det_witness = max(det_modulus(zeta, rng.uniform(0, 1, zeta.m)) for _ in range(witnesses))

    if fraction >= 0.95 and det_witness > 1e-12:
        verdict = "consistent with purely singular spectrum"
    else:
        verdict = "not consistent with singular-via-this-criterion"
    logger.info("singularity scan: %d/%d below threshold, verdict: %s", below, len(rows), verdict)
    return SingularityReport(
        half_log_theta=half,
        margin=margin,
        n=n,
        rows=rows,
        excluded=excluded,
        fraction_below=fraction,
        det_witness=det_witness,
        verdict=verdict,
    )


@dataclass
class GenericScanReport:
    omega: float
    j: int
    chi_matrix: float
    chis: List[Optional[float]]
    depressed: List[int]
    clusters: int


def generic_vector_scan(
    a: DirectiveSequence,
    spec: SuspensionSpec,
    omega: float,
    j: int,
    c_grid: Sequence[complex],
    n: int,
    b: Optional[Sequence[complex]] = None,
    tol: float = 0.05,
    seed: Optional[int] = 0,
) -> GenericScanReport:
    """
    Vector exponents of z = Gamma_omega(b + c e_j) for c on a grid, against
    the matrix exponent at the same point. Depressed grid points are those
    more than tol below; they should form at most one cluster.
    """
    m = a.m
    if j < 1 or j > m:
        raise PreconditionError(f"coordinate index {j} outside 1..{m}")
    prod = omega * spec.s_ell
    if np.any(np.abs(prod - np.round(prod)) < 1e-12):
        raise PreconditionError(f"omega={omega} is resonant: omega s_a is an integer for some a")
    base = np.zeros(m, dtype=complex) if b is None else np.asarray(b, dtype=complex)
    a_ell = a.shift(spec.level)
    xi = omega_point(a_ell, omega, spec.s_ell, n, task_seed(seed, 0))
    chi_mat = chi_estimate(a_ell, xi, n).chi

    chis: List[Optional[float]] = []
    for c in c_grid:
        vec = base.copy()
        vec[j - 1] += c
        z = gamma_omega(vec, spec.s_ell, omega)
        if not np.any(np.abs(z) > 0):
            chis.append(None)
            continue
        chis.append(chi_estimate(a_ell, xi, n, z).chi)

    depressed = [i for i, c in enumerate(chis) if c is not None and c < chi_mat - tol]
    clusters = sum(1 for k, i in enumerate(depressed) if k == 0 or depressed[k - 1] != i - 1)
    return GenericScanReport(omega, j, chi_mat, chis, depressed, clusters)


@dataclass(frozen=True)
class LevelShiftCheck:
    chi_shift: float
    chi_inverse: float

    @property
    def difference(self) -> float:
        return abs(self.chi_shift - self.chi_inverse)


def level_shift_crosscheck(
    a: DirectiveSequence,
    spec: SuspensionSpec,
    f: CylFunction,
    omega: float,
    n: int,
    seed: Optional[int] = 0,
) -> Optional[LevelShiftCheck]:
    """
    Compare the sigma^l route with the inverse route
    M_{sigma^l a}(S^[l]^t xi, n) z = M_a(xi, l + n) M_a(xi, l)^{-1} z.
    None when l = 0 or S^[l] is singular.
    """
    ell = spec.level
    if ell == 0:
        return None
    S_ell = telescope_matrix(a, ell)
    if round(float(np.linalg.det(S_ell.astype(float)))) == 0:
        return None
    z = f.fourier(omega, spec.s_ell)
    if not np.any(np.abs(z) > 0):
        return None
    xi0 = omega_point(a, omega, spec.s, ell + n, seed)
    pt = xi0
    shifted = a
    for _ in range(ell):
        shifted, pt = skew_step(shifted, pt)
    chi_shift = chi_estimate(a.shift(ell), pt, n, z).chi

    M_ell = cocycle_product(a, xi0, ell).true_value
    z_back = np.linalg.solve(M_ell, z)
    est = chi_estimate(a, xi0, ell + n, z_back)
    chi_inv = ((ell + n) * est.chi + math.log(np.abs(z_back).max()) - math.log(np.abs(z).max())) / n
    return LevelShiftCheck(chi_shift, chi_inv)
