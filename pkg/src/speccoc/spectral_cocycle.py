"""
spectral_cocycle.py

The spectral cocycle of a substitution and its products along torus orbits:
- TorusPoint: exact rational points of T^m (integer numerators / common denominator)
- fourier_matrix: M_zeta(xi), the matrix of trigonometric polynomials
- skew_step / cocycle_product: M_a(xi, n) with per-step rescaling
- chi_estimate: finite-n pointwise upper Lyapunov exponents (matrix / vector)
- det_modulus, self_similar_product (high-precision theta_1 scaling via mpmath)

Norm convention: ||M|| is the maximal absolute row sum, which is the 1-norm
of M^t, so that ||M_zeta(0)|| = ||S_zeta||_1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence

import mpmath
import numpy as np

from .errors import NumericalFailure, PreconditionError
from .sadic import DirectiveSequence
from .substitution_core import Substitution, is_primitive, matrix_norm, substitution_matrix

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
# a step that shrinks the product below this fraction of ||M_k|| has hit zero
# up to rounding (e.g. Thue-Morse at (1/2, 1/2))
ZERO_TOL = 1e-13


# ---------------------------------------------------------------------------
# Torus points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorusPoint:
    """xi = numerators / denom mod Z^m, numerators reduced to [0, denom)."""

    numerators: tuple[int, ...]
    denom: int

    def __post_init__(self) -> None:
        if self.denom < 1:
            raise PreconditionError(f"torus denominator must be >= 1, got {self.denom}")
        object.__setattr__(
            self, "numerators", tuple(int(x) % self.denom for x in self.numerators)
        )

    @property
    def m(self) -> int:
        return len(self.numerators)

    @property
    def xi(self) -> np.ndarray:
        # int / int true division is correctly rounded for arbitrary sizes
        return np.array([x / self.denom for x in self.numerators], dtype=float)

    @property
    def is_zero(self) -> bool:
        return not any(self.numerators)

    @classmethod
    def zero(cls, m: int) -> "TorusPoint":
        return cls((0,) * m, 1)

    @classmethod
    def from_reals(cls, values: Sequence[float]) -> "TorusPoint":
        """Exact binary value of each double, reduced mod 1."""
        ratios = [float(v).as_integer_ratio() for v in values]
        denom = max(q for _, q in ratios)  # all powers of two
        return cls(tuple(p * (denom // q) for p, q in ratios), denom)

    def apply_transpose(self, S: np.ndarray) -> "TorusPoint":
        """S^t xi mod Z^m, exact."""
        m = self.m
        cols = S.tolist()
        out = tuple(
            sum(int(cols[j][i]) * self.numerators[j] for j in range(m)) for i in range(m)
        )
        return TorusPoint(out, self.denom)

    def __repr__(self) -> str:
        vals = ", ".join(f"{v:.6g}" for v in self.xi)
        return f"TorusPoint([{vals}], denom_bits={self.denom.bit_length() - 1})"


def as_torus_point(xi: TorusPoint | Sequence[float]) -> TorusPoint:
    if isinstance(xi, TorusPoint):
        return xi
    return TorusPoint.from_reals(list(xi))


def _random_bits(bits: int, seed: Optional[int | np.random.SeedSequence]) -> int:
    if bits <= 0:
        return 0
    rng = np.random.default_rng(seed)
    nbytes = (bits + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - bits)


def torus_line_point(
    omega: float,
    s: Sequence[float],
    tail_bits: int = 0,
    seed: Optional[int | np.random.SeedSequence] = None,
) -> TorusPoint:
    """
    omega * s mod Z^m, computed exactly.

    With tail_bits > 0, omega is first completed below 2^-60 by tail_bits
    seeded random binary digits, so that the orbit under integer expanding
    maps stays generic for as many steps as the tail can feed.
    """
    s = [float(x) for x in s]
    p, q = float(omega).as_integer_ratio()
    e = q.bit_length() - 1
    base = max(e, 60)
    w_num = p << (base - e)
    w_num = (w_num << tail_bits) + _random_bits(tail_bits, seed)
    w_den = 1 << (base + tail_bits)

    ratios = [x.as_integer_ratio() for x in s]
    s_den = max(d for _, d in ratios)
    s_num = [n * (s_den // d) for n, d in ratios]
    return TorusPoint(tuple(w_num * n for n in s_num), w_den * s_den)


def generic_torus_point(
    xi: Sequence[float],
    tail_bits: int,
    seed: Optional[int | np.random.SeedSequence] = None,
) -> TorusPoint:
    """Each coordinate completed below 2^-60 by tail_bits seeded random bits."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ratios = [float(x).as_integer_ratio() for x in xi]
    width = max([60] + [q.bit_length() - 1 for _, q in ratios])
    out = []
    for (p, q), child in zip(ratios, seq.spawn(len(ratios))):
        num = p << (width - (q.bit_length() - 1))
        out.append((num << tail_bits) + _random_bits(tail_bits, child))
    return TorusPoint(tuple(out), 1 << (width + tail_bits))


def required_tail_bits(a: DirectiveSequence, n: int) -> int:
    """Bits of genericity consumed by n exact steps: sum log2 ||S_k||_1 + 64."""
    total = sum(math.log2(matrix_norm(a.matrix(k))) for k in range(1, n + 1))
    return int(math.ceil(total)) + 64


def omega_point(
    a: DirectiveSequence,
    omega: float,
    s: Sequence[float],
    n: int,
    seed: Optional[int | np.random.SeedSequence] = None,
) -> TorusPoint:
    """omega s mod Z^m, generic for n steps of a; omega = 0 stays exactly at 0."""
    if omega == 0:
        return TorusPoint.zero(len(s))
    return torus_line_point(omega, s, required_tail_bits(a, n), seed)


# ---------------------------------------------------------------------------
# The matrix M_zeta(xi)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierMatrix:
    entries: np.ndarray
    zeta: Substitution
    xi: TorusPoint


def _fourier_entries(zeta: Substitution, xi_vals: np.ndarray) -> np.ndarray:
    m = zeta.m
    M = np.zeros((m, m), dtype=complex)
    for b, img in enumerate(zeta.images):
        idx = np.asarray(img, dtype=np.int64) - 1
        prefix = np.concatenate(([0.0], np.cumsum(xi_vals[idx])[:-1]))
        np.add.at(M[b], idx, np.exp(-1j * TWO_PI * prefix))
    return M


def fourier_matrix(zeta: Substitution, xi: TorusPoint | Sequence[float]) -> FourierMatrix:
    """
    M(b, c) = sum over positions j of c in zeta(b) of
    exp(-2 pi i (xi summed over the letters of zeta(b) before j)).
    """
    pt = as_torus_point(xi)
    if pt.m != zeta.m:
        raise PreconditionError(f"torus point has {pt.m} coordinates, substitution has {zeta.m} letters")
    return FourierMatrix(_fourier_entries(zeta, pt.xi), zeta, pt)


def cocycle_norm(M: np.ndarray) -> float:
    """Maximal absolute row sum."""
    return float(np.abs(M).sum(axis=1).max())


def det_modulus(zeta: Substitution, xi: TorusPoint | Sequence[float]) -> float:
    return float(abs(np.linalg.det(fourier_matrix(zeta, xi).entries)))


def skew_step(a: DirectiveSequence, xi: TorusPoint | Sequence[float]) -> tuple[DirectiveSequence, TorusPoint]:
    """(sigma a, S_{zeta_1}^t xi mod Z^m)."""
    return a.shift(1), as_torus_point(xi).apply_transpose(a.matrix(1))


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------

@dataclass
class CocycleProduct:
    """
    rescaled_matrix * exp(log_norm_accum) is M_a(xi0, n). log_partials[k-1]
    is log ||M_a(xi0, k)||; -inf once the product has become the zero matrix.
    """

    n: int
    rescaled_matrix: np.ndarray
    log_norm_accum: float
    xi0: TorusPoint
    log_partials: List[float] = field(default_factory=list)
    degenerate: bool = False

    @property
    def true_value(self) -> np.ndarray:
        if self.degenerate:
            return np.zeros_like(self.rescaled_matrix)
        return self.rescaled_matrix * math.exp(self.log_norm_accum)


def _orbit(a: DirectiveSequence, xi: TorusPoint, n: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (k, M_{zeta_k}(xi_{k-1})) for k = 1..n along the exact torus orbit."""
    point = xi
    for k in range(1, n + 1):
        zeta = a.term(k)
        yield k, _fourier_entries(zeta, point.xi)
        point = point.apply_transpose(a.matrix(k))


def _rescaled_products(steps: Iterator[tuple[int, np.ndarray]], m: int, z: Optional[np.ndarray] = None):
    """
    Left-multiply the step matrices (and optionally track P z), dividing by
    the norm after every step. Yields (k, P, accum, w, w_accum).
    """
    P = np.identity(m, dtype=complex)
    accum = 0.0
    w = None if z is None else z / np.abs(z).max()
    w_accum = 0.0
    dead = False
    w_dead = False
    for k, M in steps:
        floor = ZERO_TOL * cocycle_norm(M)
        if not dead:
            P = M @ P
            nrm = cocycle_norm(P)
            if nrm <= floor:
                dead = True
                accum = -math.inf
                logger.debug("cocycle product vanished at step %d", k)
            else:
                P = P / nrm
                accum += math.log(nrm)
        if w is not None and not w_dead:
            w = M @ w
            wn = float(np.abs(w).max())
            if wn <= floor:
                w_dead = True
                w_accum = -math.inf
            else:
                w = w / wn
                w_accum += math.log(wn)
        yield k, P, accum, w, w_accum


def cocycle_product(a: DirectiveSequence, xi: TorusPoint | Sequence[float], n: int) -> CocycleProduct:
    """M_{zeta_n}(S^t_{zeta^[n-1]} xi) ... M_{zeta_1}(xi), rescaled."""
    if n < 1:
        raise PreconditionError(f"cocycle_product needs n >= 1, got {n}")
    pt = as_torus_point(xi)
    if pt.m != a.m:
        raise PreconditionError(f"torus point has {pt.m} coordinates, sequence has {a.m} letters")
    partials: List[float] = []
    P, accum = None, 0.0
    for _, P, accum, _, _ in _rescaled_products(_orbit(a, pt, n), a.m):
        partials.append(accum)
    degenerate = math.isinf(accum)
    if degenerate:
        P = np.zeros((a.m, a.m), dtype=complex)
    return CocycleProduct(n, P, accum, pt, partials, degenerate)


# ---------------------------------------------------------------------------
# Exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentEstimate:
    chi: float
    n: int
    partials: tuple[float, ...]
    variant: str  # "matrix" | "vector" | "base"
    norm: str
    tail_max: float
    degenerate: bool = False

    @property
    def tail_spread(self) -> float:
        """Spread of the partials over the tail window; 0 for a settled estimate."""
        k0 = _tail_start(self.n)
        tail = [p for p in self.partials[k0:] if math.isfinite(p)]
        return max(tail) - min(tail) if tail else math.inf


def _tail_start(n: int) -> int:
    return int(math.floor(0.8 * n))


def _tail_max(partials: Sequence[float]) -> float:
    return max(partials[_tail_start(len(partials)):])


def _estimate_from_steps(steps, m: int, n: int, z: Optional[np.ndarray], norm: str) -> ExponentEstimate:
    if z is not None:
        z = np.asarray(z, dtype=complex)
        if z.shape != (m,):
            raise PreconditionError(f"vector z must have {m} entries, got shape {z.shape}")
        z_norm = float(np.abs(z).max())
        if z_norm == 0.0:
            raise PreconditionError("vector z must be nonzero")
    if norm not in ("row", "column"):
        raise PreconditionError(f"norm must be 'row' or 'column', got {norm!r}")

    partials: List[float] = []
    for k, P, accum, w, w_accum in _rescaled_products(steps, m, z):
        if z is not None:
            # w already carries the 1/||z|| normalization
            partials.append(w_accum / k)
        elif norm == "row" or math.isinf(accum):
            partials.append(accum / k)
        else:
            partials.append((accum + math.log(float(np.abs(P).sum(axis=0).max()))) / k)

    chi = partials[-1]
    variant = "vector" if z is not None else "matrix"
    return ExponentEstimate(
        chi=chi,
        n=n,
        partials=tuple(partials),
        variant=variant,
        norm="sup" if z is not None else norm,
        tail_max=_tail_max(partials),
        degenerate=math.isinf(chi),
    )


def chi_estimate(
    a: DirectiveSequence,
    xi: TorusPoint | Sequence[float],
    n: int,
    z: Optional[Sequence[complex]] = None,
    norm: str = "row",
) -> ExponentEstimate:
    """
    Finite-n exponent along the orbit of xi.

    Matrix variant: (1/n) log ||M_a(xi, n)||. Vector variant (z given):
    (1/n) log(||M_a(xi, n) z||_inf / ||z||_inf). tail_max is the largest
    partial over the last 20% of steps, a finite-n proxy for the limsup.
    """
    if n < 1:
        raise PreconditionError(f"chi_estimate needs n >= 1, got {n}")
    pt = as_torus_point(xi)
    if pt.m != a.m:
        raise PreconditionError(f"torus point has {pt.m} coordinates, sequence has {a.m} letters")
    z_arr = None if z is None else np.asarray(z, dtype=complex)
    est = _estimate_from_steps(_orbit(a, pt, n), a.m, n, z_arr, norm)
    if est.degenerate:
        logger.warning("cocycle product became zero before step %d; exponent is -inf", n)
    return est


# ---------------------------------------------------------------------------
# Self-similar flows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelfSimilarData:
    theta1: mpmath.mpf
    s: tuple[mpmath.mpf, ...]
    prec: int

    @property
    def s_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.s])


def self_similar_roof(zeta: Substitution, prec: int = 128, normalize: str = "min") -> SelfSimilarData:
    """
    theta_1 and the positive eigenvector s of S^t at the given binary
    precision. normalize="min" scales the smallest entry to 1 (Fibonacci
    gives s = (phi, 1)); normalize="sum" scales to unit sum.
    """
    if not is_primitive(zeta):
        raise PreconditionError("self-similar roof requested for a non-primitive substitution")
    if normalize not in ("min", "sum"):
        raise PreconditionError(f"normalize must be 'min' or 'sum', got {normalize!r}")
    ctx = mpmath.mp.clone()
    ctx.prec = prec
    St = substitution_matrix(zeta).T.tolist()
    E, ER = ctx.eig(ctx.matrix(St))
    idx = max(range(len(E)), key=lambda i: ctx.re(E[i]))
    theta1 = ctx.re(E[idx])
    vec = [ctx.re(ER[i, idx]) for i in range(zeta.m)]
    if vec[0] < 0:
        vec = [-x for x in vec]
    scale = min(vec) if normalize == "min" else ctx.fsum(vec)
    s = tuple(x / scale for x in vec)
    if any(x <= 0 for x in s):
        raise NumericalFailure("Perron-Frobenius eigenvector of S^t is not strictly positive")
    return SelfSimilarData(theta1=theta1, s=s, prec=prec)


def _torus_from_mpf(values: Sequence[mpmath.mpf]) -> TorusPoint:
    pairs = []
    for v in values:
        man, exp = v.man_exp if v != 0 else (0, 0)
        man = int(man)
        if exp >= 0:
            pairs.append((man << exp, 1))
        else:
            pairs.append((man, 1 << (-exp)))
    denom = max(q for _, q in pairs)
    return TorusPoint(tuple(p * (denom // q) for p, q in pairs), denom)


def self_similar_product(
    zeta: Substitution,
    omega: float,
    n: int,
    normalize: str = "min",
    z: Optional[Sequence[complex]] = None,
) -> tuple[CocycleProduct, ExponentEstimate]:
    """
    M_zeta(theta_1^{n-1} omega s) ... M_zeta(omega s) with s the positive
    eigenvector of S^t; the points theta_1^k omega s mod Z^m are computed by
    scalar multiplication in mpmath at n log2 ||S||_1 + 64 bits, which equals
    the torus-orbit form because S^t s = theta_1 s.
    """
    if n < 1:
        raise PreconditionError(f"self_similar_product needs n >= 1, got {n}")
    S = substitution_matrix(zeta)
    prec = int(math.ceil(n * math.log2(max(matrix_norm(S), 2)))) + 64
    data = self_similar_roof(zeta, prec=prec, normalize=normalize)

    ctx = mpmath.mp.clone()
    ctx.prec = prec
    w = ctx.mpf(omega)
    x = [w * sc for sc in data.s]
    x0 = [xi - ctx.floor(xi) for xi in x]

    def steps():
        cur = list(x)
        for k in range(1, n + 1):
            frac = np.array([float(c - ctx.floor(c)) for c in cur])
            yield k, _fourier_entries(zeta, frac)
            cur = [c * data.theta1 for c in cur]

    m = zeta.m
    partials: List[float] = []
    P, accum = None, 0.0
    for _, P, accum, _, _ in _rescaled_products(steps(), m):
        partials.append(accum)
    degenerate = math.isinf(accum)
    if degenerate:
        P = np.zeros((m, m), dtype=complex)
    product = CocycleProduct(n, P, accum, _torus_from_mpf(x0), partials, degenerate)
    z_arr = None if z is None else np.asarray(z, dtype=complex)
    estimate = _estimate_from_steps(steps(), m, n, z_arr, "row")
    return product, estimate
