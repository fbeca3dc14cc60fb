"""
sadic.py

Directive sequences of substitutions and what is computed from them:
- DirectiveSequence: periodic, explicit or generated (Rauzy-Veech) sources,
  with a memoized term cache shared by shifted views
- telescoping: zeta^[n] = zeta_1 o ... o zeta_n and the exact matrices S^[n]
- finite-scale checks of the positivity / growth conditions
- measure vectors by cone contraction
- prefix decomposition of zeta^[n](b) through the composition tree
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numpy as np

from .errors import NumericalFailure, PreconditionError
from .substitution_core import (
    DEFAULT_LENGTH_CAP,
    Substitution,
    Word,
    compose,
    matrix_norm,
    substitution_matrix,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Directive sequences
# ---------------------------------------------------------------------------

class _TermCache:
    """
    Memoized terms zeta_1, zeta_2, ... of one underlying sequence.

    Writers extend the cache under a lock; a term, once stored, is never
    replaced, so readers of already-computed indices need no lock.
    """

    def __init__(
        self,
        m: int,
        kind: str,
        period: Optional[Sequence[Substitution]] = None,
        finite: Optional[Sequence[Substitution]] = None,
        generator: Optional[Iterator[Substitution]] = None,
    ) -> None:
        self.m = m
        self.kind = kind
        self._period = tuple(period) if period is not None else None
        self._finite = tuple(finite) if finite is not None else None
        self._generator = generator
        self._terms: List[Substitution] = []
        self._matrices: List[np.ndarray] = []
        # reentrant: matrix() fills through get() while holding it
        self._lock = threading.RLock()
        fixed = self._period if self._period is not None else self._finite
        self._fixed_matrices: Optional[tuple] = (
            tuple(substitution_matrix(z) for z in fixed) if fixed is not None else None
        )

    def get(self, index: int) -> Substitution:
        """0-based access."""
        if self._period is not None:
            return self._period[index % len(self._period)]
        if self._finite is not None:
            if index >= len(self._finite):
                raise PreconditionError(
                    f"explicit directive sequence exhausted: term {index + 1} requested, "
                    f"{len(self._finite)} available"
                )
            return self._finite[index]
        if index < len(self._terms):
            return self._terms[index]
        with self._lock:
            while len(self._terms) <= index:
                try:
                    zeta = next(self._generator)
                except StopIteration:
                    raise PreconditionError(
                        f"generated directive sequence ended after {len(self._terms)} terms"
                    ) from None
                if zeta.m != self.m:
                    raise PreconditionError(
                        f"generated term {len(self._terms) + 1} has {zeta.m} letters, expected {self.m}"
                    )
                self._terms.append(zeta)
            return self._terms[index]

    def matrix(self, index: int) -> np.ndarray:
        if self._fixed_matrices is not None:
            if self._period is not None:
                return self._fixed_matrices[index % len(self._fixed_matrices)]
            self.get(index)  # raises when the explicit sequence is exhausted
            return self._fixed_matrices[index]
        if index < len(self._matrices):
            return self._matrices[index]
        with self._lock:
            # filled strictly in order: every stored slot is a finished matrix
            while len(self._matrices) <= index:
                self._matrices.append(substitution_matrix(self.get(len(self._matrices))))
            return self._matrices[index]


class DirectiveSequence:
    """
    a = (zeta_n)_{n >= 1}, viewed from some offset into a shared term cache.

    Terms are 1-based: a.term(1) is zeta_1. a.shift(k) is sigma^k a and
    reuses the same cache, so generated terms are computed once.
    """

    def __init__(self, cache: _TermCache, offset: int = 0, recognizability_asserted: bool = False) -> None:
        self._cache = cache
        self.offset = offset
        self.recognizability_asserted = recognizability_asserted

    # -- constructors -----------------------------------------------------

    @classmethod
    def periodic(cls, subs: Sequence[Substitution], recognizability_asserted: bool = False) -> "DirectiveSequence":
        subs = list(subs)
        if not subs:
            raise PreconditionError("periodic directive sequence needs at least one substitution")
        m = _common_alphabet(subs)
        return cls(_TermCache(m, "periodic", period=subs), 0, recognizability_asserted)

    @classmethod
    def explicit(cls, subs: Sequence[Substitution], recognizability_asserted: bool = False) -> "DirectiveSequence":
        subs = list(subs)
        if not subs:
            raise PreconditionError("explicit directive sequence needs at least one substitution")
        m = _common_alphabet(subs)
        return cls(_TermCache(m, "explicit", finite=subs), 0, recognizability_asserted)

    @classmethod
    def generated(
        cls,
        m: int,
        terms: Iterator[Substitution],
        kind: str = "rauzy",
        recognizability_asserted: bool = False,
    ) -> "DirectiveSequence":
        return cls(_TermCache(m, kind, generator=iter(terms)), 0, recognizability_asserted)

    # -- access -----------------------------------------------------------

    @property
    def m(self) -> int:
        return self._cache.m

    @property
    def kind(self) -> str:
        return self._cache.kind

    def term(self, n: int) -> Substitution:
        if n < 1:
            raise PreconditionError(f"directive terms are 1-based, got n={n}")
        return self._cache.get(self.offset + n - 1)

    def matrix(self, n: int) -> np.ndarray:
        """S_n = S_{zeta_n} (int64)."""
        if n < 1:
            raise PreconditionError(f"directive terms are 1-based, got n={n}")
        return self._cache.matrix(self.offset + n - 1)

    def terms(self, n: int) -> List[Substitution]:
        return [self.term(k) for k in range(1, n + 1)]

    def shift(self, k: int = 1) -> "DirectiveSequence":
        if k < 0:
            raise PreconditionError(f"shift must be nonnegative, got {k}")
        return DirectiveSequence(self._cache, self.offset + k, self.recognizability_asserted)

    def __repr__(self) -> str:
        return f"DirectiveSequence(kind={self.kind!r}, m={self.m}, offset={self.offset})"


def _common_alphabet(subs: Sequence[Substitution]) -> int:
    sizes = {z.m for z in subs}
    if len(sizes) != 1:
        raise PreconditionError(f"substitutions do not share an alphabet: sizes {sorted(sizes)}")
    return sizes.pop()


# ---------------------------------------------------------------------------
# Telescoping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Telescope:
    n: int
    zeta_n: Substitution
    S_n: np.ndarray


def iter_telescopes(a: DirectiveSequence, n: int, cap: int = DEFAULT_LENGTH_CAP) -> Iterator[Telescope]:
    """Yield Telescope(1), ..., Telescope(n); each extends the previous by one composition."""
    if n < 1:
        raise PreconditionError(f"telescope depth must be >= 1, got {n}")
    zeta = a.term(1)
    yield Telescope(1, zeta, substitution_matrix(zeta))
    for k in range(2, n + 1):
        zeta = compose(zeta, a.term(k), cap=cap)
        yield Telescope(k, zeta, substitution_matrix(zeta))


def telescope(a: DirectiveSequence, n: int, cap: int = DEFAULT_LENGTH_CAP) -> Telescope:
    last = None
    for last in iter_telescopes(a, n, cap):
        pass
    logger.debug("telescope depth %d, max image length %d", n, max(last.zeta_n.lengths))
    return last


def iter_telescope_matrices(a: DirectiveSequence, n: int, start: int = 0) -> Iterator[np.ndarray]:
    """
    Yield the exact products S_{start+1} ... S_{start+k} for k = 1..n.

    Entries are Python integers (object arrays), so there is no overflow
    and no word-length cap.
    """
    if n < 1:
        raise PreconditionError(f"telescope depth must be >= 1, got {n}")
    P = np.identity(a.m, dtype=np.int64).astype(object)
    for k in range(start + 1, start + n + 1):
        P = P.dot(a.matrix(k).astype(object))
        yield P


def telescope_matrix(a: DirectiveSequence, n: int, start: int = 0) -> np.ndarray:
    """S^[n] (or S_{start+1} ... S_{start+n}) as an exact object array; n = 0 gives I."""
    if n == 0:
        return np.identity(a.m, dtype=np.int64).astype(object)
    P = None
    for P in iter_telescope_matrices(a, n, start):
        pass
    return P


def expand(a: DirectiveSequence, n: int, b: int, cap: int = DEFAULT_LENGTH_CAP) -> Word:
    """zeta^[n](b); n = 0 gives the one-letter word b."""
    if b < 1 or b > a.m:
        raise PreconditionError(f"letter {b} outside alphabet 1..{a.m}")
    if n == 0:
        return (b,)
    return telescope(a, n, cap).zeta_n.image(b)


# ---------------------------------------------------------------------------
# Exponents and conditions
# ---------------------------------------------------------------------------

def _log_norm(P: np.ndarray) -> float:
    norm = matrix_norm(P)
    if norm <= 0:
        return -math.inf
    return math.log(norm)


def lambda_hat(a: DirectiveSequence, n: int) -> float:
    """(1/n) log ||S^[n]||_1, from the exact integer product."""
    if n < 1:
        raise PreconditionError(f"lambda_hat needs n >= 1, got {n}")
    return _log_norm(telescope_matrix(a, n)) / n


def lambda_partials(a: DirectiveSequence, n: int) -> List[float]:
    """[(1/k) log ||S^[k]||_1 for k = 1..n]."""
    return [_log_norm(P) / k for k, P in enumerate(iter_telescope_matrices(a, n), start=1)]


def check_A2_ell(a: DirectiveSequence, ell: int, n: int) -> float:
    """(1/n) log ||S_{ell+1} ... S_{ell+n}||_1."""
    if n < 1 or ell < 0:
        raise PreconditionError(f"need n >= 1 and ell >= 0, got n={n}, ell={ell}")
    return _log_norm(telescope_matrix(a, n, start=ell)) / n


def check_A3(a: DirectiveSequence, n: int) -> float:
    """(1/n) log(1 + ||S_n||_1); the caller compares against its threshold."""
    if n < 1:
        raise PreconditionError(f"check_A3 needs n >= 1, got {n}")
    return math.log(1 + matrix_norm(a.matrix(n))) / n


def _strictly_positive_product(mats: Sequence[np.ndarray]) -> bool:
    m = mats[0].shape[0]
    P = np.identity(m, dtype=bool)
    for M in mats:
        P = (P.astype(np.int64) @ (M > 0).astype(np.int64)) > 0
    return bool(P.all())


def positive_block(a: DirectiveSequence, start: int, stop: int) -> Optional[tuple[int, int]]:
    """
    First (i, j) with start <= i <= j <= stop and S_i ... S_j > 0 entrywise,
    scanning i upward and, for each i, the shortest j. None if there is none.
    """
    if start < 1 or stop < start:
        raise PreconditionError(f"invalid window [{start}, {stop}]")
    m = a.m
    for i in range(start, stop + 1):
        P = np.identity(m, dtype=np.int64)
        for j in range(i, stop + 1):
            P = ((P @ (a.matrix(j) > 0).astype(np.int64)) > 0).astype(np.int64)
            if P.all():
                return i, j
    return None


def check_A1prime(a: DirectiveSequence, q: Sequence[Substitution], n: int, eps: float) -> bool:
    """
    True iff the block q occurs consecutively among positions
    floor(n(1 - eps)) + 1 ... n of the directive sequence.
    """
    q = list(q)
    if not q:
        raise PreconditionError("block q must be nonempty")
    if not 0 < eps < 1:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}")
    if any(z.m != a.m for z in q):
        raise PreconditionError("block q uses a different alphabet than the sequence")
    if not _strictly_positive_product([substitution_matrix(z) for z in q]):
        raise PreconditionError("the matrix of block q is not strictly positive")
    lo = math.floor(n * (1 - eps)) + 1
    L = len(q)
    for i in range(lo, n - L + 2):
        if all(a.term(i + k) == q[k] for k in range(L)):
            return True
    return False


def check_Ncond(a: DirectiveSequence, n: int, N: int) -> bool:
    """min_b |zeta^[n](b)| <= N <= 2 max_b |zeta^[n+1](b)|."""
    lo = min(telescope_matrix(a, n).sum(axis=0).tolist())
    hi = max(telescope_matrix(a, n + 1).sum(axis=0).tolist())
    return lo <= N <= 2 * hi


# ---------------------------------------------------------------------------
# Measure vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureVector:
    n: int
    mu_n: np.ndarray
    depth: int
    residual: float


def _cone_vector(a: DirectiveSequence, n: int, depth: int) -> np.ndarray:
    v = np.ones(a.m)
    for k in range(n + depth, n, -1):
        v = a.matrix(k) @ v
        v = v / v.sum()
    return v


def _normalize_level(a: DirectiveSequence, n: int, v: np.ndarray) -> np.ndarray:
    if n == 0:
        return v / v.sum()
    P = telescope_matrix(a, n).astype(float)
    return v / (P @ v).sum()


def measure_vectors(a: DirectiveSequence, n: int, depth: int = 40) -> MeasureVector:
    """
    mu_n ~ S_{n+1} ... S_{n+depth} 1, scaled so that ||S^[n] mu_n||_1 = 1.

    The reported residual is ||mu_n - S_{n+1} mu_{n+1}||_1 with mu_{n+1}
    computed independently at the same depth.
    """
    if n < 0 or depth < 1:
        raise PreconditionError(f"need n >= 0 and depth >= 1, got n={n}, depth={depth}")
    if positive_block(a, n + 1, n + depth) is None:
        raise NumericalFailure(
            f"no strictly positive block in terms {n + 1}..{n + depth}; contraction not certified"
        )
    mu_n = _normalize_level(a, n, _cone_vector(a, n, depth))
    mu_next = _normalize_level(a, n + 1, _cone_vector(a, n + 1, depth))
    residual = float(np.abs(mu_n - a.matrix(n + 1) @ mu_next).sum())
    logger.debug("measure vector level %d depth %d residual %.3e", n, depth, residual)
    return MeasureVector(n=n, mu_n=mu_n, depth=depth, residual=residual)


# ---------------------------------------------------------------------------
# Prefix decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrefixSuffixPath:
    """
    prefixes[j] is v_j, a prefix of zeta_{j+1}(x_{j+1}); prefixes[n] is
    either empty or the anchor letter itself (k equal to the full length).
    Suffixes are empty for prefixes of zeta^[n](b).
    """

    n: int
    anchor: int
    k: int
    prefixes: tuple[Word, ...]
    suffixes: tuple[Word, ...]


def prefix_path(a: DirectiveSequence, n: int, b: int, k: int) -> PrefixSuffixPath:
    if b < 1 or b > a.m:
        raise PreconditionError(f"letter {b} outside alphabet 1..{a.m}")
    if n < 1:
        raise PreconditionError(f"prefix_path needs n >= 1, got {n}")
    lengths: List[List[int]] = [[1] * a.m]
    for P in iter_telescope_matrices(a, n):
        lengths.append(P.sum(axis=0).tolist())
    total = lengths[n][b - 1]
    if k < 0 or k > total:
        raise PreconditionError(f"k={k} out of range 0..{total}")

    prefixes: List[Word] = [()] * (n + 1)
    if k == total:
        prefixes[n] = (b,)
        return PrefixSuffixPath(n, b, k, tuple(prefixes), tuple([()] * (n + 1)))

    remaining = k
    x = b
    for j in range(n, 0, -1):
        if remaining == 0:
            break
        image = a.term(j).image(x)
        level = lengths[j - 1]
        used = 0
        i = 0
        while i < len(image) and used + level[image[i] - 1] <= remaining:
            used += level[image[i] - 1]
            i += 1
        prefixes[j - 1] = image[:i]
        remaining -= used
        if remaining:
            x = image[i]
    return PrefixSuffixPath(n, b, k, tuple(prefixes), tuple([()] * (n + 1)))


def reassemble_prefix(a: DirectiveSequence, path: PrefixSuffixPath, cap: int = DEFAULT_LENGTH_CAP) -> Word:
    """zeta^[n](v_n) zeta^[n-1](v_{n-1}) ... zeta_1(v_1) v_0."""
    out: List[int] = []
    zetas: List[Optional[Substitution]] = [None]
    if path.n:
        zetas.extend(t.zeta_n for t in iter_telescopes(a, path.n, cap))
    for j in range(path.n, -1, -1):
        v = path.prefixes[j]
        if not v:
            continue
        out.extend(v if j == 0 else zetas[j](v, cap=cap))
    return tuple(out)
