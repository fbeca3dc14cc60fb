"""
rauzy_veech.py

Interval exchange transformations and Rauzy-Veech induction:
- IETState (lengths lambda, irreducible permutation pi) and iet_apply
- rauzy_step: one induction move with its substitution read off the Rokhlin towers
- zorich_step: consecutive same-type moves composed
- rauzy_class: BFS closure of a permutation under the two moves
- iter_moves / directive_from_iet: directive sequences coding an IET
- random_iet, reconstruct_lengths, tower_check

Labelling: intervals are labelled 1..m in top order; pi[i-1] is the bottom
position of interval i. Substitution images list the floors of a tower
bottom to top, left to right.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence

import numpy as np

from .errors import NumericalFailure, PreconditionError
from .sadic import DirectiveSequence
from .substitution_core import Substitution, compose, substitution_matrix

logger = logging.getLogger(__name__)

DRAW_TOL = 1e-14
NEAR_DRAW_TOL = 1e-12
ZORICH_CAP = 1_000_000

Permutation = tuple[int, ...]


# ---------------------------------------------------------------------------
# Permutations / states
# ---------------------------------------------------------------------------

def validate_permutation(pi: Sequence[int]) -> Permutation:
    pi = tuple(int(x) for x in pi)
    m = len(pi)
    if m < 2:
        raise PreconditionError(f"permutation needs at least 2 entries, got {m}")
    if sorted(pi) != list(range(1, m + 1)):
        raise PreconditionError(f"not a permutation of 1..{m}: {pi}")
    return pi


def is_irreducible(pi: Sequence[int]) -> bool:
    """pi{1..k} != {1..k} for every k < m."""
    m = len(pi)
    running = 0
    for k in range(1, m):
        running = max(running, pi[k - 1])
        if running == k:
            return False
    return True


def _inverse(pi: Permutation) -> Permutation:
    inv = [0] * len(pi)
    for label, pos in enumerate(pi, start=1):
        inv[pos - 1] = label
    return tuple(inv)


@dataclass(frozen=True)
class IETState:
    lam: tuple[float, ...]
    pi: Permutation

    def __post_init__(self) -> None:
        pi = validate_permutation(self.pi)
        lam = tuple(float(x) for x in self.lam)
        if len(lam) != len(pi):
            raise PreconditionError(f"{len(lam)} lengths for a permutation of {len(pi)} letters")
        if not all(x > 0 for x in lam):
            raise PreconditionError(f"interval lengths must be strictly positive, got {lam}")
        if not is_irreducible(pi):
            raise PreconditionError(f"permutation {pi} is reducible")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "pi", pi)

    @property
    def m(self) -> int:
        return len(self.pi)

    @property
    def total(self) -> float:
        return math.fsum(self.lam)

    @property
    def bottom(self) -> Permutation:
        """Labels in bottom order."""
        return _inverse(self.pi)

    def normalized(self) -> "IETState":
        t = self.total
        return IETState(tuple(x / t for x in self.lam), self.pi)

    @property
    def is_draw(self) -> bool:
        b = self.bottom[-1]
        lm, lb = self.lam[-1], self.lam[b - 1]
        return abs(lm - lb) <= DRAW_TOL * max(lm, lb)


def iet_apply(state: IETState, x: float) -> float:
    """x + (length before pi(i) in bottom order) - (length before i in top order), x in I_i."""
    lam = state.lam
    if not 0 <= x < state.total:
        raise PreconditionError(f"x={x} outside [0, {state.total})")
    top = np.cumsum((0.0,) + lam)
    i = int(np.searchsorted(top, x, side="right")) - 1
    i = min(i, state.m - 1)
    bottom = state.bottom
    before = math.fsum(lam[j - 1] for j in bottom[: state.pi[i] - 1])
    return x + before - top[i]


def interval_of(state: IETState, x: float) -> int:
    """Label of the top interval containing x."""
    top = np.cumsum((0.0,) + state.lam)
    return min(int(np.searchsorted(top, x, side="right")), state.m)


# ---------------------------------------------------------------------------
# Moves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RauzyMove:
    type: str  # "a" | "b"
    new_state: IETState
    substitution: Substitution
    matrix: np.ndarray
    count: int = 1

    @property
    def return_times(self) -> tuple[int, ...]:
        return self.substitution.lengths


def move_type(state: IETState) -> str:
    """'a' if the last top interval is shorter than the last bottom one, else 'b'."""
    b = state.bottom[-1]
    lm, lb = state.lam[-1], state.lam[b - 1]
    gap = abs(lm - lb) / max(lm, lb)
    if gap <= DRAW_TOL:
        raise PreconditionError(
            f"Rauzy-Veech draw: lambda_{state.m} = lambda_{b} = {lm!r}; induction undefined"
        )
    if gap <= NEAR_DRAW_TOL:
        logger.warning("near draw in Rauzy-Veech step (relative gap %.2e); type may be ambiguous", gap)
    return "a" if lm < lb else "b"


def _permutation_move(pi: Permutation, kind: str) -> Permutation:
    """Combinatorial part of a move; independent of the lengths."""
    m = len(pi)
    bottom = list(_inverse(pi))
    b = bottom[-1]
    if kind == "a":

        def relabel(x: int) -> int:
            if x == m:
                return b + 1
            if x <= b:
                return x
            return x + 1

        new_bottom = [relabel(x) for x in bottom]
    else:
        new_bottom = bottom[:-1]
        new_bottom.insert(new_bottom.index(m) + 1, b)
    new_pi = [0] * m
    for pos, label in enumerate(new_bottom, start=1):
        new_pi[label - 1] = pos
    return tuple(new_pi)


def _move_substitution(m: int, b: int, kind: str) -> Substitution:
    if kind == "a":
        images = []
        for i in range(1, m + 1):
            if i <= b:
                images.append((i,))
            elif i == b + 1:
                images.append((b, m))
            else:
                images.append((i - 1,))
    else:
        images = [(i,) for i in range(1, m + 1)]
        images[b - 1] = (b, m)
    return Substitution(tuple(images))


def rauzy_step(state: IETState) -> RauzyMove:
    """One Rauzy-Veech move: first return to [0, total - min(lambda_m, lambda_b))."""
    kind = move_type(state)
    m = state.m
    b = state.bottom[-1]
    lam = list(state.lam)
    if kind == "a":
        lm = lam[-1]
        new_lam = lam[: b - 1] + [lam[b - 1] - lm, lm] + lam[b : m - 1]
    else:
        new_lam = lam[:]
        new_lam[-1] = lam[-1] - lam[b - 1]
    zeta = _move_substitution(m, b, kind)
    new_state = IETState(tuple(new_lam), _permutation_move(state.pi, kind))
    return RauzyMove(kind, new_state, zeta, substitution_matrix(zeta))


def zorich_step(state: IETState) -> tuple[RauzyMove, int]:
    """Compose Rauzy moves while the type stays the same."""
    first = rauzy_step(state)
    zeta, S, cur = first.substitution, first.matrix.copy(), first.new_state
    count = 1
    while move_type(cur) == first.type:
        if count >= ZORICH_CAP:
            raise NumericalFailure(f"Zorich acceleration exceeded {ZORICH_CAP} same-type moves")
        nxt = rauzy_step(cur)
        zeta = compose(zeta, nxt.substitution)
        S = S @ nxt.matrix
        cur = nxt.new_state
        count += 1
    return RauzyMove(first.type, cur, zeta, S, count), count


def iter_moves(state: IETState, accel: str = "none") -> Iterator[RauzyMove]:
    """Unbounded move stream; lengths renormalized to unit sum before every step."""
    if accel not in ("none", "zorich"):
        raise PreconditionError(f"accel must be 'none' or 'zorich', got {accel!r}")
    cur = state.normalized()
    while True:
        move = rauzy_step(cur) if accel == "none" else zorich_step(cur)[0]
        yield move
        cur = move.new_state.normalized()


def rauzy_orbit(state: IETState, n: int, accel: str = "none") -> List[RauzyMove]:
    if n < 1:
        raise PreconditionError(f"need n >= 1 moves, got {n}")
    return list(itertools.islice(iter_moves(state, accel), n))


def directive_from_iet(state: IETState, n: int, accel: str = "none") -> DirectiveSequence:
    """
    Directive sequence of the substitutions read off the induction. The
    first n moves are computed eagerly so draws surface here; later terms
    are generated on demand.
    """
    stream = iter_moves(state, accel)
    head = [mv.substitution for mv in itertools.islice(stream, n)]
    tail = (mv.substitution for mv in stream)
    logger.info("directive sequence from IET: m=%d, %d eager moves (%s)", state.m, n, accel)
    return DirectiveSequence.generated(state.m, itertools.chain(head, tail), kind="rauzy")


# ---------------------------------------------------------------------------
# Rauzy classes
# ---------------------------------------------------------------------------

@dataclass
class RauzyGraph:
    vertices: List[Permutation] = field(default_factory=list)
    edges: List[tuple[Permutation, Permutation, str]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.vertices)


def rauzy_class(pi: Sequence[int]) -> RauzyGraph:
    start = validate_permutation(pi)
    if not is_irreducible(start):
        raise PreconditionError(f"permutation {start} is reducible")
    graph = RauzyGraph()
    seen = {start}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        graph.vertices.append(p)
        for kind in ("a", "b"):
            q = _permutation_move(p, kind)
            graph.edges.append((p, q, kind))
            if q not in seen:
                seen.add(q)
                queue.append(q)
    return graph


# ---------------------------------------------------------------------------
# Sampling, reconstruction, tower checks
# ---------------------------------------------------------------------------

def random_iet(m: int, seed: Optional[int] = None, pi: Optional[Sequence[int]] = None) -> IETState:
    """Uniform point of the length simplex with the symmetric permutation by default."""
    if m < 2:
        raise PreconditionError(f"m must be >= 2, got {m}")
    rng = np.random.default_rng(seed)
    lam = rng.exponential(size=m)
    lam = lam / lam.sum()
    if pi is None:
        pi = tuple(range(m, 0, -1))
    return IETState(tuple(lam.tolist()), tuple(pi))


def reconstruct_lengths(moves: Sequence[RauzyMove]) -> np.ndarray:
    """lambda = S_1 ... S_n lambda_n, normalized to unit sum."""
    if not moves:
        raise PreconditionError("no moves to replay")
    v = np.asarray(moves[-1].new_state.lam, dtype=float)
    v = v / v.sum()
    for mv in reversed(moves):
        v = mv.matrix @ v
        v = v / v.sum()
    return v


@dataclass(frozen=True)
class TowerReport:
    samples: int
    failures: int
    max_return_error: float
    one_double_floor: bool

    @property
    def ok(self) -> bool:
        return self.failures == 0 and self.one_double_floor


def tower_check(
    state: IETState,
    move: Optional[RauzyMove] = None,
    samples: int = 1000,
    seed: Optional[int] = None,
    slack: float = 1e-12,
) -> TowerReport:
    """
    Pointwise check of the towers behind one Rauzy move: for x in the
    induced interval with new label i, the k-th iterate of x lies in the
    old interval n(i, k) (the k-th letter of the image of i), no earlier
    iterate returns, and the return point is the induced map at x.
    """
    if move is None:
        move = rauzy_step(state)
    new = move.new_state
    rng = np.random.default_rng(seed)
    J = new.total
    scale = state.total
    failures = 0
    worst = 0.0
    top = np.cumsum((0.0,) + state.lam)

    for x in rng.uniform(0.0, J, size=samples):
        i = interval_of(new, float(x))
        word = move.substitution.image(i)
        y = float(x)
        bad = False
        for k, letter in enumerate(word):
            if not (top[letter - 1] - slack * scale <= y < top[letter] + slack * scale):
                bad = True
                break
            if k > 0 and y < J - slack * scale:
                bad = True
                break
            y = iet_apply(state, min(max(y, 0.0), np.nextafter(scale, 0)))
        if not bad:
            if y >= J + slack * scale:
                bad = True
            else:
                err = abs(y - iet_apply(new, float(x)))
                worst = max(worst, err)
                bad = err > 1e-9 * scale
        failures += bad

    doubles = sum(1 for r in move.return_times if r == 2)
    singles = sum(1 for r in move.return_times if r == 1)
    return TowerReport(
        samples=samples,
        failures=failures,
        max_return_error=worst,
        one_double_floor=(doubles == 1 and singles == state.m - 1),
    )
