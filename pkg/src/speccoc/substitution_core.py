"""
substitution_core.py

Alphabet, words and substitutions on A = {1, ..., m}:
- Substitution: per-letter images, extended to words by concatenation
- substitution matrices S(i, j) = number of letters i in the image of j
- composition, population vectors and tiling lengths
- Perron-Frobenius data by power iteration, primitivity by boolean powers
- text / JSON parsing and a handful of stock substitutions
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Sequence

import numpy as np

from .errors import LengthCapExceeded, NumericalFailure, PreconditionError

logger = logging.getLogger(__name__)

Word = tuple[int, ...]

DEFAULT_LENGTH_CAP = 10_000_000


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Substitution:
    """
    A substitution on the alphabet {1, ..., m}, m = len(images).

    images[b - 1] is the (nonempty) image of letter b. Letters are 1-based
    small integers. Instances are immutable and hashable, so they can be
    compared image by image and shared between worker threads.
    """

    images: tuple[Word, ...]

    def __post_init__(self) -> None:
        images = tuple(tuple(int(x) for x in img) for img in self.images)
        object.__setattr__(self, "images", images)
        m = len(images)
        if m < 2:
            raise PreconditionError(f"alphabet size must be at least 2, got {m}")
        for b, img in enumerate(images, start=1):
            if not img:
                raise PreconditionError(f"image of letter {b} is empty")
            bad = [x for x in img if x < 1 or x > m]
            if bad:
                raise PreconditionError(
                    f"image of letter {b} uses letters outside 1..{m}: {sorted(set(bad))}"
                )

    @property
    def m(self) -> int:
        return len(self.images)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(img) for img in self.images)

    def image(self, b: int) -> Word:
        if b < 1 or b > self.m:
            raise PreconditionError(f"letter {b} outside alphabet 1..{self.m}")
        return self.images[b - 1]

    def __call__(self, word: Iterable[int], cap: int = DEFAULT_LENGTH_CAP) -> Word:
        word = tuple(word)
        total = sum(len(self.image(x)) for x in word)
        if total > cap:
            raise LengthCapExceeded(total, cap)
        out: List[int] = []
        for x in word:
            out.extend(self.images[x - 1])
        return tuple(out)

    def __str__(self) -> str:
        return substitution_to_text(self)

    @classmethod
    def identity(cls, m: int) -> "Substitution":
        return cls(tuple((b,) for b in range(1, m + 1)))


def validate(zeta: Substitution) -> List[str]:
    """
    Return the reasons why zeta is not in the class of admissible
    substitutions (every letter occurs in some image, some image has
    length > 1). An empty list means zeta is admissible.
    """
    issues: List[str] = []
    seen = {x for img in zeta.images for x in img}
    missing = sorted(set(range(1, zeta.m + 1)) - seen)
    if missing:
        issues.append(f"letters never occur in any image: {missing}")
    if max(zeta.lengths) <= 1:
        issues.append("every image has length 1")
    return issues


# ---------------------------------------------------------------------------
# Matrices, composition, words
# ---------------------------------------------------------------------------

def substitution_matrix(zeta: Substitution) -> np.ndarray:
    """S(i, j) = multiplicity of letter i in zeta(j), as an int64 array."""
    S = np.zeros((zeta.m, zeta.m), dtype=np.int64)
    for j, img in enumerate(zeta.images):
        np.add.at(S[:, j], np.asarray(img) - 1, 1)
    return S


def matrix_norm(S: np.ndarray) -> int | float:
    """Maximal absolute column sum; for a substitution matrix, the longest image."""
    col = np.abs(S).sum(axis=0)
    best = max(col.tolist())
    return int(best) if isinstance(best, (int, np.integer)) else float(best)


def compose(zeta1: Substitution, zeta2: Substitution, cap: int = DEFAULT_LENGTH_CAP) -> Substitution:
    """(zeta1 o zeta2)(a) = zeta1 applied letterwise to zeta2(a)."""
    if zeta1.m != zeta2.m:
        raise PreconditionError(
            f"alphabet mismatch in composition: {zeta1.m} letters vs {zeta2.m} letters"
        )
    return Substitution(tuple(zeta1(img, cap=cap) for img in zeta2.images))


def apply(zeta: Substitution, word: Iterable[int], cap: int = DEFAULT_LENGTH_CAP) -> Word:
    return zeta(word, cap)


def population_vector(v: Sequence[int], m: int) -> np.ndarray:
    """Entry j (0-based j-1) counts the letter j in v."""
    counts = np.zeros(m, dtype=np.int64)
    if len(v):
        arr = np.asarray(v, dtype=np.int64)
        if arr.min() < 1 or arr.max() > m:
            raise PreconditionError(f"word uses letters outside 1..{m}")
        np.add.at(counts, arr - 1, 1)
    return counts


def _positive_roof(s: Sequence[float]) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or not np.all(s > 0):
        raise PreconditionError(f"roof vector must be strictly positive, got {s.tolist()}")
    return s


def tiling_length(v: Sequence[int], s: Sequence[float]) -> float:
    """|v|_s = sum of s over the letters of v."""
    s = _positive_roof(s)
    if not len(v):
        return 0.0
    return float(s[np.asarray(v, dtype=np.int64) - 1].sum())


# ---------------------------------------------------------------------------
# Perron-Frobenius data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PFData:
    theta1: float
    right_vec: np.ndarray
    left_vec: np.ndarray
    iterations: int


def _as_matrix(obj: Substitution | np.ndarray) -> np.ndarray:
    if isinstance(obj, Substitution):
        return substitution_matrix(obj)
    return np.asarray(obj)


def is_primitive(obj: Substitution | np.ndarray, max_power: int | None = None) -> bool:
    """
    True iff S^k > 0 entrywise for some k <= max_power.

    The default bound m^2 - 2m + 2 (Wielandt) is sharp for primitive
    nonnegative matrices, so the default answer is exact.
    """
    S = _as_matrix(obj)
    m = S.shape[0]
    if max_power is None:
        max_power = m * m - 2 * m + 2
    if max_power < 1:
        raise PreconditionError(f"max_power must be >= 1, got {max_power}")
    P = (S > 0).astype(np.int64)
    Q = P.copy()
    for _ in range(max_power):
        if Q.all():
            return True
        Q = ((Q @ P) > 0).astype(np.int64)
    return False


def _power_iteration(A: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, int]:
    v = np.full(A.shape[0], 1.0 / A.shape[0])
    for it in range(1, max_iter + 1):
        w = A @ v
        theta = float(w.sum())
        w = w / theta
        if np.abs(w - v).sum() <= tol:
            return float((A @ w).sum()), w, it
        v = w
    raise NumericalFailure(f"power iteration did not converge within {max_iter} iterations")


def perron_frobenius(
    obj: Substitution | np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> PFData:
    """
    Dominant eigenvalue and 1-normalized positive eigenvectors of a primitive
    nonnegative matrix, by power iteration from the all-ones vector.
    """
    S = _as_matrix(obj).astype(float)
    if not is_primitive(S):
        raise PreconditionError("Perron-Frobenius data requested for a non-primitive matrix")
    theta, right, it_r = _power_iteration(S, tol, max_iter)
    _, left, it_l = _power_iteration(S.T, tol, max_iter)
    residual = np.abs(S @ right - theta * right).sum()
    if residual > 1e-10 * theta:
        raise NumericalFailure(f"Perron-Frobenius residual {residual:.3e} above tolerance")
    logger.debug("PF theta1=%.15g after %d/%d iterations", theta, it_r, it_l)
    return PFData(theta1=theta, right_vec=right, left_vec=left, iterations=max(it_r, it_l))


# ---------------------------------------------------------------------------
# Parsing / formatting
# ---------------------------------------------------------------------------

def _parse_letters(token: str) -> Word:
    token = token.strip()
    if "," in token:
        return tuple(int(x) for x in token.split(",") if x.strip())
    return tuple(int(ch) for ch in token)


def parse_substitution(text: str) -> Substitution:
    """
    Parse "1:121321;2:2231;3:31123". Letters are single digits unless the
    image is comma separated ("10:1,10,2"), which is required for m >= 10.
    """
    entries = [e for e in text.replace("\n", ";").split(";") if e.strip()]
    images: dict[int, Word] = {}
    for entry in entries:
        if ":" not in entry:
            raise PreconditionError(f"substitution entry without ':' -> {entry!r}")
        key, img = entry.split(":", 1)
        letter = int(key.strip())
        if letter in images:
            raise PreconditionError(f"letter {letter} defined twice")
        images[letter] = _parse_letters(img)
    m = len(images)
    if sorted(images) != list(range(1, m + 1)):
        raise PreconditionError(f"letters must be exactly 1..{m}, got {sorted(images)}")
    return Substitution(tuple(images[b] for b in range(1, m + 1)))


def substitution_from_json(doc: Mapping | str) -> Substitution:
    """Parse {"m": 3, "images": [[1,2,1,3,2,1], [2,2,3,1], [3,1,1,2,3]]}."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    images = doc["images"]
    m = int(doc.get("m", len(images)))
    if m != len(images):
        raise PreconditionError(f"declared m={m} but {len(images)} images given")
    return Substitution(tuple(tuple(img) for img in images))


def substitution_to_text(zeta: Substitution) -> str:
    sep = "," if zeta.m >= 10 else ""
    return ";".join(
        f"{b}:{sep.join(str(x) for x in img)}" for b, img in enumerate(zeta.images, start=1)
    )


def substitution_to_json(zeta: Substitution) -> dict:
    return {"m": zeta.m, "images": [list(img) for img in zeta.images]}


def coerce_substitution(obj: Substitution | str | Mapping) -> Substitution:
    """Accept a Substitution, a stock name, the text form or the JSON form."""
    if isinstance(obj, Substitution):
        return obj
    if isinstance(obj, Mapping):
        return substitution_from_json(obj)
    text = str(obj).strip()
    if text in STOCK:
        return STOCK[text]
    if text.startswith("non_pisot:"):
        return non_pisot(int(text.split(":", 1)[1]))
    if text.startswith("{"):
        return substitution_from_json(text)
    return parse_substitution(text)


# ---------------------------------------------------------------------------
# Stock substitutions
# ---------------------------------------------------------------------------

FIBONACCI = Substitution(((1, 2), (1,)))
THUE_MORSE = Substitution(((1, 2), (2, 1)))
THREE_LETTER = parse_substitution("1:121321;2:2231;3:31123")


def non_pisot(k: int) -> Substitution:
    """1 -> 1 2^k, 2 -> 1; non-Pisot for k >= 4."""
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    return Substitution(((1,) + (2,) * k, (1,)))


STOCK: dict[str, Substitution] = {
    "fibonacci": FIBONACCI,
    "thue_morse": THUE_MORSE,
    "three_letter": THREE_LETTER,
}
