"""Number-to-word encodings and the position relations derived from them.

Bit words are plain strings over ``"0"``/``"1"``; they stand for the letter
alphabet {0̄, 1̄} and are never confused with integers. ``None`` is the
undefined value of the partial maps.
"""

from __future__ import annotations

from enum import Enum
from itertools import count
from typing import Iterator, Sequence


class RelKind(str, Enum):
    ONE = "one"
    LEN = "len"


def _high_zero(x: int) -> int | None:
    """Bit index of the most significant zero of ``x`` (``None`` if x has none)."""
    if x <= 0:
        return None
    mask = ~x & ((1 << x.bit_length()) - 1)
    if mask == 0:
        return None
    return mask.bit_length() - 1


def beta(x: int) -> str | None:
    """Binary digits of ``x`` after its leftmost zero, most significant first.

    >>> beta(42), beta(64), beta(26)
    ('1010', '00000', '10')
    >>> beta(2), beta(0), beta(7)
    ('', None, None)
    """
    z = _high_zero(x)
    if z is None:
        return None
    if z == 0:
        return ""
    return format(x & ((1 << z) - 1), f"0{z}b")


def beta_len(x: int) -> int | None:
    return _high_zero(x)


def one_positions(j: int) -> list[int]:
    """1-based positions carrying 1̄ in ``beta(j)``; empty when undefined."""
    z = _high_zero(j)
    if not z:
        return []
    low = j & ((1 << z) - 1)
    out = []
    while low:
        b = low.bit_length() - 1
        out.append(z - b)
        low ^= 1 << b
    return out


def rel_contains(kind: RelKind | str, i: int, j: int) -> bool:
    kind = RelKind(kind)
    if i < 1 or i > j:
        return False
    w = beta(j)
    if w is None or i > len(w):
        return False
    return kind is RelKind.LEN or w[i - 1] == "1"


def mu(words: Sequence[str], alphabet: Sequence) -> tuple | None:
    """Decode a consistent tuple of bit words into a word over ``alphabet``."""
    if len(words) != len(alphabet):
        raise ValueError("need exactly one bit word per letter")
    if any(w is None for w in words):
        return None
    lengths = {len(w) for w in words}
    if len(lengths) != 1:
        return None
    (m,) = lengths
    out = []
    for p in range(m):
        hits = [i for i, w in enumerate(words) if w[p] == "1"]
        if len(hits) != 1:
            return None
        out.append(alphabet[hits[0]])
    return tuple(out)


def sigma(x: Sequence[int], alphabet: Sequence) -> tuple | None:
    """``mu(beta(x_1), ..., beta(x_n))``, undefined if any piece is."""
    if len(x) != len(alphabet):
        raise ValueError("need exactly one integer per letter")
    words = [beta(v) for v in x]
    if any(w is None for w in words):
        return None
    return mu(words, alphabet)


def indicator_words(word: Sequence, alphabet: Sequence) -> list[str]:
    """Inverse of ``mu``: bit word i marks the positions of ``alphabet[i]``."""
    return ["".join("1" if c == a else "0" for c in word) for a in alphabet]


def preimages(w: str) -> Iterator[int]:
    """All ``l`` with ``beta(l) == w``, ascending (infinite)."""
    if any(c not in "01" for c in w):
        raise ValueError(f"not a bit word: {w!r}")
    val = int(w, 2) if w else 0
    shift = len(w) + 1
    for k in count(1):
        yield (((1 << k) - 1) << shift) + val


def first_preimage_at_least(w: str, lo: int) -> int:
    """Smallest ``l >= lo`` with ``beta(l) == w``, in closed form."""
    val = int(w, 2) if w else 0
    shift = len(w) + 1
    k = 1
    while (((1 << k) - 1) << shift) + val < lo:
        k += 1
    return (((1 << k) - 1) << shift) + val
