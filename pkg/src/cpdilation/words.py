"""The index *-semigroup of integer words with distinct neighbors.

Products are conditional concatenations: when the last letter of the left
factor equals the first letter of the right factor, the repeated letter is
written once.  The involution reverses a word.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import EmptyWord, NeighborRepeat, ParseError

__all__ = [
    "Word",
    "make_word",
    "word_product",
    "word_involution",
    "word_height",
    "word_shift",
    "parse_index_tuple",
    "parse_word",
    "format_word",
    "iter_words",
]


@dataclass(frozen=True, order=True)
class Word:
    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(n) for n in self.entries)
        if not entries:
            raise EmptyWord("a word needs at least one entry")
        for n in entries:
            if n < 0:
                raise ValueError(f"word entries must be nonnegative, got {n}")
        for i in range(len(entries) - 1):
            if entries[i] == entries[i + 1]:
                raise NeighborRepeat(
                    f"entries {i} and {i + 1} are both {entries[i]} in {entries}"
                )
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def first(self) -> int:
        return self.entries[0]

    @property
    def last(self) -> int:
        return self.entries[-1]

    @property
    def height(self) -> int:
        return max(self.entries)

    def __mul__(self, other: "Word") -> "Word":
        return word_product(self, other)

    @property
    def star(self) -> "Word":
        return word_involution(self)

    def shift(self, t: int = 1) -> "Word":
        return word_shift(self, t)

    def __str__(self) -> str:
        return format_word(self.entries)

    def __repr__(self) -> str:
        return f"Word{format_word(self.entries)}"


def make_word(entries: Iterable[int]) -> Word:
    return Word(tuple(entries))


def word_product(m: Word, n: Word) -> Word:
    # Dropping first(n) on a match also covers the length-1 case m.(q) = m.
    if m.last == n.first:
        return Word(m.entries + n.entries[1:])
    return Word(m.entries + n.entries)


def word_involution(m: Word) -> Word:
    return Word(m.entries[::-1])


def word_height(m: Word) -> int:
    return m.height


def word_shift(m: Word, t: int) -> Word:
    if t < 0:
        raise ValueError("shift amount must be nonnegative")
    return Word(tuple(n + t for n in m.entries))


def iter_words(max_entry: int, max_length: int) -> Iterator[Word]:
    """Yield every word with entries in ``0..max_entry`` and length ``<= max_length``.

    Order is by length, then lexicographic.
    """
    letters = range(max_entry + 1)

    def extend(prefix: tuple[int, ...], length: int) -> Iterator[tuple[int, ...]]:
        if len(prefix) == length:
            yield prefix
            return
        for n in letters:
            if prefix and prefix[-1] == n:
                continue
            yield from extend(prefix + (n,), length)

    for length in range(1, max_length + 1):
        for entries in extend((), length):
            yield Word(entries)


_TUPLE_RE = re.compile(r"^\(\s*(\d+(?:\s*,\s*\d+)*)\s*,?\s*\)$")


def parse_index_tuple(text: str) -> tuple[int, ...]:
    """Parse ``"(n1, n2, ..., nk)"`` into a tuple; neighbors may repeat."""
    m = _TUPLE_RE.match(text.strip())
    if m is None:
        raise ParseError(f"expected '(n1,...,nk)' with nonnegative integers, got {text!r}")
    return tuple(int(tok) for tok in m.group(1).split(","))


def parse_word(text: str) -> Word:
    return Word(parse_index_tuple(text))


def format_word(entries: Iterable[int]) -> str:
    return "(" + ",".join(str(n) for n in entries) + ")"
