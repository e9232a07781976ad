"""Elementary generators over the word semigroup and the expectation E0.

A generator pairs a word ``(n_1, ..., n_k)`` with one matrix per letter,
standing for the elementary tensor ``a_1 (x) ... (x) a_k`` in the fiber over
that word.  Multiplying two generators concatenates words conditionally and,
when the boundary letters coincide, multiplies the boundary tensors.

``E0`` sends a generator to the moment polynomial of its word and tensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import Channel, as_element, opnorm, psd_check, random_element
from .errors import HeightZero, LengthMismatch, ShapeMismatch
from .moments import moment_eval
from .words import Word, format_word

__all__ = [
    "Generator",
    "FiniteSection",
    "gen_make",
    "gen_product",
    "gen_involution",
    "gen_shift",
    "unit_generator",
    "expectation_E0",
    "gram_matrix",
    "KeyLemmaResult",
    "key_lemma_step",
    "random_generator",
]


def _frozen(a: np.ndarray, d: int | None = None) -> np.ndarray:
    a = as_element(a, d).copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Generator:
    word: Word
    tensors: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not isinstance(self.word, Word):
            object.__setattr__(self, "word", Word(tuple(self.word)))
        if len(self.tensors) != len(self.word):
            raise LengthMismatch(
                f"word {self.word} has {len(self.word)} letters but {len(self.tensors)} tensors"
            )
        d = as_element(self.tensors[0]).shape[0]
        object.__setattr__(self, "tensors", tuple(_frozen(t, d) for t in self.tensors))

    @property
    def d(self) -> int:
        return self.tensors[0].shape[0]

    @property
    def height(self) -> int:
        return self.word.height

    def __len__(self) -> int:
        return len(self.word)

    def __mul__(self, other: "Generator") -> "Generator":
        return gen_product(self, other)

    @property
    def star(self) -> "Generator":
        return gen_involution(self)

    def shift(self, t: int = 1) -> "Generator":
        return gen_shift(self, t)

    def allclose(self, other: "Generator", atol: float = 1e-12) -> bool:
        return self.word == other.word and all(
            opnorm(a - b) <= atol for a, b in zip(self.tensors, other.tensors)
        )

    def __repr__(self) -> str:
        return f"Generator({format_word(self.word)}, d={self.d})"


def gen_make(indices: Sequence[int], tensors: Sequence) -> Generator:
    """Build a generator, merging equal adjacent indices by multiplying tensors."""
    idx = [int(n) for n in indices]
    if len(idx) != len(tensors):
        raise LengthMismatch(f"{len(idx)} indices but {len(tensors)} tensors")
    if not idx:
        raise LengthMismatch("a generator needs at least one letter")
    d = as_element(tensors[0]).shape[0]
    letters = [idx[0]]
    mats = [as_element(tensors[0], d)]
    for n, t in zip(idx[1:], tensors[1:]):
        t = as_element(t, d)
        if n == letters[-1]:
            mats[-1] = mats[-1] @ t
        else:
            letters.append(n)
            mats.append(t)
    return Generator(Word(tuple(letters)), tuple(mats))


def unit_generator(d: int, level: int = 0) -> Generator:
    return Generator(Word((level,)), (np.eye(d, dtype=complex),))


def gen_product(g: Generator, h: Generator) -> Generator:
    if g.d != h.d:
        raise ShapeMismatch(f"cannot multiply generators of dimensions {g.d} and {h.d}")
    word = g.word * h.word
    if g.word.last == h.word.first:
        tensors = g.tensors[:-1] + (g.tensors[-1] @ h.tensors[0],) + h.tensors[1:]
    else:
        tensors = g.tensors + h.tensors
    return Generator(word, tensors)


def gen_involution(g: Generator) -> Generator:
    return Generator(g.word.star, tuple(t.conj().T for t in reversed(g.tensors)))


def gen_shift(g: Generator, t: int) -> Generator:
    return Generator(g.word.shift(t), g.tensors)


@dataclass(frozen=True)
class FiniteSection:
    """Formal finite sum of generators; scalars live inside the tensors."""

    terms: tuple[Generator, ...] = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple(self.terms)
        if len({g.d for g in terms}) > 1:
            raise ShapeMismatch("all terms of a section must share one dimension")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, *gens: Generator) -> "FiniteSection":
        return cls(tuple(gens))

    def __add__(self, other: "FiniteSection") -> "FiniteSection":
        return FiniteSection(self.terms + other.terms)

    def __mul__(self, other: "FiniteSection") -> "FiniteSection":
        return FiniteSection(tuple(g * h for g in self.terms for h in other.terms))

    @property
    def star(self) -> "FiniteSection":
        return FiniteSection(tuple(g.star for g in self.terms))

    def shift(self, t: int = 1) -> "FiniteSection":
        return FiniteSection(tuple(g.shift(t) for g in self.terms))

    def l1_norm(self) -> float:
        """Sum over terms of the product of tensor norms.

        This is an upper bound for the norm of the section; it is reported
        as a diagnostic and never used as a constraint.
        """
        return float(sum(np.prod([opnorm(t) for t in g.tensors]) for g in self.terms))


def expectation_E0(g: Generator | FiniteSection, phi: Channel) -> np.ndarray:
    """Moment polynomial of the word and tensors, summed over terms for sections."""
    if isinstance(g, FiniteSection):
        out = np.zeros((phi.d, phi.d), dtype=complex)
        for term in g.terms:
            out = out + expectation_E0(term, phi)
        return out
    if g.d != phi.d:
        raise ShapeMismatch(f"generator has dimension {g.d}, channel has {phi.d}")
    return moment_eval(g.word.entries, g.tensors, phi)


def gram_matrix(us: Sequence[Generator], phi: Channel) -> tuple[np.ndarray, float]:
    """Block matrix ``[E0(u_i^* u_j)]_{i,j}`` as an ``nd x nd`` array, and its least eigenvalue.

    With this placement, ``x^* G x = sum_{i,j} x_i^* E0(u_i^* u_j) x_j`` for
    ``x = (x_1, ..., x_n)`` in ``(C^d)^n``, which is the positive form.
    Every block is computed on its own (the lower triangle is not copied
    from the upper one), so Hermitian symmetry is checked rather than assumed.
    """
    if not us:
        raise ValueError("need at least one generator")
    d = phi.d
    for u in us:
        if u.d != d:
            raise ShapeMismatch(f"generator has dimension {u.d}, channel has {d}")
    n = len(us)
    G = np.zeros((n * d, n * d), dtype=complex)
    stars = [u.star for u in us]
    for i in range(n):
        for j in range(n):
            G[i * d : (i + 1) * d, j * d : (j + 1) * d] = expectation_E0(stars[i] * us[j], phi)
    _, low = psd_check(G)
    return G, low


@dataclass(frozen=True, eq=False)
class KeyLemmaResult:
    vs: tuple[Generator, ...]
    bs: tuple[np.ndarray, ...]
    cs: tuple[np.ndarray, ...]
    residual: float
    max_height: int

    def __iter__(self):
        return iter((self.vs, self.bs, self.cs, self.residual))


def key_lemma_step(us: Sequence[Generator], phi: Channel) -> KeyLemmaResult:
    """Lower the maximum height of a generator family by one level.

    Each ``u_k`` is multiplied on the right by the unit.  When its word
    then starts with a positive letter it is cut before its first zero,
    ``u_k e = shift(v_k) w_k``, with ``b_k = E0(w_k)`` and ``c_k = 0``;
    otherwise ``v_k`` is the unit at level zero and ``b_k = c_k = E0(u_k)``.
    The residual is the largest deviation, over all pairs, of

        E0(u_j^* u_i) - b_j^* phi(E0(v_j^* v_i)) b_i - c_j^* (e - phi(e)) c_i.
    """
    if not us:
        raise ValueError("need at least one generator")
    d = phi.d
    N = max(u.height for u in us)
    if N == 0:
        raise HeightZero("every generator has height 0; nothing to reduce")
    e = np.eye(d, dtype=complex)
    unit = unit_generator(d)
    vs: list[Generator] = []
    bs: list[np.ndarray] = []
    cs: list[np.ndarray] = []
    for u in us:
        if u.d != d:
            raise ShapeMismatch(f"generator has dimension {u.d}, channel has {d}")
        ue = u * unit
        letters = ue.word.entries
        if letters[0] > 0:
            cut = letters.index(0)
            v = Generator(Word(tuple(n - 1 for n in letters[:cut])), ue.tensors[:cut])
            w = Generator(Word(letters[cut:]), ue.tensors[cut:])
            vs.append(v)
            bs.append(expectation_E0(w, phi))
            cs.append(np.zeros((d, d), dtype=complex))
        else:
            b = expectation_E0(u, phi)
            vs.append(unit)
            bs.append(b)
            cs.append(b)
    defect = e - phi.unit_image
    residual = 0.0
    for i, ui in enumerate(us):
        for j, uj in enumerate(us):
            lhs = expectation_E0(uj.star * ui, phi)
            inner = phi(expectation_E0(vs[j].star * vs[i], phi))
            rhs = bs[j].conj().T @ inner @ bs[i] + cs[j].conj().T @ defect @ cs[i]
            residual = max(residual, opnorm(lhs - rhs))
    return KeyLemmaResult(tuple(vs), tuple(bs), tuple(cs), residual, N)


def random_generator(
    rng: np.random.Generator,
    d: int,
    max_height: int,
    max_length: int,
    first: int | None = None,
    last: int | None = None,
) -> Generator:
    """Random generator with Gaussian tensors.

    ``first``/``last`` pin the boundary letters.  Letters are drawn without
    regard to neighbors and equal neighbors are then merged, which keeps the
    boundary letters and may shorten the word.
    """
    length = int(rng.integers(1, max_length + 1))
    letters = [int(n) for n in rng.integers(0, max_height + 1, size=length)]
    if first is not None:
        letters[0] = first
    if last is not None:
        if length == 1 and first is not None and first != last:
            letters.append(last)
        else:
            letters[-1] = last
    tensors = [random_element(rng, d) for _ in letters]
    return gen_make(letters, tensors)
