"""Finite-horizon GNS model of the minimal dilation.

The catalog of basis vectors is every pair ``(u, e_s)`` where ``u`` is a
generator whose word has letters in ``0..N`` and length at most ``L`` and
whose tensors are matrix units, and ``e_s`` is a standard basis vector of
``C^d``.  The inner product is

    <u (x) e_s, v (x) e_t> = E0(u^* v)[s, t].

Dividing out the null space of this Gram matrix gives a finite-dimensional
Hilbert space on which generators act by left multiplication whenever the
product stays inside the catalog.  The corner spanned by the level-zero
vectors is a copy of ``C^d``, and compressing a represented operator to it
recovers ``E0``.

The catalog has ``sum_{l=1..L} (N+1) N^(l-1) d^(2l)`` generators, so its
size grows exponentially in ``L``; ``d = N = L = 2`` gives 108 generators
and a 216-dimensional Gram matrix.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .algebra import Channel, channel_is_unital, opnorm, random_element
from .errors import (
    CornerDegenerate,
    GramClipTooLarge,
    NotContractive,
    NotUnital,
    OutOfTruncation,
    ShapeMismatch,
)
from .expectation import (
    FiniteSection,
    Generator,
    expectation_E0,
    gen_make,
    gen_product,
    gram_matrix,
)
from .moments import moment_eval
from .report import CheckRecord
from .words import Word, format_word, iter_words

__all__ = [
    "TruncationParams",
    "DilationModel",
    "RepresentedOperator",
    "catalog_size",
    "matrix_unit",
    "enumerate_generators",
    "build_gns",
    "represent",
    "compress_to_A",
    "verify_moment_formula",
    "verify_standard_properties",
    "verify_product_rule",
    "verify_adjoint_rule",
    "verify_truncation_consistency",
]

CLIP_LIMIT = 1e-6
PSD_LIMIT = 1e-8
CORNER_LIMIT = 1e-10
IDENTITY_TOL = 1e-8


@dataclass(frozen=True)
class TruncationParams:
    N: int = 2
    L: int = 2
    eig_tol: float = 1e-10

    def __post_init__(self):
        if self.N < 1 or self.L < 1:
            raise ValueError(f"need N >= 1 and L >= 1, got N={self.N}, L={self.L}")
        if not self.eig_tol > 0:
            raise ValueError("eig_tol must be positive")

    def admits(self, word: Word) -> bool:
        return len(word) <= self.L and word.height <= self.N


def catalog_size(d: int, N: int, L: int) -> int:
    return sum((N + 1) * N ** (length - 1) * d ** (2 * length) for length in range(1, L + 1))


def matrix_unit(d: int, p: int, q: int) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    m[p, q] = 1.0
    return m


def enumerate_generators(d: int, params: TruncationParams) -> list[Generator]:
    """All catalog generators, ordered by length, word, then matrix-unit slots."""
    units = [matrix_unit(d, p, q) for p in range(d) for q in range(d)]
    out = []
    for word in iter_words(params.N, params.L):
        for slots in itertools.product(range(d * d), repeat=len(word)):
            out.append(Generator(word, tuple(units[k] for k in slots)))
    return out


@dataclass(eq=False)
class DilationModel:
    phi: Channel
    params: TruncationParams
    generators: list[Generator]
    word_offsets: dict[Word, int]
    gram: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    coords: np.ndarray  # rank x (#generators * d); column j = coordinates of basis vector j
    clip: float
    corner_gram_min: float
    corner_isometry: np.ndarray  # rank x d; column p = the corner vector e (x) e_p
    corner_projection: np.ndarray
    _embed: np.ndarray = field(repr=False)  # pseudo-inverse of coords: (#basis) x rank

    @property
    def d(self) -> int:
        return self.phi.d

    @property
    def basis_size(self) -> int:
        return len(self.generators) * self.d

    def basis_label(self, index: int) -> str:
        g = self.generators[index // self.d]
        units = ",".join(
            "E%d%d" % tuple(int(x) for x in np.argwhere(t != 0)[0]) for t in g.tensors
        )
        return f"{format_word(g.word)};[{units}] (x) e{index % self.d}"

    def generator_index(self, word: Word, slots: Sequence[int]) -> int:
        k = 0
        for s in slots:
            k = k * self.d * self.d + s
        return self.word_offsets[word] + k

    def basis_index(self, word: Word, slots: Sequence[int], s: int) -> int:
        return self.generator_index(word, slots) * self.d + s

    def corner_indices(self) -> list[int]:
        """Basis indices of every level-zero vector ``((0), E_pq) (x) e_s``."""
        zero = Word((0,))
        d = self.d
        return [self.basis_index(zero, [p * d + q], s) for p in range(d) for q in range(d) for s in range(d)]

    def expand(self, g: Generator) -> np.ndarray:
        """Coefficients of ``g`` over the generator catalog."""
        if g.word not in self.word_offsets:
            raise OutOfTruncation(f"word {g.word} lies outside the truncation")
        vec = np.zeros(len(self.generators), dtype=complex)
        coeffs = reduce(np.kron, [t.ravel() for t in g.tensors])
        start = self.word_offsets[g.word]
        vec[start : start + coeffs.size] = coeffs
        return vec

    def vector(self, g: Generator, s: int) -> np.ndarray:
        """Quotient coordinates of ``g (x) e_s``."""
        return self.coords[:, s :: self.d] @ self.expand(g)

    def projection_residual(self) -> float:
        p = self.corner_projection
        return max(opnorm(p - p.conj().T), opnorm(p @ p - p))


def build_gns(phi: Channel, params: TruncationParams | None = None) -> DilationModel:
    """Assemble the truncated Gram matrix and quotient by its null space."""
    params = params or TruncationParams()
    top = float(np.linalg.eigvalsh(phi.unit_image).max())
    if top > 1.0 + phi.tol_cp:
        raise NotContractive(f"||phi(e)|| = {top:.12g} exceeds 1")
    d = phi.d
    gens = enumerate_generators(d, params)
    offsets: dict[Word, int] = {}
    for i, g in enumerate(gens):
        offsets.setdefault(g.word, i)

    G, _ = gram_matrix(gens, phi)
    G = 0.5 * (G + G.conj().T)
    lam, U = np.linalg.eigh(G)
    top = float(lam[-1])
    if top <= 0:
        raise GramClipTooLarge("Gram matrix has no positive eigenvalue")
    clip = max(0.0, -float(lam[0]))
    if clip > CLIP_LIMIT * top:
        raise GramClipTooLarge(
            f"most negative Gram eigenvalue {-clip:.3e} is below -{CLIP_LIMIT:g} * {top:.3e}"
        )
    keep = lam > params.eig_tol * top
    root = np.sqrt(lam[keep])
    coords = root[:, None] * U[:, keep].conj().T
    embed = U[:, keep] / root[None, :]

    zero = Word((0,))
    hs = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d * d):
        for b in range(d * d):
            ia = (offsets[zero] + a) * d
            ib = (offsets[zero] + b) * d
            hs[a, b] = np.trace(G[ia : ia + d, ib : ib + d])
    corner_min = float(np.linalg.eigvalsh(0.5 * (hs + hs.conj().T))[0])

    iso = np.stack([coords[:, (offsets[zero] + p * d + p) * d + p] for p in range(d)], axis=1)
    corner_cols = coords[:, [(offsets[zero] + k) * d + s for k in range(d * d) for s in range(d)]]
    left, sv, _ = np.linalg.svd(corner_cols, full_matrices=False)
    span = left[:, sv > 1e-10 * max(1.0, sv[0])]
    projection = span @ span.conj().T

    return DilationModel(
        phi=phi,
        params=params,
        generators=gens,
        word_offsets=offsets,
        gram=G,
        eigenvalues=lam,
        rank=int(keep.sum()),
        coords=coords,
        clip=clip,
        corner_gram_min=corner_min,
        corner_isometry=iso,
        corner_projection=projection,
        _embed=embed,
    )


@dataclass(eq=False)
class RepresentedOperator:
    """Left multiplication by a generator, in quotient coordinates.

    ``matrix`` agrees with the generator's action on the span of the basis
    vectors listed in ``domain`` and vanishes on the orthogonal complement
    of that span.  ``residual`` measures how far the action fails to pass
    to the quotient (a least-squares misfit, zero in exact arithmetic).
    """

    matrix: np.ndarray
    domain: np.ndarray  # sorted basis indices
    residual: float
    complete: bool

    def covers(self, indices: Sequence[int]) -> bool:
        return bool(np.all(np.isin(indices, self.domain)))


def represent(
    model: DilationModel,
    g: Generator | FiniteSection,
    strict: bool = True,
) -> RepresentedOperator:
    """Matrix of ``xi -> g xi`` on the quotient space.

    With ``strict=True`` every basis generator must stay inside the
    truncation after multiplication, otherwise :class:`OutOfTruncation`
    names the first offender.  With ``strict=False`` the operator is built
    on the admissible basis vectors only and ``domain`` records them.
    """
    terms = g.terms if isinstance(g, FiniteSection) else (g,)
    if not terms:
        raise ValueError("cannot represent an empty section")
    d = model.d
    for term in terms:
        if term.d != d:
            raise ShapeMismatch(f"generator has dimension {term.d}, model has {d}")

    n_gen = len(model.generators)
    cols = np.zeros((n_gen, n_gen), dtype=complex)
    ok = np.ones(n_gen, dtype=bool)
    for k, u in enumerate(model.generators):
        for term in terms:
            prod = gen_product(term, u)
            if not model.params.admits(prod.word):
                if strict:
                    raise OutOfTruncation(
                        f"{format_word(term.word)} times basis element "
                        f"{model.basis_label(k * d)} has word {format_word(prod.word)}"
                    )
                ok[k] = False
                break
            cols[:, k] += model.expand(prod)
    gen_domain = np.flatnonzero(ok)
    domain = (gen_domain[:, None] * d + np.arange(d)[None, :]).ravel()
    if domain.size == 0:
        return RepresentedOperator(np.zeros((model.rank, model.rank), dtype=complex), domain, 0.0, False)

    # images of basis vectors (u, e_s) are sum_v C[v, u] (v, e_s): C (x) I_d
    C = np.kron(cols[:, gen_domain], np.eye(d))
    images = model.coords @ C
    source = model.coords[:, domain]
    sol, *_ = np.linalg.lstsq(source.T, images.T, rcond=None)
    T = sol.T
    misfit = opnorm(T @ source - images)
    return RepresentedOperator(T, domain, misfit, bool(ok.all()))


def compress_to_A(model: DilationModel, x) -> np.ndarray:
    """Read ``p x p`` as a d x d matrix through the level-zero vectors.

    Every corner vector ``e (x) e_p`` has ``d`` representatives
    ``((0), E_pr) (x) e_r`` in the catalog.  The returned matrix uses the
    diagonal representatives; :func:`compress_with_residual` also reports
    the spread across all of them.
    """
    return compress_with_residual(model, x)[0]


def compress_with_residual(model: DilationModel, x) -> tuple[np.ndarray, float]:
    if model.corner_gram_min <= CORNER_LIMIT:
        raise CornerDegenerate(
            f"level-zero Gram block has least eigenvalue {model.corner_gram_min:.3e}"
        )
    d = model.d
    zero = Word((0,))
    reps = [[model.basis_index(zero, [p * d + r], r) for r in range(d)] for p in range(d)]
    if isinstance(x, RepresentedOperator):
        needed = [i for row in reps for i in row]
        if not x.covers(needed):
            raise OutOfTruncation("operator is not defined on the level-zero corner")
        op = x.matrix
    else:
        op = np.asarray(x, dtype=complex)
        if op.shape != (model.rank, model.rank):
            raise ShapeMismatch(f"operator has shape {op.shape}, model rank is {model.rank}")
    Q = model.coords
    out = np.empty((d, d), dtype=complex)
    spread = 0.0
    for p in range(d):
        for q in range(d):
            readings = [
                np.vdot(Q[:, reps[p][r]], op @ Q[:, reps[q][s]]) for r in range(d) for s in range(d)
            ]
            out[p, q] = readings[p * d + q]
            spread = max(spread, max(abs(z - out[p, q]) for z in readings))
    return out, spread


def _admissible_for_corner(model: DilationModel, g: Generator) -> bool:
    return model.params.admits(g.word * Word((0,)))


def _timed(record_fn):
    start = time.perf_counter()
    rec = record_fn()
    rec.elapsed_ms = (time.perf_counter() - start) * 1e3
    return rec


def verify_moment_formula(
    model: DilationModel,
    trials: int = 100,
    seed: int = 0,
    max_k: int = 4,
    threshold: float = 1e-8,
    max_attempts: int | None = None,
) -> CheckRecord:
    """Compare corner compression of random generator products with the moment recursion.

    Trial ``t`` draws from a generator seeded with ``seed + t``: an index
    tuple of length ``<= max_k`` with entries ``<= N`` and Gaussian matrices.
    Products whose image of the corner leaves the truncation are skipped
    and counted.
    """

    def run() -> CheckRecord:
        d = model.d
        attempts = max_attempts or 50 * trials
        worst = 0.0
        used = skipped = 0
        t = 0
        while used < trials and t < attempts:
            rng = np.random.default_rng(seed + t)
            t += 1
            k = int(rng.integers(1, max_k + 1))
            idx = [int(n) for n in rng.integers(0, model.params.N + 1, size=k)]
            mats = [random_element(rng, d) for _ in range(k)]
            g = reduce(gen_product, [gen_make([n], [a]) for n, a in zip(idx, mats)])
            if not _admissible_for_corner(model, g):
                skipped += 1
                continue
            op = represent(model, g, strict=False)
            got, spread = compress_with_residual(model, op)
            expected = moment_eval(idx, mats, model.phi)
            worst = max(worst, opnorm(got - expected), spread, op.residual)
            used += 1
        rate = skipped / t if t else 0.0
        rec = CheckRecord(
            "moment_formula",
            {"d": d, "N": model.params.N, "L": model.params.L, "trials": trials, "samples": used},
            worst if used >= trials else float("nan"),
            threshold,
            seed=seed,
            skip_rate=rate,
        )
        if used < trials:
            rec.detail = f"only {used} admissible samples in {t} attempts"
        return rec

    return _timed(run)


def verify_standard_properties(
    model: DilationModel,
    threshold: float = 1e-8,
    unital_tol: float = 1e-10,
) -> list[CheckRecord]:
    """Corner identity of the shifted unit and corner readout of ``E0``.

    Returns two records: ``corner_identity`` (the shifted unit fixes every
    level-zero vector) and ``hereditarity`` (compressing each admissible
    catalog generator reproduces its expectation).
    """
    phi = model.phi
    if not channel_is_unital(phi, unital_tol):
        raise NotUnital("standard-dilation properties need phi(e) = e")
    d = model.d
    params = {"d": d, "N": model.params.N, "L": model.params.L}

    def corner_identity() -> CheckRecord:
        F = represent(model, gen_make([1], [np.eye(d)]), strict=False)
        corner = model.corner_indices()
        if not F.covers(corner):
            raise OutOfTruncation("shifted unit is not defined on the corner; need L >= 2")
        Q = model.coords
        worst = F.residual
        for i in corner:
            xi = Q[:, i]
            worst = max(worst, float(np.linalg.norm(F.matrix @ xi - xi)))
        return CheckRecord("corner_identity", dict(params), worst, threshold)

    def hereditarity() -> CheckRecord:
        worst = 0.0
        count = 0
        for g in model.generators:
            if not _admissible_for_corner(model, g):
                continue
            op = represent(model, g, strict=False)
            got, spread = compress_with_residual(model, op)
            worst = max(worst, opnorm(got - expectation_E0(g, phi)), spread, op.residual)
            count += 1
        return CheckRecord("hereditarity", dict(params, generators=count), worst, threshold)

    return [_timed(corner_identity), _timed(hereditarity)]


def verify_product_rule(
    model: DilationModel,
    pairs: Sequence[tuple[Generator, Generator]],
    threshold: float = 1e-8,
) -> CheckRecord:
    """``pi(g) pi(h) = pi(g h)`` on basis vectors where all three products stay inside."""

    def run() -> CheckRecord:
        Q = model.coords
        worst = 0.0
        checked = 0
        for g, h in pairs:
            pg = represent(model, g, strict=False)
            ph = represent(model, h, strict=False)
            pgh = represent(model, gen_product(g, h), strict=False)
            for k, u in enumerate(model.generators):
                hu = gen_product(h, u)
                if not (model.params.admits(hu.word) and model.params.admits(gen_product(g, hu).word)):
                    continue
                for s in range(model.d):
                    i = k * model.d + s
                    lhs = pg.matrix @ (ph.matrix @ Q[:, i])
                    rhs = pgh.matrix @ Q[:, i]
                    worst = max(worst, float(np.linalg.norm(lhs - rhs)))
                    checked += 1
        return CheckRecord("product_rule", {"pairs": len(pairs), "vectors": checked}, worst, threshold)

    return _timed(run)


def verify_adjoint_rule(
    model: DilationModel,
    gens: Sequence[Generator],
    threshold: float = 1e-8,
) -> CheckRecord:
    """``<pi(g) xi, eta> = <xi, pi(g^*) eta>`` for basis vectors inside both domains."""

    def run() -> CheckRecord:
        Q = model.coords
        worst = 0.0
        for g in gens:
            pg = represent(model, g, strict=False)
            pgs = represent(model, g.star, strict=False)
            dom_g = pg.domain
            dom_s = pgs.domain
            left = (pg.matrix @ Q[:, dom_g]).conj().T @ Q[:, dom_s]
            right = Q[:, dom_g].conj().T @ (pgs.matrix @ Q[:, dom_s])
            if left.size:
                worst = max(worst, float(np.abs(left - right).max()))
        return CheckRecord("adjoint_rule", {"generators": len(gens)}, worst, threshold)

    return _timed(run)


def verify_truncation_consistency(
    phi: Channel,
    params: TruncationParams,
    trials: int = 20,
    seed: int = 0,
    threshold: float = 1e-8,
) -> CheckRecord:
    """Corner readouts agree between a truncation and its enlargements in ``N`` and ``L``."""

    def run() -> CheckRecord:
        base = build_gns(phi, params)
        bigger = [
            build_gns(phi, TruncationParams(params.N + 1, params.L, params.eig_tol)),
            build_gns(phi, TruncationParams(params.N, params.L + 1, params.eig_tol)),
        ]
        worst = 0.0
        used = 0
        t = 0
        while used < trials and t < 50 * trials:
            rng = np.random.default_rng(seed + t)
            t += 1
            k = int(rng.integers(1, 4))
            idx = [int(n) for n in rng.integers(0, params.N + 1, size=k)]
            mats = [random_element(rng, phi.d) for _ in range(k)]
            g = gen_make(idx, mats)
            if not _admissible_for_corner(base, g):
                continue
            ref = compress_to_A(base, represent(base, g, strict=False))
            for other in bigger:
                got = compress_to_A(other, represent(other, g, strict=False))
                worst = max(worst, opnorm(got - ref))
            used += 1
        return CheckRecord(
            "truncation_consistency",
            {"d": phi.d, "N": params.N, "L": params.L, "samples": used},
            worst,
            threshold,
            seed=seed,
        )

    return _timed(run)
