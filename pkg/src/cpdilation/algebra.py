"""Matrix algebra M_d(C) and contractive completely positive maps on it.

Maps are stored by Kraus operators in the Heisenberg convention

    phi(a) = sum_i V_i^* a V_i,

so that phi is unital exactly when sum_i V_i^* V_i = I.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Sequence

import numpy as np

from .errors import AsymmetryTooLarge, NotContractive, ParseError, ShapeMismatch

__all__ = [
    "TOL_CP",
    "PSD_TOL",
    "Channel",
    "as_element",
    "channel_from_kraus",
    "channel_apply",
    "channel_power_apply",
    "channel_is_unital",
    "random_channel",
    "gaussian_matrix",
    "random_element",
    "psd_check",
    "opnorm",
    "encode_matrix",
    "decode_matrix",
    "format_matrix",
    "load_channel",
    "save_channel",
    "channel_to_dict",
    "channel_from_dict",
]

TOL_CP = 1e-10
PSD_TOL = 1e-8


def opnorm(a: np.ndarray) -> float:
    """Operator (spectral) norm; 0 for empty input."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def as_element(a, d: int | None = None) -> np.ndarray:
    """Coerce ``a`` to a complex square matrix, optionally checking its size."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ShapeMismatch(f"expected a {d}x{d} matrix, got {arr.shape[0]}x{arr.shape[1]}")
    return arr


@dataclass(frozen=True, eq=False)
class Channel:
    """A contractive completely positive map on M_d, held as a Kraus family."""

    d: int
    kraus: tuple[np.ndarray, ...]
    tol_cp: float = TOL_CP
    _stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 1:
            raise ShapeMismatch("dimension must be positive")
        if len(self.kraus) == 0:
            raise ShapeMismatch("a channel needs at least one Kraus operator")
        mats = []
        for v in self.kraus:
            v = as_element(v, self.d).copy()
            v.setflags(write=False)
            mats.append(v)
        stack = np.stack(mats)
        stack.setflags(write=False)
        object.__setattr__(self, "kraus", tuple(mats))
        object.__setattr__(self, "_stack", stack)
        top = float(np.linalg.eigvalsh(_hermitian_part(self.unit_image)).max())
        if top > 1.0 + self.tol_cp:
            raise NotContractive(
                f"largest eigenvalue of sum V*V is {top:.12g} > 1 + {self.tol_cp:g}"
            )

    @property
    def rank(self) -> int:
        return len(self.kraus)

    @property
    def unit_image(self) -> np.ndarray:
        """phi(e) = sum_i V_i^* V_i."""
        s = self._stack
        return np.einsum("rji,rjk->ik", s.conj(), s)

    def __call__(self, a) -> np.ndarray:
        return channel_apply(self, a)

    def power(self, n: int, a) -> np.ndarray:
        return channel_power_apply(self, n, a)

    def is_unital(self, tol: float = 1e-12) -> bool:
        return channel_is_unital(self, tol)

    def __repr__(self) -> str:
        return f"Channel(d={self.d}, rank={self.rank})"


def channel_from_kraus(d: int, kraus: Sequence, tol_cp: float = TOL_CP) -> Channel:
    return Channel(d, tuple(kraus), tol_cp)


def channel_apply(phi: Channel, a) -> np.ndarray:
    a = as_element(a, phi.d)
    s = phi._stack
    return np.einsum("rji,jk,rkl->il", s.conj(), a, s)


def channel_power_apply(phi: Channel, n: int, a) -> np.ndarray:
    if n < 0:
        raise ValueError("power must be nonnegative")
    out = as_element(a, phi.d)
    for _ in range(n):
        out = channel_apply(phi, out)
    return out


def channel_is_unital(phi: Channel, tol: float = 1e-12) -> bool:
    return opnorm(phi.unit_image - np.eye(phi.d)) <= tol


def gaussian_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Complex Gaussian matrix from Box-Muller normals, filled column-major.

    Each entry consumes two uniforms ``u1, u2`` from ``rng.random()`` (PCG64
    by default) and receives ``r cos(2 pi u2) + i r sin(2 pi u2)`` with
    ``r = sqrt(-2 log(1 - u1))``.
    """
    n = rows * cols
    u = rng.random(2 * n)
    radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    angle = 2.0 * np.pi * u[1::2]
    z = radius * np.cos(angle) + 1j * radius * np.sin(angle)
    return z.reshape((rows, cols), order="F")


def random_element(rng: np.random.Generator, d: int) -> np.ndarray:
    return gaussian_matrix(rng, d, d) / math.sqrt(2.0)


def random_channel(
    d: int,
    r: int,
    seed: int,
    unital: bool = True,
    lam: float = 1.0,
    tol_cp: float = TOL_CP,
) -> Channel:
    """Seeded random channel built from a Gaussian isometry.

    An ``(r d) x d`` Gaussian matrix is orthonormalized by a QR factorization
    whose ``R`` has positive diagonal; the resulting isometry ``W`` is cut
    into ``r`` consecutive ``d x d`` blocks.  Non-unital channels scale the
    blocks by ``sqrt(lam)`` so that ``phi(e) = lam * e``.
    """
    if r < 1:
        raise ValueError("Kraus count must be at least 1")
    if not unital and not (0.0 < lam <= 1.0):
        raise NotContractive(f"lambda must lie in (0, 1], got {lam}")
    rng = np.random.default_rng(seed)
    g = gaussian_matrix(rng, r * d, d)
    q, rr = np.linalg.qr(g)
    phases = np.diag(rr) / np.abs(np.diag(rr))
    w = q * phases[np.newaxis, :]
    scale = 1.0 if unital else math.sqrt(lam)
    blocks = [scale * w[i * d : (i + 1) * d, :] for i in range(r)]
    return Channel(d, tuple(blocks), tol_cp)


def _hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def psd_check(m, tol: float = PSD_TOL) -> tuple[bool, float]:
    """Positivity test for a (numerically) Hermitian matrix.

    Returns ``(passed, min_eigenvalue)`` for the Hermitian part of ``m``;
    passes when the smallest eigenvalue is at least ``-tol * max(1, ||m||)``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, opnorm(m))
    asym = opnorm(m - m.conj().T)
    if asym > 1e-8 * scale:
        raise AsymmetryTooLarge(f"||m - m*|| = {asym:.3g} exceeds 1e-8 * {scale:.3g}")
    low = float(np.linalg.eigvalsh(_hermitian_part(m))[0])
    return low >= -tol * scale, low


# -- text encoding ---------------------------------------------------------


def encode_matrix(a) -> list:
    """Nested-list form: rows of ``[re, im]`` pairs."""
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def decode_matrix(obj) -> np.ndarray:
    try:
        rows = [[_decode_entry(z) for z in row] for row in obj]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad matrix encoding: {exc}") from None
    if not rows or any(len(row) != len(rows) for row in rows):
        raise ParseError("matrix must be a nonempty square list of rows")
    return np.array(rows, dtype=complex)


def _decode_entry(z) -> complex:
    if isinstance(z, (int, float)) and not isinstance(z, bool):
        return complex(z)
    if isinstance(z, (list, tuple)) and len(z) == 2:
        return complex(float(z[0]), float(z[1]))
    raise ValueError(f"entry {z!r} is not [re, im]")


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # drop negative zero
    return "%.17g" % x


def format_matrix(a) -> str:
    """Render a matrix in the nested ``[re, im]`` encoding with 17 significant digits."""
    a = np.asarray(a, dtype=complex)
    rows = ", ".join(
        "[" + ", ".join(f"[{_fmt(z.real)}, {_fmt(z.imag)}]" for z in row) + "]" for row in a
    )
    return "[" + rows + "]"


def channel_to_dict(phi: Channel) -> dict:
    return {"d": phi.d, "kraus": [encode_matrix(v) for v in phi.kraus]}


def channel_from_dict(obj: dict, tol_cp: float = TOL_CP) -> Channel:
    if not isinstance(obj, dict) or "d" not in obj or "kraus" not in obj:
        raise ParseError("channel object needs fields 'd' and 'kraus'")
    d = obj["d"]
    if not isinstance(d, int) or d < 1:
        raise ParseError(f"'d' must be a positive integer, got {d!r}")
    kraus = [decode_matrix(m) for m in obj["kraus"]]
    return channel_from_kraus(d, kraus, tol_cp)


def load_channel(path: str | PathLike, tol_cp: float = TOL_CP) -> Channel:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
    return channel_from_dict(obj, tol_cp)


def save_channel(phi: Channel, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(channel_to_dict(phi), fh)
        fh.write("\n")
