"""Moment polynomials of a linear map on M_d.

For an index tuple ``(n_1, ..., n_k)`` the bracket ``[n; a_1, ..., a_k]`` is
the k-linear map determined by two rules:

* raising every index by one applies ``phi`` to the bracket;
* an index equal to zero splits the bracket into
  ``[left] a_l [right]``, with an empty side contributing nothing.

The canonical reduction used here splits at the leftmost zero and otherwise
lowers all indices by their minimum ``m`` in one step, wrapping the result
in ``phi^m``.  Every index sum strictly decreases, so the recursion ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .algebra import Channel, as_element, channel_power_apply, opnorm
from .errors import LengthMismatch, ParseError

__all__ = [
    "Leaf",
    "Phi",
    "Prod",
    "MomentExpr",
    "phi_node",
    "prod_node",
    "moment_normal_form",
    "moment_render",
    "moment_interpret",
    "moment_eval",
    "moment_eval_split",
    "zero_positions",
    "moment_symmetry_residual",
    "parse_moment_literal",
    "bind_names",
]


@dataclass(frozen=True)
class Leaf:
    slot: int  # position in the argument list


@dataclass(frozen=True)
class Phi:
    power: int
    child: "MomentExpr"


@dataclass(frozen=True)
class Prod:
    factors: tuple["MomentExpr", ...]


MomentExpr = Union[Leaf, Phi, Prod]


def phi_node(power: int, child: MomentExpr) -> MomentExpr:
    """``phi^power(child)`` with nested powers merged."""
    if power == 0:
        return child
    if isinstance(child, Phi):
        return Phi(power + child.power, child.child)
    return Phi(power, child)


def prod_node(factors: Sequence[MomentExpr]) -> MomentExpr:
    """Flattened product; a single factor is returned unchanged."""
    flat: list[MomentExpr] = []
    for f in factors:
        if isinstance(f, Prod):
            flat.extend(f.factors)
        else:
            flat.append(f)
    if not flat:
        raise ValueError("empty product")
    if len(flat) == 1:
        return flat[0]
    return Prod(tuple(flat))


def _check_indices(indices: Sequence[int]) -> tuple[int, ...]:
    idx = tuple(int(n) for n in indices)
    if not idx:
        raise LengthMismatch("index tuple must be nonempty")
    if min(idx) < 0:
        raise ValueError(f"indices must be nonnegative, got {idx}")
    return idx


def zero_positions(indices: Sequence[int]) -> list[int]:
    return [i for i, n in enumerate(indices) if n == 0]


def _normal_form(idx: tuple[int, ...], offset: int) -> MomentExpr:
    if 0 in idx:
        pos = idx.index(0)
        parts: list[MomentExpr] = []
        if pos > 0:
            parts.append(_normal_form(idx[:pos], offset))
        parts.append(Leaf(offset + pos))
        if pos + 1 < len(idx):
            parts.append(_normal_form(idx[pos + 1 :], offset + pos + 1))
        return prod_node(parts)
    m = min(idx)
    return phi_node(m, _normal_form(tuple(n - m for n in idx), offset))


def moment_normal_form(indices: Sequence[int], names: Sequence[str] | None = None) -> MomentExpr:
    """Canonical expression tree of ``[indices; names]``.

    Leaves refer to argument slots by position; ``names`` is only checked
    for length here and used later by :func:`moment_render`.
    """
    idx = _check_indices(indices)
    if names is not None and len(names) != len(idx):
        raise LengthMismatch(f"{len(idx)} indices but {len(names)} arguments")
    return _normal_form(idx, 0)


def moment_render(expr: MomentExpr, names: Sequence[str]) -> str:
    if isinstance(expr, Leaf):
        return str(names[expr.slot])
    if isinstance(expr, Phi):
        head = "phi" if expr.power == 1 else f"phi^{expr.power}"
        return f"{head}({moment_render(expr.child, names)})"
    return "*".join(moment_render(f, names) for f in expr.factors)


def moment_interpret(expr: MomentExpr, mats: Sequence[np.ndarray], phi: Channel) -> np.ndarray:
    """Evaluate an expression tree with concrete matrices."""
    if isinstance(expr, Leaf):
        return as_element(mats[expr.slot], phi.d)
    if isinstance(expr, Phi):
        return channel_power_apply(phi, expr.power, moment_interpret(expr.child, mats, phi))
    out = moment_interpret(expr.factors[0], mats, phi)
    for f in expr.factors[1:]:
        out = out @ moment_interpret(f, mats, phi)
    return out


def _eval(idx: tuple[int, ...], mats: Sequence[np.ndarray], phi: Channel) -> np.ndarray:
    if 0 in idx:
        pos = idx.index(0)
        out = mats[pos]
        if pos > 0:
            out = _eval(idx[:pos], mats[:pos], phi) @ out
        if pos + 1 < len(idx):
            out = out @ _eval(idx[pos + 1 :], mats[pos + 1 :], phi)
        return out
    m = min(idx)
    return channel_power_apply(phi, m, _eval(tuple(n - m for n in idx), mats, phi))


def _prepare(indices, mats, phi: Channel) -> tuple[tuple[int, ...], list[np.ndarray]]:
    idx = _check_indices(indices)
    if len(mats) != len(idx):
        raise LengthMismatch(f"{len(idx)} indices but {len(mats)} matrices")
    return idx, [as_element(a, phi.d) for a in mats]


def moment_eval(indices: Sequence[int], mats: Sequence, phi: Channel) -> np.ndarray:
    """Numeric value of ``[indices; mats]`` for the map ``phi``."""
    idx, arrs = _prepare(indices, mats, phi)
    return _eval(idx, arrs, phi)


def moment_eval_split(indices: Sequence[int], mats: Sequence, phi: Channel, position: int) -> np.ndarray:
    """Evaluate by applying the zero-splitting rule at ``position`` first.

    ``indices[position]`` must be zero; the two sides are then evaluated
    with the canonical recursion.  Agreement across positions is what makes
    the bracket well defined.
    """
    idx, arrs = _prepare(indices, mats, phi)
    if idx[position] != 0:
        raise ValueError(f"index at position {position} is {idx[position]}, not 0")
    out = arrs[position]
    if position > 0:
        out = _eval(idx[:position], arrs[:position], phi) @ out
    if position + 1 < len(idx):
        out = out @ _eval(idx[position + 1 :], arrs[position + 1 :], phi)
    return out


def moment_symmetry_residual(indices: Sequence[int], mats: Sequence, phi: Channel) -> float:
    """``|| [n; a]^* - [reversed n; reversed a^*] ||`` in operator norm."""
    idx, arrs = _prepare(indices, mats, phi)
    lhs = _eval(idx, arrs, phi).conj().T
    rhs = _eval(idx[::-1], [a.conj().T for a in arrs[::-1]], phi)
    return opnorm(lhs - rhs)


def parse_moment_literal(text: str) -> tuple[tuple[int, ...], list[str]]:
    """Parse ``"[n1,...,nk; name1,...,namek]"``."""
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")) or body.count(";") != 1:
        raise ParseError(f"expected '[n1,...,nk; name1,...,namek]', got {text!r}")
    left, right = body[1:-1].split(";")
    try:
        idx = tuple(int(tok) for tok in left.split(","))
    except ValueError:
        raise ParseError(f"indices must be integers in {text!r}") from None
    names = [tok.strip() for tok in right.split(",")]
    if any(n < 0 for n in idx):
        raise ParseError("indices must be nonnegative")
    if any(not name for name in names):
        raise ParseError(f"empty argument name in {text!r}")
    if len(names) != len(idx):
        raise LengthMismatch(f"{len(idx)} indices but {len(names)} arguments in {text!r}")
    return idx, names


def bind_names(names: Sequence[str], table: Mapping[str, np.ndarray] | None, d: int) -> list[np.ndarray]:
    """Resolve argument names; numeric literals stand for scalar multiples of e."""
    out = []
    for name in names:
        if table is not None and name in table:
            out.append(as_element(table[name], d))
            continue
        try:
            value = complex(name)
        except ValueError:
            raise KeyError(f"no matrix bound to {name!r}") from None
        out.append(value * np.eye(d, dtype=complex))
    return out
