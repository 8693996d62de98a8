"""Indicator polynomials over the turn register shared by both turn encodings.

Turn ``t`` of an ``n``-residue chain is described by:

* ``t = 0``: the fixed ``+x`` step (constant indicators),
* ``t = 1``: one free bit ``q0`` choosing ``+x`` or ``+y``,
* ``t >= 2``: a code of ``w`` bits at variables ``1 + w(t-2) .. w(t-2) + w``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, Tuple, Union

from ..lattice import (
    CUBIC,
    CUBIC_CODES,
    CUBIC_INVALID,
    DIRECTIONS,
    PLANAR_CODES,
    PX,
    PY,
    Direction,
    bits_per_turn,
    second_turn,
)
from ..pbp import Polynomial, literal, product

Code = Union[Direction, str, Tuple[int, ...]]


def turn_offset(t: int, lattice: str = CUBIC) -> int:
    """Index of the first register bit of turn ``t >= 2``."""
    return 1 + bits_per_turn(lattice) * (t - 2)


def _as_code(d: Code, lattice: str) -> Tuple[int, ...] | None:
    if isinstance(d, Direction):
        table = CUBIC_CODES if lattice == CUBIC else PLANAR_CODES
        for c, dd in table.items():
            if dd == d:
                return c
        return None
    if isinstance(d, str):
        return tuple(int(ch) for ch in d)
    return tuple(d)


def code_indicator(t: int, code: Tuple[int, ...], lattice: str = CUBIC) -> Polynomial:
    """Product of literals that is 1 exactly when turn ``t >= 2`` carries ``code``."""
    base = turn_offset(t, lattice)
    return product(literal(base + r, negated=(b == 0)) for r, b in enumerate(code))


@lru_cache(maxsize=None)
def _turn_indicator(t: int, d: Direction, lattice: str) -> Polynomial:
    if t == 0:
        return Polynomial.constant(1 if d == PX else 0)
    if t == 1:
        if d not in (PX, PY):
            return Polynomial.zero()
        q0 = literal(0)
        return q0 if second_turn(1, lattice) == d else literal(0, negated=True)
    code = _as_code(d, lattice)
    if code is None:
        return Polynomial.zero()
    return code_indicator(t, code, lattice)


def turn_indicator(t: int, d: Code, lattice: str = CUBIC) -> Polynomial:
    """0/1 polynomial that equals 1 iff turn ``t`` goes in direction ``d``.

    ``d`` may also be a raw code such as ``"000"`` for turns ``t >= 2``.
    """
    if t < 0:
        raise ValueError("turn index must be >= 0")
    if isinstance(d, Direction):
        return _turn_indicator(t, d, lattice)
    if t < 2:
        return Polynomial.zero()
    return code_indicator(t, _as_code(d, lattice), lattice)


def invalid_codes(lattice: str = CUBIC) -> Tuple[Tuple[int, ...], ...]:
    return CUBIC_INVALID if lattice == CUBIC else ()


@lru_cache(maxsize=None)
def step_component(t: int, axis: str, lattice: str = CUBIC) -> Polynomial:
    """Signed displacement of turn ``t`` along ``axis``: ``d_{+a} - d_{-a}``."""
    return turn_indicator(t, Direction(axis, 1), lattice) - turn_indicator(t, Direction(axis, -1), lattice)


def axes(lattice: str = CUBIC) -> Tuple[str, ...]:
    return ("x", "y", "z") if lattice == CUBIC else ("x", "y")


def position_polynomials(m: int, lattice: str = CUBIC) -> Tuple[Polynomial, Polynomial, Polynomial]:
    """Coordinates of residue ``m`` as polynomials over the turn register."""
    if m < 0:
        raise ValueError("residue index must be >= 0")
    out = []
    for a in ("x", "y", "z"):
        p = Polynomial.zero()
        if a in axes(lattice):
            for t in range(m):
                p = p + step_component(t, a, lattice)
        out.append(p)
    return tuple(out)  # type: ignore[return-value]


@lru_cache(maxsize=None)
def distance_polynomial(j: int, k: int, lattice: str = CUBIC) -> Polynomial:
    """Squared Euclidean distance between residues ``j`` and ``k``."""
    lo, hi = min(j, k), max(j, k)
    total = Polynomial.zero()
    for a in axes(lattice):
        diff = Polynomial.zero()
        for t in range(lo, hi):
            diff = diff + step_component(t, a, lattice)
        total = total + diff * diff
    return total


def back_pairs(lattice: str = CUBIC):
    """Direction pairs ``(d, -d)`` that make consecutive turns retrace an edge."""
    dirs = [d for d in DIRECTIONS if lattice == CUBIC or d.axis != "z"]
    return [(d, d.opposite) for d in dirs]
