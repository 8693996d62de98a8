"""Ancilla-free turn encoding built from half-adder sum strings.

For residues ``i < j`` and a direction ``d`` the sum string ``s_d(i, j)`` is
the binary count of turns ``i .. j-1`` that go in direction ``d``.  Residues
coincide when the ``+a`` and ``-a`` counts agree on every axis, and touch when
they agree on two axes and differ by exactly one on the third.

Counting ``n`` bits needs only ``L = ceil(log2(n + 1))`` output digits.  The
pruned network ripples input ``k`` through ``min(k, L)`` positions instead of
``k``, which drops the adder count from ``n(n+1)/2`` to ``O(n log n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

from ..errors import SequenceTooShort
from ..lattice import CUBIC, Direction, turn_bit_count
from ..pbp import Polynomial, poly_sum, product, xnor, xor
from ..potentials import InteractionMatrix, can_interact
from .base import TURN, EncodedProblem, VariableRegistry, default_penalty
from .turns import axes, invalid_codes, turn_indicator

NAME = "turn-circuit"

W = TypeVar("W")


def output_width(n: int) -> int:
    """Digits needed for a count of ``n`` bits: ``ceil(log2(n + 1))``."""
    return max(n, 0).bit_length()


def h_counts(n: int) -> Tuple[int, int, int]:
    """``(h_total, n_redun, h_improv)`` for a network summing ``n`` bits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    h_total = n * (n + 1) // 2
    n_redun = n - output_width(n)
    h_improv = h_total - n_redun * (n_redun + 1) // 2
    return h_total, n_redun, h_improv


def half_adder(x, y):
    """``(carry, sum) = (x AND y, x XOR y)`` for 0/1-valued polynomials."""
    c = x * y
    return c, x + y - 2 * c


@dataclass
class HalfAdderNet:
    """Result of running a counting network.

    ``bits[r]`` is digit ``r`` (least significant first), ``dropped`` holds
    the carries that fall off the top of the network, which are identically
    zero for a correct counter.
    """

    bits: List
    adders: int
    dropped: List


def count_bits(
    inputs: Sequence[W],
    zero: W,
    adder: Callable[[W, W], Tuple[W, W]] = half_adder,
    pruned: bool = True,
) -> HalfAdderNet:
    """Sum ``inputs`` with a layered half-adder network.

    Input ``k`` (1-based) is added to the accumulator by rippling its carry
    through positions ``1..k`` (unpruned) or ``1..min(k, L)`` (pruned).
    """
    n = len(inputs)
    width = n if not pruned else output_width(n)
    acc: List = [zero] * width
    adders = 0
    dropped = []
    for k, x in enumerate(inputs, 1):
        carry = x
        for p in range(min(k, width)):
            carry, acc[p] = adder(acc[p], carry)
            adders += 1
        dropped.append(carry)
    return HalfAdderNet(acc, adders, dropped)


def count_adders(n: int, pruned: bool = True) -> int:
    """Adders in the network for ``n`` inputs, from a structural dry run."""
    return count_bits([None] * n, None, lambda a, b: (None, None), pruned).adders


@dataclass
class SumString:
    i: int
    j: int
    direction: Direction
    bits: List[Polynomial]
    adders: int

    def value(self) -> Polynomial:
        return poly_sum(b * (1 << r) for r, b in enumerate(self.bits))


@lru_cache(maxsize=4096)
def build_sum_string(i: int, j: int, direction: Direction, lattice: str = CUBIC, pruned: bool = True) -> SumString:
    """Digits of the number of turns ``i..j-1`` going in ``direction``.

    Turns 0 and 1 feed constant and affine inputs (``+x`` and ``q0``-dependent).
    """
    if j < i + 1:
        raise ValueError("sum strings need j > i")
    inputs = [turn_indicator(t, direction, lattice) for t in range(i, j)]
    net = count_bits(inputs, Polynomial.zero(), half_adder, pruned)
    return SumString(i, j, direction, net.bits, net.adders)


def _pair_strings(i: int, j: int, axis: str, lattice: str) -> Tuple[SumString, SumString]:
    return (
        build_sum_string(i, j, Direction(axis, 1), lattice),
        build_sum_string(i, j, Direction(axis, -1), lattice),
    )


def _equal_digits(a: Sequence[Polynomial], b: Sequence[Polynomial]) -> Polynomial:
    return product(xnor(x, y) for x, y in zip(a, b))


def overlap_term(i: int, j: int, lattice: str = CUBIC) -> Polynomial:
    """1 exactly when residues ``i`` and ``j`` sit on the same vertex."""
    if (j - i) % 2 or j < i + 2:
        raise ValueError("overlap terms are defined for even separations >= 2")
    out = Polynomial.constant(1)
    for a in axes(lattice):
        plus, minus = _pair_strings(i, j, a, lattice)
        out = out * _equal_digits(plus.bits, minus.bits)
        if not out:
            break
    return out


def differ_by_one(s: Sequence[Polynomial], t: Sequence[Polynomial]) -> Polynomial:
    """``[|s - t| = 1]`` for two digit strings, least significant first.

    Either the lowest digit differs and all others agree, or for some
    position ``p >= 2`` the low ``p`` digits of ``s`` read ``10..0`` or
    ``01..1``, ``t`` is their complement, and the digits above ``p`` agree.
    """
    L = len(s)
    first = xor(s[0], t[0]) * product(xnor(s[r], t[r]) for r in range(1, L))
    parts = [first]
    for p in range(2, L + 1):
        term = xor(s[p - 2], s[p - 1])
        term = term * product(xnor(s[r], s[r + 1]) for r in range(p - 2))
        if not term:
            continue
        term = term * product(xor(s[r], t[r]) for r in range(p))
        if not term:
            continue
        term = term * product(xnor(s[r], t[r]) for r in range(p, L))
        parts.append(term)
    return poly_sum(parts)


def adjacency(i: int, j: int, axis: str, lattice: str = CUBIC) -> Polynomial:
    """1 exactly when residues ``i`` and ``j`` are unit neighbours along ``axis``."""
    if (j - i) % 2 == 0 or j < i + 3:
        raise ValueError("adjacency is defined for odd separations >= 3")
    out = Polynomial.constant(1)
    for w in axes(lattice):
        if w == axis:
            continue
        plus, minus = _pair_strings(i, j, w, lattice)
        out = out * _equal_digits(plus.bits, minus.bits)
        if not out:
            return out
    plus, minus = _pair_strings(i, j, axis, lattice)
    return out * differ_by_one(plus.bits, minus.bits)


def build_h_olap(n: int, lam, lattice: str = CUBIC) -> Polynomial:
    """``lam`` times the number of coinciding residue pairs (even separations)."""
    parts = [overlap_term(i, j, lattice) for i in range(n) for j in range(i + 2, n, 2)]
    return poly_sum(parts) * lam


def build_h_redun(n: int, lam, lattice: str = CUBIC) -> Polynomial:
    parts = [turn_indicator(t, code, lattice) for t in range(2, n - 1) for code in invalid_codes(lattice)]
    return poly_sum(parts) * lam


def build_h_pair(n: int, P: InteractionMatrix, lattice: str = CUBIC) -> Polynomial:
    parts = []
    for i in range(n):
        for j in range(i + 3, n):
            if not can_interact(i, j) or P[i, j] == 0:
                continue
            touch = poly_sum(adjacency(i, j, a, lattice) for a in axes(lattice))
            parts.append(touch * P[i, j])
    return poly_sum(parts)


def registry(n: int, lattice: str = CUBIC) -> VariableRegistry:
    reg = VariableRegistry()
    for t in range(turn_bit_count(n, lattice)):
        reg.add(TURN, t)
    return reg


def penalty_defaults(P: InteractionMatrix) -> Dict[str, object]:
    lam = default_penalty(P)
    return {"lambda_olap": lam, "lambda_redun": lam}


def encode(
    sequence: str,
    P: InteractionMatrix,
    penalties: Optional[Dict[str, object]] = None,
    lattice: str = CUBIC,
    redundancy_penalty: bool = True,
) -> EncodedProblem:
    """Build ``H_olap + H_pair`` (plus ``H_redun`` unless disabled) on ``3N-8`` bits."""
    n = len(sequence)
    if n < 4:
        raise SequenceTooShort(f"turn-circuit encoding needs at least 4 residues, got {n}")
    if len(P) != n:
        raise ValueError("interaction matrix size does not match the sequence")
    lam = penalty_defaults(P)
    lam.update(penalties or {})
    parts = [build_h_olap(n, lam["lambda_olap"], lattice), build_h_pair(n, P, lattice)]
    if redundancy_penalty:
        parts.append(build_h_redun(n, lam["lambda_redun"], lattice))
    else:
        lam.pop("lambda_redun", None)
    h = poly_sum(parts)
    adders = {
        f"{i}-{j}": build_sum_string(i, j, Direction(axes(lattice)[0], 1), lattice).adders
        for i in range(n)
        for j in range(i + 2, n)
    }
    meta = {"max_degree": h.degree, "num_terms": len(h), "adders_per_string": adders}
    return EncodedProblem(NAME, sequence, lattice, h, registry(n, lattice), lam, meta, interactions=P)
