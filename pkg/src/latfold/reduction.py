"""Quadratization by product substitution.

Each step picks the variable pair ``(u, v)`` that co-occurs in the most
terms of degree >= 3, introduces an ancilla ``w`` standing for ``u v`` and
adds the gadget

    M (u v - 2 u w - 2 v w + 3 w)

which is 0 when ``w = u v`` and at least ``M`` otherwise.  With
``M = 1 + 2 * sum |c|`` over the terms rewritten in that step, a wrong ``w``
can never pay for itself, so minimizing over the ancillas recovers the
original value on every assignment of the original variables.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Tuple

import numpy as np

from .encoders.base import ANCILLA, EncodedProblem, Substitution
from .errors import CapExceeded
from .pbp import Polynomial, mask_indices

DEFAULT_CAP = 24


def _pick_pair(masks) -> Optional[Tuple[int, int]]:
    counts: Counter = Counter()
    for m in masks:
        idx = mask_indices(m)
        if len(idx) >= 3:
            counts.update(combinations(idx, 2))
    if not counts:
        return None
    best = max(counts.values())
    return min(p for p, c in counts.items() if c == best)


def reduce_to_quadratic(p: Polynomial, start_index: Optional[int] = None) -> Tuple[Polynomial, List[Substitution]]:
    """Return an equivalent polynomial of degree <= 2 and its substitution map.

    Ancillas are numbered from ``start_index`` (default: one past the highest
    variable of ``p``).  A polynomial of degree <= 2 comes back unchanged.
    """
    if p.degree <= 2:
        return p, []
    nxt = (max(p.variables) + 1) if start_index is None else start_index
    if p.variables and nxt <= max(p.variables):
        raise ValueError("ancilla indices would collide with existing variables")
    terms = p.masks()
    subs: List[Substitution] = []
    while True:
        pair = _pick_pair(terms)
        if pair is None:
            break
        u, v = pair
        w = nxt
        nxt += 1
        uv = (1 << u) | (1 << v)
        bw = 1 << w
        affected = [m for m in terms if m.bit_count() >= 3 and m & uv == uv]
        weight = 1 + 2 * sum(abs(terms[m]) for m in affected)
        for m in affected:
            c = terms.pop(m)
            nm = (m & ~uv) | bw
            terms[nm] = terms.get(nm, 0) + c
        for mask, c in ((uv, weight), ((1 << u) | bw, -2 * weight), ((1 << v) | bw, -2 * weight), (bw, 3 * weight)):
            terms[mask] = terms.get(mask, 0) + c
        terms = {m: c for m, c in terms.items() if c != 0}
        subs.append(Substitution(w, u, v, weight))
    return Polynomial._wrap(terms), subs


def expand_ancillas(bits, subs: List[Substitution]) -> List[int]:
    """Extend an assignment of the original variables with consistent ancillas."""
    out = list(int(b) for b in bits)
    need = max((s.ancilla for s in subs), default=-1) + 1
    out.extend([0] * max(0, need - len(out)))
    for s in subs:
        out[s.ancilla] = out[s.u] & out[s.v]
    return out


@dataclass
class ReductionReport:
    original_min: object
    reduced_min: object
    original_argmin: List[Tuple[int, ...]]
    projected_argmin: List[Tuple[int, ...]]
    num_original: int
    num_ancillas: int
    gadgets: int = 0
    ok: bool = field(init=False)

    def __post_init__(self):
        self.ok = self.original_min == self.reduced_min and self.original_argmin == self.projected_argmin


def _exact(x: Fraction):
    return x.numerator if x.denominator == 1 else x


def _bits(x: int, k: int) -> Tuple[int, ...]:
    return tuple((x >> i) & 1 for i in range(k))


def verify_reduction(
    original: Polynomial,
    reduced: Polynomial,
    subs: List[Substitution],
    cap: int = DEFAULT_CAP,
    num_original: Optional[int] = None,
) -> ReductionReport:
    """Exhaustively certify that minimum and projected minimizers are preserved.

    Both polynomials are tabulated with the subset-sum transform; with the
    original variables in the low bits the reduced table reshapes to
    ``(ancilla assignments, original assignments)``.
    """
    from .solve import energy_table

    orig_vars = list(range(num_original)) if num_original is not None else sorted(set(original.variables))
    anc = sorted({s.ancilla for s in subs} | (set(reduced.variables) - set(orig_vars)))
    k, total = len(orig_vars), len(orig_vars) + len(anc)
    if total > cap:
        raise CapExceeded(f"{total} variables exceed the exhaustive cap of {cap}")
    pos = {v: c for c, v in enumerate(orig_vars + anc)}
    ot, oden = energy_table(original.relabel(pos), k)
    rt, rden = energy_table(reduced.relabel(pos), total)
    proj = rt.reshape(1 << len(anc), 1 << k).min(axis=0)
    omin, rmin = Fraction(int(ot.min()), oden), Fraction(int(proj.min()), rden)
    oarg = sorted(_bits(int(x), k) for x in np.flatnonzero(ot == ot.min()))
    parg = sorted(_bits(int(x), k) for x in np.flatnonzero(proj == proj.min()))
    return ReductionReport(_exact(omin), _exact(rmin), oarg, parg, k, len(anc), len(subs))


def reduce_problem(problem: EncodedProblem) -> EncodedProblem:
    """Quadratize an encoded problem; ancillas are appended to its registry."""
    poly, subs = reduce_to_quadratic(problem.polynomial, problem.num_vars)
    reg = problem.registry.copy()
    for s in subs:
        idx = reg.add(ANCILLA, s.u, s.v)
        assert idx == s.ancilla
    meta = dict(problem.metadata)
    meta.update({"max_degree": poly.degree, "num_terms": len(poly), "gadgets": len(subs)})
    return problem.with_polynomial(poly, registry=reg, reduction=list(problem.reduction) + subs, metadata=meta)
