"""Position-flag encoding on a radius-bounded cubic grid (nested shells).

Residue ``i`` may only occupy vertices of ``V_i``: the cubic-grid points within
L1 distance ``i`` of the origin whose parity matches ``i``.  Each (residue,
vertex) pair gets one flag qubit; the Hamiltonian is 2-local:

    H = H_one + H_conn + H_pair + H_olap
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from ..errors import SequenceTooShort
from ..lattice import CUBIC, DIRECTIONS, Coord, Fold
from ..pbp import Polynomial
from ..potentials import InteractionMatrix
from .base import SITE, EncodedProblem, VariableRegistry, default_penalty

NAME = "nested-shell"


def shell(i: int) -> List[Coord]:
    """``S_i``: vertices reachable from the origin in exactly ``i`` steps."""
    out = []
    for x in range(-i, i + 1):
        for y in range(-(i - abs(x)), i - abs(x) + 1):
            rest = i - abs(x) - abs(y)
            for z in range(-rest, rest + 1):
                if (abs(x) + abs(y) + abs(z)) % 2 == i % 2:
                    out.append((x, y, z))
    out.sort(key=lambda v: (abs(v[0]) + abs(v[1]) + abs(v[2]), v))
    return out


def shell_index_set(i: int) -> List[int]:
    if i <= 2:
        return [i]
    return list(range(1 if i % 2 else 2, i + 1, 2))


def vertex_set(i: int) -> List[Coord]:
    """``V_i``: the union of the shells residue ``i`` may occupy."""
    seen: Dict[Coord, None] = {}
    for s in shell_index_set(i):
        for v in shell(s):
            seen.setdefault(v, None)
    return sorted(seen, key=lambda v: (abs(v[0]) + abs(v[1]) + abs(v[2]), v))


def _neighbours(v: Coord):
    for d in DIRECTIONS:
        w = d.vector
        yield (v[0] + w[0], v[1] + w[1], v[2] + w[2])


@dataclass
class ShellSpace:
    """Flag layout for an ``n``-residue chain.

    ``qubitsets[i]`` lists the flag indices of residue ``i`` (the range
    ``gamma(i) .. gamma(i+1)-1``); ``site[q]`` is the vertex of flag ``q`` and
    ``residue[q]`` its residue; ``at_vertex[v]`` lists the flags on ``v``.
    """

    n: int
    vertex_sets: List[List[Coord]] = field(init=False)
    qubitsets: List[List[int]] = field(init=False)
    gamma: List[int] = field(init=False)
    site: List[Coord] = field(init=False)
    residue: List[int] = field(init=False)
    at_vertex: Dict[Coord, List[int]] = field(init=False)
    index: Dict[Tuple[int, Coord], int] = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise SequenceTooShort("nested-shell encoding needs at least 2 residues")
        self.vertex_sets = [vertex_set(i) for i in range(self.n)]
        self.gamma, self.qubitsets, self.site, self.residue = [], [], [], []
        self.at_vertex, self.index = {}, {}
        for i, vs in enumerate(self.vertex_sets):
            self.gamma.append(len(self.site))
            qs = []
            for v in vs:
                q = len(self.site)
                self.site.append(v)
                self.residue.append(i)
                self.at_vertex.setdefault(v, []).append(q)
                self.index[(i, v)] = q
                qs.append(q)
            self.qubitsets.append(qs)
        self.gamma.append(len(self.site))

    @property
    def num_qubits(self) -> int:
        return len(self.site)

    def neighbours(self, q: int) -> List[int]:
        """``eta(q)``: flags on vertices adjacent to the vertex of ``q``."""
        out = []
        for w in _neighbours(self.site[q]):
            out.extend(self.at_vertex.get(w, ()))
        return out

    def qubits_at(self, v: Coord) -> List[int]:
        """``theta(v)``."""
        return list(self.at_vertex.get(v, ()))

    def registry(self) -> VariableRegistry:
        reg = VariableRegistry()
        for q in range(self.num_qubits):
            reg.add(SITE, self.residue[q], *self.site[q])
        return reg

    def one_hot(self, fold: Fold) -> List[int]:
        """Flag assignment placing each residue of ``fold`` (origin-anchored)."""
        bits = [0] * self.num_qubits
        for i, c in enumerate(fold.coords):
            bits[self.index[(i, c)]] = 1
        return bits


def build_space(n: int) -> ShellSpace:
    return ShellSpace(n)


def build_h_one(space: ShellSpace, lam) -> Polynomial:
    terms = {(a, b): lam for qs in space.qubitsets for a, b in combinations(qs, 2)}
    return Polynomial(terms)


def build_h_conn(space: ShellSpace, lam) -> Polynomial:
    """``lam * (n - 1 - #adjacent consecutive flag pairs)``."""
    terms: Dict[Tuple[int, ...], object] = {(): lam * (space.n - 1)}
    for i in range(space.n - 1):
        nxt = set(space.qubitsets[i + 1])
        for qd in space.qubitsets[i]:
            for qu in space.neighbours(qd):
                if qu in nxt:
                    terms[(qd, qu)] = -lam
    return Polynomial(terms)


def build_h_olap(space: ShellSpace, lam) -> Polynomial:
    terms = {(a, b): lam for qs in space.at_vertex.values() for a, b in combinations(sorted(qs), 2)}
    return Polynomial(terms)


def build_h_pair(space: ShellSpace, P: InteractionMatrix) -> Polynomial:
    """Half the sum over ordered adjacent flag pairs, i.e. once per unordered pair."""
    terms: Dict[Tuple[int, int], object] = {}
    for qa in range(space.num_qubits):
        i = space.residue[qa]
        for qb in space.neighbours(qa):
            pij = P[i, space.residue[qb]]
            if pij != 0:
                key = (min(qa, qb), max(qa, qb))
                terms[key] = terms.get(key, 0) + Fraction(pij) / 2
    return Polynomial(terms)


def penalty_defaults(P: InteractionMatrix) -> Dict[str, object]:
    """Penalty weights that make every non-fold assignment cost more than any fold.

    ``lambda_conn = lambda_olap = 1 + sum|P|``.  ``lambda_one`` must be larger:
    a second flag on a residue can add up to 12 links and 6 contacts, so
    ``lambda_one = 1 + 12 lambda_conn + 6 max_i sum_j |P_ij| + sum_{i<j} |P_ij|``.
    """
    lam = default_penalty(P)
    half = P.abs_sum() / 2
    one = 1 + 12 * lam + 6 * P.row_abs_max() + half
    one = Fraction(one)
    return {
        "lambda_one": one.numerator if one.denominator == 1 else one,
        "lambda_conn": lam,
        "lambda_olap": lam,
    }


def encode(sequence: str, P: InteractionMatrix, penalties: Optional[Dict[str, object]] = None) -> EncodedProblem:
    n = len(sequence)
    if n < 2:
        raise SequenceTooShort("nested-shell encoding needs at least 2 residues")
    if len(P) != n:
        raise ValueError("interaction matrix size does not match the sequence")
    lam = penalty_defaults(P)
    lam.update(penalties or {})
    space = build_space(n)
    h = (
        build_h_one(space, lam["lambda_one"])
        + build_h_conn(space, lam["lambda_conn"])
        + build_h_pair(space, P)
        + build_h_olap(space, lam["lambda_olap"])
    )
    meta = {
        "max_degree": h.degree,
        "num_terms": len(h),
        "gamma": space.gamma,
        "vertex_set_sizes": [len(v) for v in space.vertex_sets],
    }
    return EncodedProblem(NAME, sequence, CUBIC, h, space.registry(), lam, meta, interactions=P)


def penalty_cliques(problem: EncodedProblem) -> List[Tuple[List[int], object]]:
    """``(flags, lambda)`` groups behind H_one (per residue) and H_olap (per vertex).

    Exact solvers use these to model the penalties through flag counts.
    """
    by_res: Dict[int, List[int]] = {i: [] for i in range(problem.n)}
    by_site: Dict[Coord, List[int]] = {}
    for q in problem.registry.indices(SITE):
        key = problem.registry[q].key
        by_res[key[0]].append(q)
        by_site.setdefault(tuple(key[1:4]), []).append(q)
    # residues first, so clique i is residue i
    out = [(by_res[i], problem.penalties["lambda_one"]) for i in range(problem.n)]
    out += [(qs, problem.penalties["lambda_olap"]) for qs in by_site.values() if len(qs) > 1]
    return out


def contact_bounds(problem: EncodedProblem):
    """Cuts ``#adjacent flag pairs between residues i, j <= 1 + 6 (C(k_i,2) + C(k_j,2))``.

    Valid at every 0/1 point: with at most one flag each the residues touch
    at most once; otherwise the count is at most ``6 min(k_i, k_j)`` and
    ``C(k, 2) >= k - 1`` covers it.  Refers to the residue cliques of
    :func:`penalty_cliques`.
    """
    site = {}
    res: Dict[int, List[int]] = {i: [] for i in range(problem.n)}
    for q in problem.registry.indices(SITE):
        key = problem.registry[q].key
        site[(key[0], tuple(key[1:4]))] = q
        res[key[0]].append(q)
    out = []
    for i in range(problem.n):
        for j in range(i + 1, problem.n):
            pairs = []
            for qa in res[i]:
                v = problem.registry[qa].key[1:4]
                for w in _neighbours(tuple(v)):
                    qb = site.get((j, w))
                    if qb is not None:
                        pairs.append((qa, qb))
            if pairs:
                out.append((pairs, 1, 6, [i, j]))
    return out


def symmetry_breaking(problem: EncodedProblem) -> List[Tuple[int, List[int]]]:
    """Dominance constraints ``x_o <= x_leader`` that keep some minimizer.

    H is invariant under the 48 lattice symmetries fixing the origin.  Any
    assignment can be rotated so residue 1's ``+x`` flag is set whenever any
    residue-1 flag is; the symmetries that fix ``+x`` then move any set flag
    of residue 2 among ``(1, +-1, 0), (1, 0, +-1)`` onto ``(1, 1, 0)``.
    """
    index = {}
    for q in problem.registry.indices(SITE):
        key = problem.registry[q].key
        index[(key[0], tuple(key[1:4]))] = q
    out = []
    if problem.n >= 2:
        lead = index[(1, (1, 0, 0))]
        others = [q for (i, _), q in index.items() if i == 1 and q != lead]
        out.append((lead, others))
    if problem.n >= 3:
        orbit = [(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1)]
        lead = index[(2, orbit[0])]
        out.append((lead, [index[(2, v)] for v in orbit[1:]]))
    return out
