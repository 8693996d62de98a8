"""Turn encoding with slack and interaction-flag ancillas.

``H = H_back + H_redun + H_olap + H_pair`` over the register

    [ turn bits (3N-8) | slack registers | interaction flags ]

Slack registers exist for every pair ``(i, j)``, ``j >= i + 4``, that can
coincide (even separation); each holds a big-endian integer ``alpha`` that
turns the constraint ``D_ij >= 1`` into the squared equality
``(2**mu - D_ij - alpha)**2 = 0``.  Flags exist for pairs that can touch (odd
separation, at least 3) and have a nonzero contact energy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..errors import IndexOutOfRange, NoSlackRegister, SequenceTooShort
from ..lattice import CUBIC, Direction, turn_bit_count
from ..pbp import Polynomial, literal, poly_sum
from ..potentials import InteractionMatrix, can_interact
from .base import FLAG, SLACK, TURN, EncodedProblem, VariableRegistry, default_penalty
from .turns import (
    back_pairs,
    distance_polynomial,
    invalid_codes,
    position_polynomials,
    turn_indicator,
)

NAME = "turn-ancilla"


def mu(j: int, k: int) -> int:
    """Slack width for a pair: ``ceil(2 log2 |j-k|)`` for even separations, else 0."""
    d = abs(j - k)
    if d == 0:
        raise ValueError("mu is undefined for j == k")
    if d % 2:
        return 0
    # smallest m with 2**m >= d**2
    return (d * d - 1).bit_length()


def slack_pairs(n: int) -> List[Tuple[int, int]]:
    return [(i, j) for i in range(n - 4) for j in range(i + 4, n) if mu(i, j) > 0]


def flag_pairs(n: int) -> List[Tuple[int, int]]:
    return [(j, k) for j in range(n - 3) for k in range(j + 3, n) if can_interact(j, k)]


def qubit_count_formula(n: int, lattice: str = CUBIC) -> int:
    """Closed-form register size: turn bits + slack bits + one flag per interacting pair."""
    n_slack = sum(mu(i, j) for i in range(n - 4) for j in range(i + 4, n))
    n_flag = sum((k - j) % 2 for j in range(n - 3) for k in range(j + 3, n))
    return turn_bit_count(n, lattice) + n_slack + n_flag


@dataclass
class Layout:
    """Register layout of one turn-ancilla problem."""

    n: int
    lattice: str = CUBIC
    flags_for: Optional[List[Tuple[int, int]]] = None
    registry: VariableRegistry = field(init=False)
    pointers: Dict[Tuple[int, int], int] = field(init=False)
    widths: Dict[Tuple[int, int], int] = field(init=False)
    flags: Dict[Tuple[int, int], int] = field(init=False)

    def __post_init__(self):
        if self.n < 4:
            raise SequenceTooShort(f"turn-ancilla encoding needs at least 4 residues, got {self.n}")
        reg = VariableRegistry()
        for t in range(turn_bit_count(self.n, self.lattice)):
            reg.add(TURN, t)
        self.pointers, self.widths = {}, {}
        for i, j in slack_pairs(self.n):
            m = mu(i, j)
            self.pointers[(i, j)] = len(reg)
            self.widths[(i, j)] = m
            for r in range(m):
                reg.add(SLACK, i, j, r)
        self.flags = {}
        pairs = flag_pairs(self.n) if self.flags_for is None else sorted(self.flags_for)
        for j, k in pairs:
            self.flags[(j, k)] = reg.add(FLAG, j, k)
        self.registry = reg

    def slack_pointer(self, j: int, k: int) -> int:
        key = (min(j, k), max(j, k))
        if key not in self.pointers:
            raise NoSlackRegister(f"pair {key} has no slack register (mu = 0)")
        return self.pointers[key]

    def slack_value(self, j: int, k: int) -> Polynomial:
        """``alpha_jk`` as a big-endian weighted sum over its register."""
        p = self.slack_pointer(j, k)
        m = self.widths[(min(j, k), max(j, k))]
        return poly_sum(literal(p + r) * (1 << (m - 1 - r)) for r in range(m))


def direction_indicator(j: int, d, n: int, lattice: str = CUBIC) -> Polynomial:
    """Indicator of turn ``j`` (``2 <= j <= n-2``) carrying direction or code ``d``."""
    if not 2 <= j <= n - 2:
        raise IndexOutOfRange(f"free turns run from 2 to {n - 2}, got {j}")
    return turn_indicator(j, d, lattice)


def build_h_back(n: int, lam, lattice: str = CUBIC) -> Polynomial:
    """Penalty for consecutive turns that retrace the same edge."""
    if n < 4:
        raise SequenceTooShort("H_back needs at least 4 residues")
    parts = []
    for j in range(1, n - 2):
        for d, opp in back_pairs(lattice):
            a = turn_indicator(j, d, lattice)
            if a:
                parts.append(a * turn_indicator(j + 1, opp, lattice))
    return poly_sum(parts) * lam


def build_h_redun(n: int, lam, lattice: str = CUBIC) -> Polynomial:
    """Penalty for the turn codes that name no direction (``000``, ``011``)."""
    if n < 4:
        raise SequenceTooShort("H_redun needs at least 4 residues")
    parts = [turn_indicator(j, code, lattice) for j in range(2, n - 1) for code in invalid_codes(lattice)]
    return poly_sum(parts) * lam


def overlap_gamma(layout: Layout, i: int, j: int, lam) -> Polynomial:
    """``lam * (2**mu - D_ij - alpha_ij)**2`` for one slack pair."""
    m = layout.widths[(i, j)]
    inner = Polynomial.constant(1 << m) - distance_polynomial(i, j, layout.lattice) - layout.slack_value(i, j)
    return (inner * inner) * lam


def build_h_olap(layout: Layout, lam) -> Polynomial:
    return poly_sum(overlap_gamma(layout, i, j, lam) for i, j in layout.pointers)


def build_h_pair(layout: Layout, P: InteractionMatrix) -> Polynomial:
    """``sum omega_jk P_jk (2 - D_jk)`` over flagged pairs."""
    parts = []
    for (j, k), idx in layout.flags.items():
        pjk = P[j, k]
        if pjk == 0:
            continue
        two_minus_d = 2 - distance_polynomial(j, k, layout.lattice)
        parts.append(literal(idx) * two_minus_d * pjk)
    return poly_sum(parts)


def penalty_defaults(P: InteractionMatrix) -> Dict[str, object]:
    lam = default_penalty(P)
    return {"lambda_back": lam, "lambda_redun": lam, "lambda_olap": lam}


def encode(
    sequence: str,
    P: InteractionMatrix,
    penalties: Optional[Dict[str, object]] = None,
    lattice: str = CUBIC,
    all_flags: bool = False,
) -> EncodedProblem:
    """Build the turn-ancilla Hamiltonian for ``sequence``.

    Flags are only allocated for pairs with ``P_jk != 0`` unless ``all_flags``.
    A flag can only claim a contact, never be forced to report one, so
    repulsive (positive) energies are dropped from the minimum; a warning
    is raised when ``P`` has any.
    """
    n = len(sequence)
    if n < 4:
        raise SequenceTooShort(f"turn-ancilla encoding needs at least 4 residues, got {n}")
    if len(P) != n:
        raise ValueError("interaction matrix size does not match the sequence")
    if any(e > 0 for _, _, e in P.pairs()):
        warnings.warn("positive contact energies are ignored by the turn-ancilla flags", stacklevel=2)
    lam = penalty_defaults(P)
    lam.update(penalties or {})
    pairs = flag_pairs(n) if all_flags else [(j, k) for j, k in flag_pairs(n) if P[j, k] != 0]
    layout = Layout(n, lattice, pairs)
    h = poly_sum(
        [
            build_h_back(n, lam["lambda_back"], lattice),
            build_h_redun(n, lam["lambda_redun"], lattice),
            build_h_olap(layout, lam["lambda_olap"]),
            build_h_pair(layout, P),
        ]
    )
    meta = {
        "max_degree": h.degree,
        "num_terms": len(h),
        "slack_pairs": [[i, j, layout.widths[(i, j)]] for i, j in layout.pointers],
        "qubit_formula": qubit_count_formula(n, lattice),
    }
    return EncodedProblem(NAME, sequence, lattice, h, layout.registry, lam, meta, interactions=P)
