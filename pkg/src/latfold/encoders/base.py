"""Encoded problems: a Hamiltonian, its variable registry and decoding metadata.

Problem files are plain text.  A ``#``-prefixed header carries the encoder
name, sequence, lattice, penalty weights, metadata, the role of every
variable and (for reduced problems) the substitution map; the polynomial
follows in the ``i j k : coeff`` line format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..errors import InvalidTurn, ParseError
from ..lattice import Fold, fold_from_bits
from ..pbp import Polynomial, format_coefficient, parse_coefficient
from ..potentials import InteractionMatrix

TURN = "turn"
SLACK = "slack"
FLAG = "flag"
SITE = "site"
ANCILLA = "ancilla"
ROLES = (TURN, SLACK, FLAG, SITE, ANCILLA)

FORMAT_TAG = "latfold-problem v1"


@dataclass(frozen=True)
class Role:
    kind: str
    key: Tuple[int, ...] = ()

    def __str__(self) -> str:
        return " ".join([self.kind, *map(str, self.key)])


class VariableRegistry:
    """Ordered role table: entry ``i`` describes variable ``i``."""

    def __init__(self, roles: Iterable[Role] = ()):
        self._roles: List[Role] = list(roles)

    def add(self, kind: str, *key: int) -> int:
        if kind not in ROLES:
            raise ValueError(f"unknown role {kind!r}")
        self._roles.append(Role(kind, tuple(int(k) for k in key)))
        return len(self._roles) - 1

    def __len__(self) -> int:
        return len(self._roles)

    def __getitem__(self, i: int) -> Role:
        return self._roles[i]

    def __iter__(self):
        return iter(self._roles)

    def __eq__(self, other) -> bool:
        return isinstance(other, VariableRegistry) and self._roles == other._roles

    def count(self, kind: str) -> int:
        return sum(1 for r in self._roles if r.kind == kind)

    def counts(self) -> Dict[str, int]:
        return {k: self.count(k) for k in ROLES if self.count(k)}

    def indices(self, kind: str) -> List[int]:
        return [i for i, r in enumerate(self._roles) if r.kind == kind]

    def copy(self) -> "VariableRegistry":
        return VariableRegistry(self._roles)


@dataclass(frozen=True)
class Substitution:
    """One quadratization gadget: ancilla ``w`` stands for ``u * v``."""

    ancilla: int
    u: int
    v: int
    weight: object


@dataclass
class EncodedProblem:
    encoder: str
    sequence: str
    lattice: str
    polynomial: Polynomial
    registry: VariableRegistry
    penalties: Dict[str, object] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)
    reduction: List[Substitution] = field(default_factory=list)
    interactions: Optional[InteractionMatrix] = None

    @property
    def num_vars(self) -> int:
        return len(self.registry)

    @property
    def n(self) -> int:
        return len(self.sequence)

    def turn_indices(self) -> List[int]:
        return self.registry.indices(TURN)

    def with_polynomial(self, poly: Polynomial, **changes) -> "EncodedProblem":
        kw = dict(
            encoder=self.encoder,
            sequence=self.sequence,
            lattice=self.lattice,
            polynomial=poly,
            registry=self.registry.copy(),
            penalties=dict(self.penalties),
            metadata=dict(self.metadata),
            reduction=list(self.reduction),
            interactions=self.interactions,
        )
        kw.update(changes)
        return EncodedProblem(**kw)

    def decode(self, bits: Sequence[int]) -> Optional[Fold]:
        """Fold described by an assignment; ``None`` if it has no geometric reading.

        Ancilla variables (slack, flags, reduction gadgets) are ignored.  The
        returned fold may still be invalid (overlapping or disconnected).
        """
        bits = [int(b) for b in bits]
        if len(bits) < self.num_vars:
            raise ValueError(f"assignment has {len(bits)} bits, problem has {self.num_vars} variables")
        if self.encoder in ("turn-ancilla", "turn-circuit"):
            q = [bits[i] for i in self.turn_indices()]
            try:
                return fold_from_bits(q, self.n, self.lattice, self.sequence)
            except InvalidTurn:
                return None
        if self.encoder == "nested-shell":
            coords: Dict[int, List[Tuple[int, int, int]]] = {i: [] for i in range(self.n)}
            for idx in self.registry.indices(SITE):
                if bits[idx]:
                    r = self.registry[idx].key
                    coords[r[0]].append(tuple(r[1:4]))
            if any(len(c) != 1 for c in coords.values()):
                return None
            return Fold(tuple(coords[i][0] for i in range(self.n)), self.sequence)
        raise ValueError(f"no decoder for encoder {self.encoder!r}")

    # -- file format ------------------------------------------------------

    def to_text(self) -> str:
        lines = [
            f"# {FORMAT_TAG}",
            f"# encoder: {self.encoder}",
            f"# sequence: {self.sequence}",
            f"# lattice: {self.lattice}",
        ]
        for k in sorted(self.penalties):
            lines.append(f"# penalty {k}: {format_coefficient(self.penalties[k])}")
        for k in sorted(self.metadata):
            lines.append(f"# meta {k}: {json.dumps(self.metadata[k], sort_keys=True)}")
        if self.interactions is not None:
            for i, j, e in self.interactions.pairs():
                lines.append(f"# interaction {i} {j}: {format_coefficient(e)}")
        for i, role in enumerate(self.registry):
            lines.append(f"# var {i} {role}")
        for s in self.reduction:
            lines.append(f"# reduction {s.ancilla} {s.u} {s.v}: {format_coefficient(s.weight)}")
        lines.append("# end-header")
        return "\n".join(lines) + "\n" + self.polynomial.to_text()

    @classmethod
    def from_text(cls, text: str) -> "EncodedProblem":
        head: Dict[str, str] = {}
        penalties: Dict[str, object] = {}
        metadata: Dict[str, object] = {}
        roles: Dict[int, Role] = {}
        pairs: List[Tuple[int, int, Fraction]] = []
        reduction: List[Substitution] = []
        lines = text.splitlines()
        if not lines or lines[0].strip() != f"# {FORMAT_TAG}":
            raise ParseError("not a latfold problem file")
        body_start = None
        for lineno, line in enumerate(lines[1:], 2):
            if not line.startswith("#"):
                raise ParseError(f"line {lineno}: header ended without '# end-header'")
            content = line[1:].strip()
            if content == "end-header":
                body_start = lineno
                break
            key, _, value = content.partition(":")
            value = value.strip()
            words = key.split()
            try:
                if words[0] == "penalty":
                    penalties[words[1]] = parse_coefficient(value)
                elif words[0] == "meta":
                    metadata[words[1]] = json.loads(value)
                elif words[0] == "interaction":
                    pairs.append((int(words[1]), int(words[2]), Fraction(value)))
                elif words[0] == "var":
                    roles[int(words[1])] = Role(words[2], tuple(int(w) for w in words[3:]))
                elif words[0] == "reduction":
                    reduction.append(
                        Substitution(int(words[1]), int(words[2]), int(words[3]), parse_coefficient(value))
                    )
                elif len(words) == 1:
                    head[words[0]] = value
                else:
                    raise ValueError(f"unknown header entry {content!r}")
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
        if body_start is None:
            raise ParseError("missing '# end-header'")
        if sorted(roles) != list(range(len(roles))):
            raise ParseError("variable role table has gaps")
        for k in ("encoder", "sequence", "lattice"):
            if k not in head:
                raise ParseError(f"missing header field {k!r}")
        poly = Polynomial.from_text("\n".join(lines[body_start:]))
        seq = head["sequence"]
        # absent interaction lines mean an all-zero matrix
        n = len(seq)
        v = [[Fraction(0)] * n for _ in range(n)]
        for i, j, e in pairs:
            v[i][j] = v[j][i] = e
        interactions = InteractionMatrix(v, seq)
        return cls(
            encoder=head["encoder"],
            sequence=seq,
            lattice=head["lattice"],
            polynomial=poly,
            registry=VariableRegistry(roles[i] for i in range(len(roles))),
            penalties=penalties,
            metadata=metadata,
            reduction=reduction,
            interactions=interactions,
        )


def default_penalty(P: InteractionMatrix) -> Fraction:
    """``1 + sum |P_ij|`` over the full (both-triangle) interaction matrix.

    Any single constraint violation then outweighs every interaction reward
    an assignment can collect, even one that double counts a pair.
    """
    s = P.abs_sum()
    return _exact(1 + s)


def _exact(x):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else x
