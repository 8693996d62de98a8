"""Contact potentials (HP, Miyazawa-Jernigan) and per-sequence interaction matrices."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np

from .errors import AsymmetricEntry, MissingPair, ParseError, UnknownResidueCode

HP = "HP"
MJ = "MJ"

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
HP_ALPHABET = "HP"

MJ_ENV_VAR = "LATFOLD_MJ_TABLE"


@dataclass(frozen=True)
class PotentialTable:
    kind: str
    alphabet: str
    energies: Mapping[FrozenSet[str], Fraction] = field(repr=False)
    source: str = "builtin"

    def energy(self, a: str, b: str) -> Fraction:
        for r in (a, b):
            if r not in self.alphabet:
                raise UnknownResidueCode(f"residue {r!r} is not in the {self.kind} alphabet")
        return self.energies[frozenset((a, b))]

    def __call__(self, a: str, b: str) -> Fraction:
        return self.energy(a, b)


def hp_table() -> PotentialTable:
    e = {frozenset("H"): Fraction(-1), frozenset("HP"): Fraction(0), frozenset("P"): Fraction(0)}
    return PotentialTable(HP, HP_ALPHABET, e, "builtin")


def _parse_rows(text: str, origin: str) -> Dict[Tuple[str, str], Fraction]:
    rows: Dict[Tuple[str, str], Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"{origin}:{lineno}: expected 'AA1 AA2 energy', got {raw!r}")
        a, b, v = parts
        try:
            val = Fraction(v)
        except ValueError:
            raise ParseError(f"{origin}:{lineno}: bad energy {v!r}") from None
        if (a, b) in rows and rows[(a, b)] != val:
            raise AsymmetricEntry(f"{origin}:{lineno}: conflicting duplicate entry for {a} {b}")
        rows[(a, b)] = val
    return rows


def parse_potential(text: str, origin: str = "<string>") -> PotentialTable:
    rows = _parse_rows(text, origin)
    letters = {r for pair in rows for r in pair}
    if letters and letters <= set(HP_ALPHABET):
        kind, alphabet = HP, HP_ALPHABET
    else:
        kind, alphabet = MJ, AMINO_ACIDS
    for r in sorted(letters):
        if r not in alphabet:
            raise UnknownResidueCode(f"{origin}: unknown residue code {r!r}")
    energies: Dict[FrozenSet[str], Fraction] = {}
    for (a, b), v in rows.items():
        key = frozenset((a, b))
        if key in energies and energies[key] != v:
            raise AsymmetricEntry(f"{origin}: E({a},{b}) = {v} but E({b},{a}) = {energies[key]}")
        energies[key] = v
    for i, a in enumerate(alphabet):
        for b in alphabet[i:]:
            if frozenset((a, b)) not in energies:
                raise MissingPair(f"{origin}: no energy for pair {a} {b}")
    return PotentialTable(kind, alphabet, energies, origin)


def default_mj_path() -> Path:
    env = os.environ.get(MJ_ENV_VAR)
    if env:
        return Path(env)
    return Path(str(resources.files("latfold") / "data" / "mj1996.tbl"))


def load_potential(source: Union[str, os.PathLike, None] = "hp") -> PotentialTable:
    """Load a potential table.

    ``source`` may be ``"hp"`` (builtin HP), ``"mj"`` (the bundled 1996 MJ
    table, or the file named by ``$LATFOLD_MJ_TABLE``), ``"mj:<path>"`` or a
    path to a table file.
    """
    if source is None or str(source).lower() == "hp":
        return hp_table()
    s = str(source)
    if s.lower() == "mj":
        path = default_mj_path()
    elif s.lower().startswith("mj:"):
        path = Path(s[3:])
        if not path.exists() and not path.is_absolute():
            bundled = Path(str(resources.files("latfold") / "data" / path.name))
            if bundled.exists():
                path = bundled
    else:
        path = Path(s)
    return parse_potential(Path(path).read_text(encoding="utf-8"), str(path))


def load_hp_mapping(path: Union[str, os.PathLike]) -> Dict[str, str]:
    """Read a hydrophobicity mapping file with rows ``A H`` / ``D P``."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1] not in HP_ALPHABET:
            raise ParseError(f"{path}:{lineno}: expected 'AA H|P', got {raw!r}")
        if parts[0] not in AMINO_ACIDS:
            raise UnknownResidueCode(f"{path}:{lineno}: unknown residue code {parts[0]!r}")
        out[parts[0]] = parts[1]
    return out


def to_hp(sequence: str, mapping: Mapping[str, str]) -> str:
    try:
        return "".join(r if r in HP_ALPHABET else mapping[r] for r in sequence)
    except KeyError as exc:
        raise UnknownResidueCode(f"residue {exc.args[0]!r} has no H/P mapping") from None


def can_interact(i: int, j: int) -> bool:
    """Residues interact only when at least 3 apart and separated by an odd count."""
    d = abs(i - j)
    return d >= 3 and d % 2 == 1


class InteractionMatrix:
    """Symmetric per-sequence contact energies with parity/separation filtering."""

    __slots__ = ("_v", "sequence")

    def __init__(self, values, sequence: str = ""):
        n = len(values)
        v = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            if len(values[i]) != n:
                raise ValueError("interaction matrix must be square")
            for j in range(n):
                x = values[i][j]
                v[i][j] = x if isinstance(x, Fraction) else Fraction(str(x)) if isinstance(x, float) else Fraction(x)
        for i in range(n):
            if v[i][i] != 0:
                raise ValueError("interaction matrix diagonal must be zero")
            for j in range(i + 1, n):
                if v[i][j] != v[j][i]:
                    raise AsymmetricEntry(f"P[{i},{j}] != P[{j},{i}]")
        self._v = tuple(tuple(r) for r in v)
        self.sequence = sequence

    @property
    def n(self) -> int:
        return len(self._v)

    def __len__(self) -> int:
        return len(self._v)

    def __getitem__(self, key) -> Fraction:
        i, j = key
        return self._v[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, InteractionMatrix) and self._v == other._v

    @property
    def array(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self._v], dtype=np.float64)

    def pairs(self) -> Iterator[Tuple[int, int, Fraction]]:
        """Nonzero entries ``(i, j, P_ij)`` with ``i < j`` in row-major order."""
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self._v[i][j] != 0:
                    yield i, j, self._v[i][j]

    def abs_sum(self) -> Fraction:
        """Sum of ``|P_ij|`` over all ordered pairs (both triangles)."""
        return sum((abs(x) for r in self._v for x in r), Fraction(0))

    def row_abs_max(self) -> Fraction:
        return max((sum((abs(x) for x in r), Fraction(0)) for r in self._v), default=Fraction(0))

    def nonzero_count(self) -> int:
        return sum(1 for _ in self.pairs())

    def to_lists(self) -> List[List[Fraction]]:
        return [list(r) for r in self._v]


def interaction_matrix(sequence: str, table: PotentialTable, lattice: str = "cubic") -> InteractionMatrix:
    """``P_ij = E(s_i, s_j)`` for interacting positions, zero elsewhere.

    The filter is the same on the cubic and square lattices, both bipartite.
    """
    for r in sequence:
        if r not in table.alphabet:
            raise UnknownResidueCode(f"residue {r!r} is not in the {table.kind} alphabet")
    n = len(sequence)
    v = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 3, n):
            if can_interact(i, j):
                v[i][j] = v[j][i] = table.energy(sequence[i], sequence[j])
    return InteractionMatrix(v, sequence)


def max_interacting_pairs(n: int) -> int:
    return sum(1 for j in range(n) for k in range(j + 3, n) if can_interact(j, k))
