"""Lattice geometry, turn codes, folds and the exact self-avoiding-walk oracle.

Two lattices are supported.  The cubic lattice uses three bits per turn::

    101 +x    110 -x    001 +y    010 -y    111 +z    100 -z    (000, 011 invalid)

The planar (square) lattice uses two bits per turn::

    00 +x    01 +y    10 -x    11 -y

In both cases turn 0 is fixed to ``+x`` and turn 1 is restricted to
``{+x, +y}`` by a single free bit ``q0``, which removes the rotational and
reflective redundancy of the chain's first two steps.  On the cubic lattice
turn 1 is ``q0 0 1`` (``q0 = 1`` is ``+x``); on the planar lattice it is
``0 q0`` (``q0 = 1`` is ``+y``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidFold, InvalidTurn, TooLarge, WidthMismatch

Coord = Tuple[int, int, int]

CUBIC = "cubic"
PLANAR = "planar"
LATTICES = (CUBIC, PLANAR)


@dataclass(frozen=True, order=True)
class Direction:
    axis: str
    sign: int

    @property
    def vector(self) -> Coord:
        v = [0, 0, 0]
        v["xyz".index(self.axis)] = self.sign
        return tuple(v)  # type: ignore[return-value]

    @property
    def opposite(self) -> "Direction":
        return Direction(self.axis, -self.sign)

    def __str__(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.axis


PX, MX = Direction("x", 1), Direction("x", -1)
PY, MY = Direction("y", 1), Direction("y", -1)
PZ, MZ = Direction("z", 1), Direction("z", -1)
DIRECTIONS = (PX, MX, PY, MY, PZ, MZ)

CUBIC_CODES: Dict[Tuple[int, ...], Direction] = {
    (1, 0, 1): PX,
    (1, 1, 0): MX,
    (0, 0, 1): PY,
    (0, 1, 0): MY,
    (1, 1, 1): PZ,
    (1, 0, 0): MZ,
}
CUBIC_INVALID = ((0, 0, 0), (0, 1, 1))

PLANAR_CODES: Dict[Tuple[int, ...], Direction] = {
    (0, 0): PX,
    (0, 1): PY,
    (1, 0): MX,
    (1, 1): MY,
}

_CODE_OF = {
    CUBIC: {d: c for c, d in CUBIC_CODES.items()},
    PLANAR: {d: c for c, d in PLANAR_CODES.items()},
}


def _check_lattice(lattice: str) -> None:
    if lattice not in LATTICES:
        raise ValueError(f"unknown lattice {lattice!r}; expected one of {LATTICES}")


def bits_per_turn(lattice: str) -> int:
    _check_lattice(lattice)
    return 3 if lattice == CUBIC else 2


def lattice_directions(lattice: str) -> Tuple[Direction, ...]:
    """Directions in ascending turn-code order (the enumeration order)."""
    _check_lattice(lattice)
    table = CUBIC_CODES if lattice == CUBIC else PLANAR_CODES
    return tuple(table[c] for c in sorted(table))


def decode_turn(bits: Sequence[int], lattice: str = CUBIC) -> Optional[Direction]:
    """Direction encoded by one turn code, or ``None`` for an invalid code."""
    width = bits_per_turn(lattice)
    bits = tuple(int(b) for b in bits)
    if len(bits) != width:
        raise WidthMismatch(f"{lattice} turn codes have {width} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"turn code must be binary, got {bits}")
    table = CUBIC_CODES if lattice == CUBIC else PLANAR_CODES
    return table.get(bits)


def encode_turn(direction: Direction, lattice: str = CUBIC) -> Tuple[int, ...]:
    try:
        return _CODE_OF[lattice][direction]
    except KeyError:
        raise ValueError(f"{direction} is not a {lattice} lattice direction") from None


def turn_bit_count(n: int, lattice: str = CUBIC) -> int:
    """Free turn bits for an ``n``-residue chain (3n-8 cubic, 2n-5 planar)."""
    _check_lattice(lattice)
    if n < 3:
        return 0
    return 3 * n - 8 if lattice == CUBIC else 2 * n - 5


def second_turn(q0: int, lattice: str = CUBIC) -> Direction:
    if lattice == CUBIC:
        return PX if q0 else PY
    return PY if q0 else PX


def turns_from_bits(q: Sequence[int], n: int, lattice: str = CUBIC) -> List[Direction]:
    """Decode a free-bit string into the ``n - 1`` turns of the chain."""
    q = [int(b) for b in q]
    expected = turn_bit_count(n, lattice)
    if len(q) != expected:
        raise WidthMismatch(f"{n} residues on a {lattice} lattice need {expected} bits, got {len(q)}")
    if n < 2:
        return []
    turns = [PX]
    if n >= 3:
        turns.append(second_turn(q[0], lattice))
    w = bits_per_turn(lattice)
    for t in range(2, n - 1):
        lo = 1 + w * (t - 2)
        code = q[lo : lo + w]
        d = decode_turn(code, lattice)
        if d is None:
            raise InvalidTurn(f"turn {t} has invalid code {''.join(map(str, code))}")
        turns.append(d)
    return turns


def bits_from_turns(turns: Sequence[Direction], lattice: str = CUBIC) -> Tuple[int, ...]:
    """Inverse of :func:`turns_from_bits` for symmetry-fixed turn sequences."""
    if not turns:
        return ()
    if turns[0] != PX:
        raise ValueError("turn 0 must be +x")
    if len(turns) == 1:
        return ()
    if turns[1] not in (PX, PY):
        raise ValueError("turn 1 must be +x or +y")
    q0 = 1 if turns[1] == second_turn(1, lattice) else 0
    out = [q0]
    for d in turns[2:]:
        out.extend(encode_turn(d, lattice))
    return tuple(out)


def coords_from_turns(turns: Sequence[Direction]) -> Tuple[Coord, ...]:
    pos = (0, 0, 0)
    out = [pos]
    for d in turns:
        v = d.vector
        pos = (pos[0] + v[0], pos[1] + v[1], pos[2] + v[2])
        out.append(pos)
    return tuple(out)


def turns_from_coords(coords: Sequence[Coord]) -> List[Direction]:
    out = []
    for a, b in zip(coords, coords[1:]):
        delta = tuple(int(b[k]) - int(a[k]) for k in range(3))
        for d in DIRECTIONS:
            if d.vector == delta:
                out.append(d)
                break
        else:
            raise InvalidFold(f"coordinates {a} and {b} are not lattice neighbours")
    return out


@dataclass(frozen=True)
class Fold:
    """Residue coordinates (integer 3-vectors) with their amino-acid labels."""

    coords: Tuple[Coord, ...]
    sequence: str

    def __post_init__(self):
        cs = []
        for c in self.coords:
            c = tuple(int(v) for v in c)
            if len(c) == 2:
                c = c + (0,)
            if len(c) != 3:
                raise ValueError(f"coordinate {c} is not a 2- or 3-vector")
            cs.append(c)
        object.__setattr__(self, "coords", tuple(cs))
        if len(cs) != len(self.sequence):
            raise ValueError(f"{len(cs)} coordinates for a sequence of length {len(self.sequence)}")

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def is_connected(self) -> bool:
        return all(_l1(a, b) == 1 for a, b in zip(self.coords, self.coords[1:]))

    @property
    def is_self_avoiding(self) -> bool:
        return len(set(self.coords)) == len(self.coords)

    @property
    def is_valid(self) -> bool:
        return self.is_connected and self.is_self_avoiding

    def turns(self) -> List[Direction]:
        return turns_from_coords(self.coords)

    def translated(self, offset: Sequence[int]) -> "Fold":
        return Fold(tuple(tuple(c[k] + offset[k] for k in range(3)) for c in self.coords), self.sequence)

    def transformed(self, matrix: np.ndarray) -> "Fold":
        m = np.asarray(matrix, dtype=int)
        return Fold(tuple(tuple(int(v) for v in m @ np.array(c)) for c in self.coords), self.sequence)

    def canonical(self) -> "Fold":
        """Representative of this fold's class under translation and the 48 cubic symmetries.

        Picks the symmetry image that, anchored at the origin, has the
        lexicographically smallest coordinate list.
        """
        best = None
        for m in cubic_symmetries():
            f = self.transformed(m)
            o = f.coords[0]
            f = f.translated((-o[0], -o[1], -o[2]))
            if best is None or f.coords < best.coords:
                best = f
        return best


def _l1(a: Coord, b: Coord) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) + abs(a[2] - b[2])


def fold_from_bits(q: Sequence[int], n: int, lattice: str = CUBIC, sequence: Optional[str] = None) -> Fold:
    """Fold anchored at the origin from a symmetry-fixed free-bit string."""
    turns = turns_from_bits(q, n, lattice)
    seq = sequence if sequence is not None else "X" * n
    if len(seq) != n:
        raise ValueError(f"sequence length {len(seq)} does not match n={n}")
    return Fold(coords_from_turns(turns), seq)


def bits_from_fold(fold: Fold, lattice: str = CUBIC) -> Tuple[int, ...]:
    return bits_from_turns(fold.turns(), lattice)


def _pair_energy(P, i: int, j: int):
    return P[i, j]


def contacts(fold: Fold, P=None) -> List[Tuple[int, int, object]]:
    """Non-bonded lattice contacts ``(i, j, P_ij)`` with ``j - i >= 3``."""
    where: Dict[Coord, int] = {c: i for i, c in enumerate(fold.coords)}
    out = []
    for i, c in enumerate(fold.coords):
        for d in DIRECTIONS:
            v = d.vector
            j = where.get((c[0] + v[0], c[1] + v[1], c[2] + v[2]))
            if j is not None and j - i >= 3:
                out.append((i, j, _pair_energy(P, i, j) if P is not None else None))
    out.sort(key=lambda t: (t[0], t[1]))
    return out


def fold_energy(fold: Fold, P):
    """Sum of ``P_ij`` over non-bonded unit-distance pairs of a valid fold."""
    if not fold.is_connected:
        raise InvalidFold("fold is not connected")
    if not fold.is_self_avoiding:
        raise InvalidFold("fold visits a vertex twice")
    total = 0
    for _, _, e in contacts(fold, P):
        total += e
    return total


@dataclass
class SawResult:
    energy: object
    folds: List[Fold]
    walks: int


DEFAULT_CAPS = {CUBIC: 12, PLANAR: 14}


def saw_enumerate(sequence: str, P, lattice: str = CUBIC, cap: Optional[int] = None) -> SawResult:
    """Exhaustive minimum-energy search over symmetry-fixed self-avoiding walks.

    Turn 0 is ``+x`` and turn 1 is ``+x`` or ``+y``; the remaining turns range
    over every lattice direction.  All minimizers are returned, ordered by
    their free-bit strings.
    """
    _check_lattice(lattice)
    n = len(sequence)
    limit = DEFAULT_CAPS[lattice] if cap is None else cap
    if n > limit:
        raise TooLarge(f"{n} residues exceeds the {lattice} enumeration cap of {limit}")
    if n == 0:
        return SawResult(0, [], 0)
    if n == 1:
        return SawResult(0, [Fold(((0, 0, 0),), sequence)], 1)

    dirs = lattice_directions(lattice)
    vecs = [d.vector for d in dirs]
    # neighbours contributing to residue k: only i <= k - 3 with nonzero P
    partners = [[(i, P[i, k]) for i in range(k - 2) if P[i, k] != 0] for k in range(n)]

    occupied: Dict[Coord, int] = {(0, 0, 0): 0, (1, 0, 0): 1}
    path: List[Coord] = [(0, 0, 0), (1, 0, 0)]
    turn_path: List[Direction] = [PX]
    best = [None]
    found: List[Tuple[Tuple[int, ...], Tuple[Coord, ...]]] = []
    count = [0]

    def gain(k: int, pos: Coord):
        e = 0
        for i, pij in partners[k]:
            if _l1(path[i], pos) == 1:
                e += pij
        return e

    def place(k: int, energy):
        if k == n:
            count[0] += 1
            if best[0] is None or energy < best[0]:
                best[0] = energy
                found.clear()
            if energy == best[0]:
                found.append((bits_from_turns(turn_path, lattice), tuple(path)))
            return
        last = path[-1]
        options = (PY, PX) if k == 2 and lattice == CUBIC else (PX, PY) if k == 2 else dirs
        for d in options:
            v = d.vector
            pos = (last[0] + v[0], last[1] + v[1], last[2] + v[2])
            if pos in occupied:
                continue
            occupied[pos] = k
            path.append(pos)
            turn_path.append(d)
            place(k + 1, energy + gain(k, pos))
            turn_path.pop()
            path.pop()
            del occupied[pos]

    place(2, 0)
    found.sort(key=lambda t: t[0])
    folds = [Fold(c, sequence) for _, c in found]
    return SawResult(best[0], folds, count[0])


def count_walks(n: int, lattice: str = CUBIC, fixed: bool = False) -> int:
    """Number of self-avoiding walks with ``n`` residues (brute force).

    With ``fixed`` only symmetry-fixed walks are counted; otherwise every walk
    starting at the origin is.
    """
    dirs = lattice_directions(lattice)
    total = 0
    for turns in itertools.product(dirs, repeat=max(n - 1, 0)):
        if fixed and turns and (turns[0] != PX or (len(turns) > 1 and turns[1] not in (PX, PY))):
            continue
        if len(set(coords_from_turns(turns))) == n:
            total += 1
    return total


def cubic_rotations() -> List[np.ndarray]:
    """The 24 proper rotations of the cubic lattice."""
    return [m for m in cubic_symmetries() if round(np.linalg.det(m)) == 1]


def cubic_symmetries() -> List[np.ndarray]:
    """All 48 signed permutation matrices (rotations and reflections)."""
    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3), dtype=int)
            for r, c in enumerate(perm):
                m[r, c] = signs[r]
            out.append(m)
    return out


def fold_record(fold: Fold, P) -> dict:
    """Structured rendering of a fold; :func:`format_fold` prints the same content."""
    energy = fold_energy(fold, P) if fold.is_valid else None
    return {
        "sequence": fold.sequence,
        "coords": [list(c) for c in fold.coords],
        "energy": _jsonable(energy),
        "contacts": [[i, j, _jsonable(e)] for i, j, e in contacts(fold, P)],
    }


def format_fold(record: dict) -> str:
    coords = " ".join("({},{},{})".format(*c) for c in record["coords"])
    cs = " ".join(f"{i}-{j}:{e}" for i, j, e in record["contacts"]) or "-"
    return f"sequence {record['sequence']}\ncoords {coords}\nenergy {record['energy']}\ncontacts {cs}\n"


def parse_fold_text(text: str) -> dict:
    """Parse the text rendering back into a record (used to check parity)."""
    rec: dict = {}
    for line in text.strip().splitlines():
        key, _, rest = line.partition(" ")
        if key == "sequence":
            rec["sequence"] = rest
        elif key == "coords":
            rec["coords"] = [[int(v) for v in tok.strip("()").split(",")] for tok in rest.split()]
        elif key == "energy":
            rec["energy"] = None if rest == "None" else _parse_number(rest)
        elif key == "contacts":
            rec["contacts"] = []
            if rest != "-":
                for tok in rest.split():
                    pair, _, e = tok.partition(":")
                    i, j = pair.split("-")
                    rec["contacts"].append([int(i), int(j), _parse_number(e)])
    return rec


def _jsonable(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else float(x)
    if isinstance(x, np.generic):
        return x.item()
    return x


def _parse_number(s: str):
    v = float(s)
    return int(v) if v.is_integer() and "." not in s and "e" not in s.lower() else v
