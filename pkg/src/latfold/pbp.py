"""Sparse multilinear pseudo-boolean polynomials.

A :class:`Polynomial` maps monomials (sets of binary variable indices) to
exact coefficients.  Because every variable is 0/1, ``x*x == x`` and every
monomial is a plain set; internally each monomial is stored as an integer
bitmask so that multiplication of two monomials is a bitwise OR.

Coefficients are kept exact: ``int`` or :class:`fractions.Fraction`.  Floats
passed in are converted through their shortest decimal representation, so
``0.1`` becomes ``Fraction(1, 10)``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational, Real
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple, Union

import numpy as np

from .errors import MissingVariable, ParseError

Coefficient = Union[int, Fraction]
Assignment = Union[Mapping[int, int], Sequence[int], np.ndarray]

# ``canonical-form comparison'' tolerance used when floats enter the picture
# (vectorised evaluation, annealing); exact coefficients compare exactly.
TOLERANCE = 1e-9


def _coerce(c) -> Coefficient:
    if isinstance(c, bool):
        return int(c)
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, Rational):
        return _coerce(Fraction(c.numerator, c.denominator))
    if isinstance(c, (Real, np.floating, np.integer)):
        f = float(c)
        if not np.isfinite(f):
            raise ValueError(f"non-finite coefficient {c!r}")
        if f.is_integer():
            return int(f)
        return _coerce(Fraction(repr(f)))
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        i = int(i)
        if i < 0:
            raise ValueError(f"variable index must be >= 0, got {i}")
        m |= 1 << i
    return m


def mask_indices(mask: int) -> Tuple[int, ...]:
    """Sorted variable indices contained in a monomial bitmask."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _sort_key(mask: int):
    idx = mask_indices(mask)
    return (len(idx), idx)


class Polynomial:
    """Immutable multilinear polynomial with exact coefficients.

    Build one from a mapping ``{indices: coefficient}`` where ``indices`` is any
    iterable of variable indices (``()`` for the constant term)::

        >>> p = Polynomial({(0, 1): 2, (): -1})
        >>> p.evaluate({0: 1, 1: 1})
        1
    """

    __slots__ = ("_t",)

    def __init__(self, terms: Mapping[Iterable[int], object] | None = None):
        acc: Dict[int, Coefficient] = {}
        if terms:
            for idx, c in terms.items():
                if isinstance(idx, int):
                    idx = (idx,)
                m = _mask_of(idx)
                acc[m] = acc.get(m, 0) + _coerce(c)
        self._t = {m: c for m, c in acc.items() if c != 0}

    @classmethod
    def _wrap(cls, masks: Dict[int, Coefficient]) -> "Polynomial":
        # trusted path: caller guarantees canonical content
        p = cls.__new__(cls)
        p._t = masks
        return p

    @classmethod
    def constant(cls, c) -> "Polynomial":
        c = _coerce(c)
        return cls._wrap({0: c} if c != 0 else {})

    @classmethod
    def variable(cls, index: int) -> "Polynomial":
        return literal(index)

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls._wrap({})

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> Dict[Tuple[int, ...], Coefficient]:
        """Terms keyed by sorted index tuples, in deterministic order."""
        return {mask_indices(m): self._t[m] for m in sorted(self._t, key=_sort_key)}

    def masks(self) -> Dict[int, Coefficient]:
        """Raw ``{bitmask: coefficient}`` view (a copy)."""
        return dict(self._t)

    def items(self) -> Iterator[Tuple[Tuple[int, ...], Coefficient]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self._t)

    def __bool__(self) -> bool:
        return bool(self._t)

    @property
    def degree(self) -> int:
        return max((m.bit_count() for m in self._t), default=0)

    @property
    def constant_term(self) -> Coefficient:
        return self._t.get(0, 0)

    @property
    def variables(self) -> Tuple[int, ...]:
        m = 0
        for k in self._t:
            m |= k
        return mask_indices(m)

    @property
    def num_variables(self) -> int:
        """One past the largest index that appears (0 for constants)."""
        m = 0
        for k in self._t:
            m |= k
        return m.bit_length()

    def abs_sum(self, include_constant: bool = False) -> Coefficient:
        return sum(abs(c) for m, c in self._t.items() if m or include_constant)

    def coefficient(self, indices: Iterable[int]) -> Coefficient:
        return self._t.get(_mask_of(indices), 0)

    # -- arithmetic -------------------------------------------------------

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial.constant(other)

    def __add__(self, other) -> "Polynomial":
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        out = dict(self._t)
        for m, c in other._t.items():
            v = out.get(m, 0) + c
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
        return Polynomial._wrap(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._wrap({m: -c for m, c in self._t.items()})

    def __sub__(self, other) -> "Polynomial":
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            try:
                s = _coerce(other)
            except TypeError:
                return NotImplemented
            if s == 0:
                return Polynomial.zero()
            return Polynomial._wrap({m: c * s for m, c in self._t.items()})
        a, b = self._t, other._t
        if len(a) < len(b):
            a, b = b, a
        out: Dict[int, Coefficient] = {}
        get = out.get
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = ma | mb
                out[m] = get(m, 0) + ca * cb
        return Polynomial._wrap({m: c for m, c in out.items() if c != 0})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative powers are undefined")
        out = Polynomial.constant(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            try:
                other = Polynomial.constant(other)
            except (TypeError, ValueError):
                return NotImplemented
        if self._t.keys() != other._t.keys():
            return False
        return all(
            self._t[m] == other._t[m] or abs(float(self._t[m] - other._t[m])) <= TOLERANCE
            for m in self._t
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        if not self._t:
            return "Polynomial(0)"
        parts = []
        for idx, c in self.terms.items():
            mono = "*".join(f"x{i}" for i in idx)
            parts.append(f"{c}" if not idx else f"{c}*{mono}")
        return "Polynomial(" + " + ".join(parts) + ")"

    # -- evaluation -------------------------------------------------------

    def evaluate(self, assignment: Assignment) -> Coefficient:
        """Exact value under a full 0/1 assignment of the appearing variables."""
        ones = _assignment_mask(assignment, self.variables)
        total: Coefficient = 0
        for m, c in self._t.items():
            if m & ones == m:
                total += c
        return total

    def evaluate_many(self, bits: np.ndarray) -> np.ndarray:
        """Float64 values for each row of a ``(samples, n)`` 0/1 array."""
        bits = np.asarray(bits)
        if bits.ndim == 1:
            bits = bits[None, :]
        n = bits.shape[1]
        if self.num_variables > n:
            raise MissingVariable(self.num_variables - 1)
        out = np.zeros(bits.shape[0], dtype=np.float64)
        b = bits.astype(bool)
        for m, c in self._t.items():
            if m == 0:
                out += float(c)
                continue
            idx = mask_indices(m)
            out += float(c) * np.logical_and.reduce(b[:, idx], axis=1)
        return out

    def fix(self, partial: Mapping[int, int]) -> "Polynomial":
        """Substitute fixed bits; the result only involves the free variables."""
        ones = zeros = 0
        for i, v in partial.items():
            if v not in (0, 1):
                raise ValueError(f"variable {i} fixed to non-binary value {v!r}")
            if v:
                ones |= 1 << int(i)
            else:
                zeros |= 1 << int(i)
        out: Dict[int, Coefficient] = {}
        for m, c in self._t.items():
            if m & zeros:
                continue
            k = m & ~ones
            v = out.get(k, 0) + c
            if v == 0:
                out.pop(k, None)
            else:
                out[k] = v
        return Polynomial._wrap(out)

    def relabel(self, mapping: Mapping[int, int]) -> "Polynomial":
        """Rename variables; indices missing from ``mapping`` are kept."""
        out: Dict[int, Coefficient] = {}
        for m, c in self._t.items():
            k = _mask_of(mapping.get(i, i) for i in mask_indices(m))
            out[k] = out.get(k, 0) + c
        return Polynomial._wrap({m: c for m, c in out.items() if c != 0})

    def to_float_terms(self) -> Tuple[list, np.ndarray]:
        """(list of index tuples, float64 coefficients) in canonical order."""
        t = self.terms
        return list(t.keys()), np.array([float(c) for c in t.values()], dtype=np.float64)

    # -- text I/O ---------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for idx, c in self.terms.items():
            head = " ".join(str(i) for i in idx) if idx else "const"
            lines.append(f"{head} : {format_coefficient(c)}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "Polynomial":
        acc: Dict[int, Coefficient] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ParseError(f"line {lineno}: missing ':' separator")
            head, _, coeff = line.partition(":")
            head = head.strip()
            try:
                idx = () if head == "const" else tuple(int(t) for t in head.split())
                c = parse_coefficient(coeff.strip())
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
            if list(idx) != sorted(set(idx)):
                raise ParseError(f"line {lineno}: indices must be strictly increasing")
            m = _mask_of(idx)
            if m in acc:
                raise ParseError(f"line {lineno}: duplicate term {idx}")
            acc[m] = c
        return cls._wrap({m: c for m, c in acc.items() if c != 0})


def format_coefficient(c: Coefficient) -> str:
    if isinstance(c, int):
        return str(c)
    if c.denominator == 1:
        return str(c.numerator)
    den = c.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{c.numerator}/{c.denominator}"
    places = max(twos, fives)
    scaled = c * 10**places
    assert scaled.denominator == 1
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def parse_coefficient(s: str) -> Coefficient:
    if not s:
        raise ValueError("empty coefficient")
    return _coerce(Fraction(s))


def _assignment_mask(assignment: Assignment, needed: Iterable[int]) -> int:
    ones = 0
    if isinstance(assignment, Mapping):
        for i in needed:
            if i not in assignment:
                raise MissingVariable(i)
        for i, v in assignment.items():
            if v:
                ones |= 1 << int(i)
        return ones
    seq = list(assignment)
    for i in needed:
        if i >= len(seq):
            raise MissingVariable(i)
    for i, v in enumerate(seq):
        if v:
            ones |= 1 << i
    return ones


# -- functional surface ----------------------------------------------------


def literal(index: int, negated: bool = False) -> Polynomial:
    """``x_index`` or, when ``negated``, ``1 - x_index``."""
    if index < 0:
        raise ValueError(f"variable index must be >= 0, got {index}")
    m = 1 << index
    return Polynomial._wrap({0: 1, m: -1} if negated else {m: 1})


def add(a: Polynomial, b: Polynomial) -> Polynomial:
    return a + b


def mul(a: Polynomial, b: Polynomial) -> Polynomial:
    return a * b


def evaluate(p: Polynomial, assignment: Assignment) -> Coefficient:
    return p.evaluate(assignment)


def fix(p: Polynomial, partial: Mapping[int, int]) -> Polynomial:
    return p.fix(partial)


def poly_sum(parts: Iterable[Polynomial]) -> Polynomial:
    """Sum many polynomials with one accumulator (faster than chained ``+``)."""
    out: Dict[int, Coefficient] = {}
    for p in parts:
        for m, c in p._t.items():
            out[m] = out.get(m, 0) + c
    return Polynomial._wrap({m: c for m, c in out.items() if c != 0})


def product(parts: Iterable[Polynomial]) -> Polynomial:
    out = Polynomial.constant(1)
    for p in parts:
        out = out * p
        if not out:
            break
    return out


def xor(p: Polynomial, q: Polynomial) -> Polynomial:
    """``p + q - 2pq``; the exclusive or of two 0/1-valued polynomials."""
    return p + q - 2 * (p * q)


def xnor(p: Polynomial, q: Polynomial) -> Polynomial:
    """``1 - p - q + 2pq``."""
    return 1 - p - q + 2 * (p * q)
