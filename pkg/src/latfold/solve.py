"""Ground-state search and run statistics.

Exact solvers:

* :func:`exhaustive_solve` tabulates every assignment with a subset-sum
  (zeta) transform over integer-scaled coefficients, so energies compare
  exactly.  Up to 30 variables.
* :func:`milp_solve` linearizes products and hands the problem to HiGHS
  through :func:`scipy.optimize.milp`; used for registers too large to
  tabulate (nested shell, reduced turn-circuit).

Heuristics: :func:`simulated_annealing`, :func:`single_flip_descent`,
:func:`spin_reversal_gauge` and :func:`split_subproblems`, plus the
``p_s`` / ``R99`` / ``TTS`` statistics in :func:`stats`.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, sparse

from . import _kernels
from .encoders import nested_shell
from .encoders.base import EncodedProblem
from .errors import DegenerateProbability, NotQuadratic, TooLarge
from .pbp import Polynomial, mask_indices

EXHAUSTIVE_LIMIT = 30
CHUNK_BITS = 22
ARGMIN_KEEP = 1 << 16

ProblemLike = Union[EncodedProblem, Polynomial]


def _poly_and_n(problem: ProblemLike, num_vars: Optional[int] = None) -> Tuple[Polynomial, int]:
    if isinstance(problem, EncodedProblem):
        return problem.polynomial, problem.num_vars if num_vars is None else num_vars
    return problem, problem.num_variables if num_vars is None else num_vars


def _exact(x):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else x


# -- integer scaling --------------------------------------------------------


@dataclass
class Scaled:
    """``p * den`` with integer coefficients, keyed by bitmask."""

    terms: Dict[int, int]
    den: int

    @classmethod
    def of(cls, p: Polynomial) -> "Scaled":
        den = 1
        for c in p.masks().values():
            den = math.lcm(den, Fraction(c).denominator)
        terms = {m: int(Fraction(c) * den) for m, c in p.masks().items()}
        if sum(abs(c) for c in terms.values()) >= 1 << 62:
            raise TooLarge("coefficients do not fit 64-bit integer arithmetic")
        return cls(terms, den)

    def value(self, scaled_energy: int):
        return _exact(Fraction(int(scaled_energy), self.den))


def _zeta(terms: Iterable[Tuple[int, int]], k: int) -> np.ndarray:
    """Values of ``sum_S c_S prod_{i in S} x_i`` at every ``x`` in ``[0, 2**k)``."""
    f = np.zeros(1 << k, dtype=np.int64)
    for m, c in terms:
        f[m] += c
    for i in range(k):
        v = f.reshape(-1, 2, 1 << i)
        v[:, 1, :] += v[:, 0, :]
    return f


def energy_table(p: Polynomial, num_vars: Optional[int] = None) -> Tuple[np.ndarray, int]:
    """Scaled energies of all ``2**n`` assignments (bit ``i`` of the index is ``x_i``)."""
    p, n = _poly_and_n(p, num_vars)
    if n > CHUNK_BITS + 4:
        raise TooLarge(f"full energy table for {n} variables is too large")
    s = Scaled.of(p)
    return _zeta(s.terms.items(), n), s.den


# -- exact solvers ----------------------------------------------------------


@dataclass
class ExactResult:
    """Minimum energy and minimizing assignments (tuples, ``x_0`` first).

    ``count`` is the number of minimizers; ``argmin`` keeps at most
    ``ARGMIN_KEEP`` of them, sorted.  MILP results carry one minimizer and
    ``count = None``.
    """

    energy: object
    argmin: List[Tuple[int, ...]]
    count: Optional[int]
    method: str = "exhaustive"


def exhaustive_solve(
    problem: ProblemLike,
    num_vars: Optional[int] = None,
    fixed: Optional[Mapping[int, int]] = None,
) -> ExactResult:
    """Exact minimum over all assignments of the free variables.

    ``fixed`` pins some variables; minimizers still list every variable.
    """
    p, n = _poly_and_n(problem, num_vars)
    fixed = dict(fixed or {})
    if p.variables and max(p.variables) >= n:
        raise ValueError(f"polynomial uses variable {max(p.variables)} but only {n} are declared")
    free = [i for i in range(n) if i not in fixed]
    k = len(free)
    if k > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"{k} free variables exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}")
    s = Scaled.of(p.fix(fixed) if fixed else p)
    local = {v: b for b, v in enumerate(free)}
    remapped: Dict[int, int] = {}
    for m, c in s.terms.items():
        lm = 0
        for i in mask_indices(m):
            lm |= 1 << local[i]
        remapped[lm] = remapped.get(lm, 0) + c
    low = min(k, CHUNK_BITS)
    high = k - low
    low_mask = (1 << low) - 1
    best = None
    hits: List[int] = []
    count = 0
    for h in range(1 << high):
        hm = h << low
        chunk: Dict[int, int] = {}
        for m, c in remapped.items():
            if (m & ~low_mask) & ~hm == 0:
                chunk[m & low_mask] = chunk.get(m & low_mask, 0) + c
        f = _zeta(chunk.items(), low)
        cmin = int(f.min())
        if best is None or cmin < best:
            best, hits, count = cmin, [], 0
        if cmin == best:
            idx = np.flatnonzero(f == cmin)
            count += len(idx)
            room = ARGMIN_KEEP - len(hits)
            hits.extend(int(i) | hm for i in idx[: max(room, 0)])
    argmin = []
    for x in hits:
        bits = [0] * n
        for v, b in fixed.items():
            bits[v] = int(b)
        for b, v in enumerate(free):
            bits[v] = (x >> b) & 1
        argmin.append(tuple(bits))
    argmin.sort()
    return ExactResult(s.value(best), argmin, count)


def milp_solve(
    problem: ProblemLike,
    num_vars: Optional[int] = None,
    fixed: Optional[Mapping[int, int]] = None,
    time_limit: Optional[float] = None,
    cliques: Optional[Sequence[Tuple[Sequence[int], object]]] = None,
    dominance: Optional[Sequence[Tuple[int, Sequence[int]]]] = None,
    count_bounds: Optional[Sequence[Tuple[Sequence[Tuple[int, int]], int, int, Sequence[int]]]] = None,
    linear: Optional[Sequence[Tuple[Sequence[int], float, float]]] = None,
) -> ExactResult:
    """Exact minimum via mixed-integer programming.

    Each product term ``c * prod_{i in T} x_i`` gets a continuous ``y_T`` in
    ``[0, 1]``.  Positive terms only need ``y_T >= sum x_i - (|T| - 1)``;
    negative terms only need ``y_T <= x_i``.  The objective is integer-scaled,
    so HiGHS's optimality gap certifies the exact minimum.

    ``cliques`` lists ``(variables, w)`` groups whose pairwise terms include
    ``w * x_a x_b`` for every pair, with ``w > 0``.  That part is modelled as
    ``w * C(k, 2)`` of the count ``k = sum x`` through the cuts
    ``z >= m k - m (m + 1) / 2``, which is exact at integer ``k`` and far
    tighter than per-pair products.

    ``dominance`` entries ``(leader, others)`` add ``x_o <= x_leader``.  They
    are only sound when some minimizer satisfies them, e.g. symmetry-breaking
    constraints derived from an automorphism of the polynomial.

    ``count_bounds`` entries ``(pairs, a, b, groups)`` add
    ``sum y_{uv} <= a + b * sum z_g`` over the product variables of ``pairs``
    and the count variables of the listed cliques.  The caller must ensure
    the bound holds with ``y = x_u x_v`` and ``z_g = w C(k_g, 2) / w``.

    ``linear`` entries ``(variables, lo, hi)`` restrict the search to
    ``lo <= sum x <= hi``; the result is then the minimum over that subset.
    """
    p, n = _poly_and_n(problem, num_vars)
    fixed = dict(fixed or {})
    terms = p.masks()
    groups = []
    for vars_, w in cliques or ():
        vars_ = sorted(set(vars_))
        if w <= 0:
            raise ValueError("clique weights must be positive")
        for a_i, a in enumerate(vars_):
            for b in vars_[a_i + 1 :]:
                m = (1 << a) | (1 << b)
                rest = terms.get(m, 0) - w
                if rest == 0:
                    terms.pop(m, None)
                else:
                    terms[m] = rest
        groups.append((vars_, w))
    q = Polynomial._wrap(terms)
    den = Scaled.of(q).den
    for _, w in groups:
        den = math.lcm(den, Fraction(w).denominator)
    s = Scaled.of(q.fix(fixed) if fixed else q)
    scale = den // s.den
    lin = {m: c * scale for m, c in s.terms.items()}
    prods = [(m, c) for m, c in lin.items() if m.bit_count() >= 2]
    prod_col = {m: n + k for k, (m, _) in enumerate(prods)}
    nv = n + len(prods) + len(groups)
    cost = np.zeros(nv)
    rows, cols, vals, lo, hi = [], [], [], [], []
    r = 0
    for m, c in lin.items():
        if m.bit_count() == 1:
            cost[m.bit_length() - 1] += c
    for k, (m, c) in enumerate(prods):
        y = n + k
        cost[y] = c
        idx = mask_indices(m)
        if c > 0:
            for i in idx:
                rows.append(r), cols.append(i), vals.append(1.0)
            rows.append(r), cols.append(y), vals.append(-1.0)
            lo.append(-np.inf), hi.append(len(idx) - 1)
            r += 1
        else:
            for i in idx:
                rows += [r, r]
                cols += [y, i]
                vals += [1.0, -1.0]
                lo.append(-np.inf), hi.append(0.0)
                r += 1
    ub = np.ones(nv)
    for g, (vars_, w) in enumerate(groups):
        z = n + len(prods) + g
        cost[z] = int(Fraction(w) * den)
        ub[z] = np.inf
        for m in range(1, len(vars_)):
            # z - m * sum(x) >= -m(m+1)/2
            for i in vars_:
                rows.append(r), cols.append(i), vals.append(-float(m))
            rows.append(r), cols.append(z), vals.append(1.0)
            lo.append(-m * (m + 1) / 2), hi.append(np.inf)
            r += 1
    zbase = n + len(prods)
    for pairs, a0, b0, gids in count_bounds or ():
        ys = [prod_col[(1 << u) | (1 << v)] for u, v in pairs if ((1 << u) | (1 << v)) in prod_col]
        if not ys:
            continue
        for y in ys:
            rows.append(r), cols.append(y), vals.append(1.0)
        for g in gids:
            rows.append(r), cols.append(zbase + g), vals.append(-float(b0))
        lo.append(-np.inf), hi.append(float(a0))
        r += 1
    for vars_, a0, b0 in linear or ():
        for i in vars_:
            rows.append(r), cols.append(i), vals.append(1.0)
        lo.append(float(a0)), hi.append(float(b0))
        r += 1
    for leader, others in dominance or ():
        for o in others:
            rows += [r, r]
            cols += [o, leader]
            vals += [1.0, -1.0]
            lo.append(-np.inf), hi.append(0.0)
            r += 1
    lb = np.zeros(nv)
    for v, b in fixed.items():
        lb[v] = ub[v] = int(b)
    integrality = np.zeros(nv)
    integrality[:n] = 1
    cons = []
    if r:
        a = sparse.csr_array((vals, (rows, cols)), shape=(r, nv))
        cons.append(optimize.LinearConstraint(a, lo, hi))
    opts = {"mip_rel_gap": 0.0, "presolve": True}
    if time_limit is not None:
        opts["time_limit"] = time_limit
    res = optimize.milp(cost, integrality=integrality, bounds=optimize.Bounds(lb, ub), constraints=cons, options=opts)
    if res.status != 0:
        raise RuntimeError(f"MILP solver did not prove optimality: {res.message}")
    bits = tuple(int(round(v)) for v in res.x[:n])
    energy = p.evaluate(bits)
    return ExactResult(_exact(energy), [bits], None, "milp")


def solve_exact(problem: ProblemLike, num_vars: Optional[int] = None, fixed=None, limit: int = 26) -> ExactResult:
    """Exhaustive tabulation when it is cheap, MILP otherwise."""
    p, n = _poly_and_n(problem, num_vars)
    if n - len(fixed or {}) <= limit:
        return exhaustive_solve(p, n, fixed)
    cliques = dominance = bounds = None
    if isinstance(problem, EncodedProblem) and problem.encoder == nested_shell.NAME:
        cliques = nested_shell.penalty_cliques(problem)
        bounds = nested_shell.contact_bounds(problem)
        if not fixed:
            dominance = nested_shell.symmetry_breaking(problem)
    return milp_solve(p, n, fixed, cliques=cliques, dominance=dominance, count_bounds=bounds)


# -- compiled form for the sampling kernels ----------------------------------


@dataclass
class Compiled:
    n: int
    scaled: Scaled
    const: int
    t_ptr: np.ndarray
    t_var: np.ndarray
    t_coef: np.ndarray
    v_ptr: np.ndarray
    v_term: np.ndarray

    @classmethod
    def of(cls, p: Polynomial, n: int) -> "Compiled":
        s = Scaled.of(p)
        items = [(mask_indices(m), c) for m, c in sorted(s.terms.items()) if m]
        t_ptr = np.zeros(len(items) + 1, dtype=np.int64)
        t_var, t_coef = [], []
        incident: List[List[int]] = [[] for _ in range(n)]
        for t, (idx, c) in enumerate(items):
            t_var.extend(idx)
            t_coef.append(c)
            t_ptr[t + 1] = len(t_var)
            for i in idx:
                incident[i].append(t)
        v_ptr = np.zeros(n + 1, dtype=np.int64)
        for i in range(n):
            v_ptr[i + 1] = v_ptr[i] + len(incident[i])
        v_term = np.array([t for lst in incident for t in lst], dtype=np.int64)
        return cls(
            n,
            s,
            s.terms.get(0, 0),
            t_ptr,
            np.array(t_var, dtype=np.int64),
            np.array(t_coef, dtype=np.int64),
            v_ptr,
            v_term,
        )

    def args(self):
        return (self.const, self.t_ptr, self.t_var, self.t_coef, self.v_ptr, self.v_term)


MAX_COMPONENT = 12


def ancilla_components(p: Polynomial, eliminated: Sequence[int]) -> List[List[int]]:
    """Groups of ``eliminated`` variables linked by shared terms.

    Once the other variables are fixed each group can be minimized on its own.
    """
    elim = sorted(set(eliminated))
    parent = {v: v for v in elim}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    es = set(elim)
    for m in p.masks():
        inside = [i for i in mask_indices(m) if i in es]
        for a in inside[1:]:
            ra, rb = find(inside[0]), find(a)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: Dict[int, List[int]] = {}
    for v in elim:
        groups.setdefault(find(v), []).append(v)
    return [groups[r] for r in sorted(groups)]


@dataclass
class MarginalCompiled:
    """Kernel arrays for annealing with ancilla components minimized out."""

    n: int
    scaled: Scaled
    arrays: tuple

    @classmethod
    def of(cls, p: Polynomial, n: int, eliminated: Sequence[int]) -> "MarginalCompiled":
        s = Scaled.of(p)
        comps = ancilla_components(p, eliminated)
        big = max((len(c) for c in comps), default=0)
        if big > MAX_COMPONENT:
            raise TooLarge(f"ancilla component of {big} variables exceeds {MAX_COMPONENT}")
        where = {v: (k, r) for k, c in enumerate(comps) for r, v in enumerate(c)}
        t_ptr, t_var, t_coef, t_comp, t_local = [0], [], [], [], []
        incident: List[List[int]] = [[] for _ in range(n)]
        for m, c in sorted(s.terms.items()):
            if not m:
                continue
            idx = mask_indices(m)
            comp, local = -1, 0
            t = len(t_coef)
            for i in idx:
                if i in where:
                    comp, r = where[i]
                    local |= 1 << r
                else:
                    t_var.append(i)
                    incident[i].append(t)
            t_ptr.append(len(t_var))
            t_coef.append(c)
            t_comp.append(comp)
            t_local.append(local)
        v_ptr = np.zeros(n + 1, dtype=np.int64)
        for i in range(n):
            v_ptr[i + 1] = v_ptr[i] + len(incident[i])
        sizes = [len(c) for c in comps]
        c_off = np.zeros(len(comps), dtype=np.int64)
        acc = 0
        for k, sz in enumerate(sizes):
            c_off[k] = acc
            acc += 1 << sz
        c_vptr = np.zeros(len(comps) + 1, dtype=np.int64)
        for k, sz in enumerate(sizes):
            c_vptr[k + 1] = c_vptr[k] + sz
        i64 = lambda a: np.array(a, dtype=np.int64)  # noqa: E731
        arrays = (
            s.terms.get(0, 0),
            i64(t_ptr),
            i64(t_var),
            i64(t_coef),
            i64(t_comp),
            i64(t_local),
            v_ptr,
            i64([t for lst in incident for t in lst]),
            c_off,
            i64(sizes),
            i64([v for c in comps for v in c]),
            c_vptr,
            len(comps),
        )
        return cls(n, s, arrays)


def default_eliminated(problem: ProblemLike) -> List[int]:
    """Ancillas a turn encoding can minimize out: everything but the turn bits."""
    if isinstance(problem, EncodedProblem) and problem.turn_indices():
        turns = set(problem.turn_indices())
        return [i for i in range(problem.num_vars) if i not in turns]
    return []


# -- samples ----------------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    bits: Tuple[int, ...]
    energy: object
    subproblem: int = 0
    postprocessed: bool = False

    @property
    def bitstring(self) -> str:
        return "".join(map(str, self.bits))

    def line(self) -> str:
        from .pbp import format_coefficient

        return f"{self.subproblem} {self.bitstring} {format_coefficient(self.energy)}"


@dataclass
class SampleSet:
    """Samples stored as arrays; ``energies`` are scaled by ``den``."""

    states: np.ndarray
    energies: np.ndarray
    den: int
    subproblem: np.ndarray
    postprocessed: bool = False

    def __len__(self) -> int:
        return len(self.energies)

    def energy(self, r: int):
        return _exact(Fraction(int(self.energies[r]), self.den))

    def __getitem__(self, r: int) -> Sample:
        return Sample(tuple(int(b) for b in self.states[r]), self.energy(r), int(self.subproblem[r]), self.postprocessed)

    def __iter__(self):
        return (self[r] for r in range(len(self)))

    def count_at_most(self, energy) -> int:
        bound = Fraction(energy) * self.den
        return int(np.count_nonzero(self.energies <= bound))

    def verify(self, p: Polynomial) -> bool:
        """Re-evaluate every distinct state exactly against ``p``."""
        uniq, inv = np.unique(self.states, axis=0, return_inverse=True)
        inv = np.asarray(inv).reshape(-1)
        exact = [Fraction(p.evaluate([int(b) for b in row])) * self.den for row in uniq]
        return all(int(self.energies[r]) == exact[inv[r]] for r in range(len(self)))

    def dump(self) -> str:
        return "".join(self[r].line() + "\n" for r in range(len(self)))

    @staticmethod
    def concat(sets: Sequence["SampleSet"]) -> "SampleSet":
        den = 1
        for s in sets:
            den = math.lcm(den, s.den)
        return SampleSet(
            np.concatenate([s.states for s in sets]),
            np.concatenate([s.energies * (den // s.den) for s in sets]),
            den,
            np.concatenate([s.subproblem for s in sets]),
            all(s.postprocessed for s in sets),
        )


@dataclass
class Schedule:
    """Geometric temperature ladder, one Metropolis sweep per rung."""

    sweeps: int = 64
    t_hot: Optional[float] = None
    t_cold: Optional[float] = None

    def betas(self, p: Polynomial) -> np.ndarray:
        if self.sweeps == 0:
            return np.zeros(0)
        coeffs = [abs(float(c)) for m, c in p.masks().items() if m and c != 0]
        hot = self.t_hot if self.t_hot is not None else (sum(coeffs) or 1.0)
        cold = self.t_cold if self.t_cold is not None else 1e-3 * (min(coeffs) if coeffs else 1.0)
        if self.sweeps == 1:
            return np.array([1.0 / cold])
        return 1.0 / np.geomspace(hot, cold, self.sweeps)


def simulated_annealing(
    problem: ProblemLike,
    samples: int,
    schedule: Optional[Schedule] = None,
    seed: int = 0,
    num_vars: Optional[int] = None,
    fixed: Optional[Mapping[int, int]] = None,
    subproblem: int = 0,
    eliminate: Optional[Sequence[int]] = None,
) -> SampleSet:
    """Draw ``samples`` annealed assignments; reproducible for a given ``seed``.

    Plain mode runs Metropolis single flips over every free variable.  With
    ``eliminate`` the listed (ancilla) variables are never flipped: each
    group of them sharing terms is held at its exact minimum given the
    other bits, so the chain moves on ``min_ancilla H``.  Turn-ancilla slack
    registers otherwise freeze at temperatures far above the scale of the
    contact energies and pin the fold.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    p, n = _poly_and_n(problem, num_vars)
    fixed = dict(fixed or {})
    schedule = schedule or Schedule()
    clamp = np.zeros(n, dtype=np.uint8)
    for v, b in fixed.items():
        clamp[v] = b
    elim = sorted(set(eliminate or ()) - set(fixed))
    skip = set(fixed) | set(elim)
    free = np.array([i for i in range(n) if i not in skip], dtype=np.int64)
    subs = np.full(samples, subproblem, dtype=np.int64)
    if elim:
        mc = MarginalCompiled.of(p, n, elim)
        betas = schedule.betas(p) / mc.scaled.den
        states, energies = _kernels.anneal_marginal(n, free, clamp, *mc.arrays, betas, samples, seed)
        return SampleSet(states, energies, mc.scaled.den, subs)
    comp = Compiled.of(p, n)
    # temperatures are in problem units; the kernel sees energies times den
    betas = schedule.betas(p) / comp.scaled.den
    states, energies = _kernels.anneal(n, free, clamp, *comp.args(), betas, samples, seed)
    return SampleSet(states, energies, comp.scaled.den, subs)


def descend_set(problem: ProblemLike, sset: SampleSet, num_vars=None, fixed=None) -> SampleSet:
    """Single-flip descent applied to every sample of ``sset``."""
    p, n = _poly_and_n(problem, num_vars)
    comp = Compiled.of(p, n)
    fixed = dict(fixed or {})
    free = np.array([i for i in range(n) if i not in fixed], dtype=np.int64)
    states = sset.states.copy()
    energies = _kernels.descend_many(states, free, *comp.args())
    return SampleSet(states, energies, comp.scaled.den, sset.subproblem.copy(), True)


def single_flip_descent(
    problem: ProblemLike,
    sample: Union[Sample, Sequence[int]],
    num_vars: Optional[int] = None,
    fixed: Optional[Mapping[int, int]] = None,
    return_trace: bool = False,
):
    """Flip the single bit with the largest energy decrease until none helps.

    Ties go to the lowest index.  With ``return_trace`` the energies after
    each flip are returned too (first entry is the input energy).
    """
    p, n = _poly_and_n(problem, num_vars)
    sub = sample.subproblem if isinstance(sample, Sample) else 0
    bits = sample.bits if isinstance(sample, Sample) else tuple(sample)
    comp = Compiled.of(p, n)
    fixed = dict(fixed or {})
    free = np.array([i for i in range(n) if i not in fixed], dtype=np.int64)
    x = np.array(bits, dtype=np.uint8)
    trace = np.empty(n * n + 2, dtype=np.int64)
    steps = _kernels.descend(x, free, *comp.args(), trace)
    out = Sample(tuple(int(b) for b in x), _exact(p.evaluate(x.tolist())), sub, True)
    if return_trace:
        kept = trace[: min(steps + 1, len(trace))]
        return out, [comp.scaled.value(e) for e in kept]
    return out


# -- spin-reversal gauges ---------------------------------------------------


@dataclass
class IsingModel:
    """``E(s) = offset + sum h_i s_i + sum_{i<j} J_ij s_i s_j`` over ``s in {+1, -1}``."""

    h: Dict[int, object]
    J: Dict[Tuple[int, int], object]
    offset: object = 0

    def energy(self, spins: Sequence[int]):
        e = Fraction(self.offset)
        e += sum(Fraction(c) * spins[i] for i, c in self.h.items())
        e += sum(Fraction(c) * spins[i] * spins[j] for (i, j), c in self.J.items())
        return _exact(e)


def to_ising(p: Polynomial) -> IsingModel:
    """Rewrite a 2-local binary polynomial with ``x = (1 - s) / 2``."""
    if p.degree > 2:
        raise NotQuadratic(f"polynomial has degree {p.degree}")
    h: Dict[int, Fraction] = {}
    J: Dict[Tuple[int, int], Fraction] = {}
    off = Fraction(0)
    for idx, c in p.items():
        c = Fraction(c)
        if len(idx) == 0:
            off += c
        elif len(idx) == 1:
            off += c / 2
            h[idx[0]] = h.get(idx[0], 0) - c / 2
        else:
            i, j = idx
            off += c / 4
            h[i] = h.get(i, 0) - c / 4
            h[j] = h.get(j, 0) - c / 4
            J[(i, j)] = J.get((i, j), 0) + c / 4
    return IsingModel(
        {i: _exact(c) for i, c in h.items() if c},
        {k: _exact(c) for k, c in J.items() if c},
        _exact(off),
    )


def from_ising(model: IsingModel) -> Polynomial:
    """Inverse of :func:`to_ising` with ``s = 1 - 2x``."""
    terms: Dict[Tuple[int, ...], Fraction] = {(): Fraction(model.offset)}

    def add(k, c):
        terms[k] = terms.get(k, 0) + c

    for i, c in model.h.items():
        add((), Fraction(c))
        add((i,), -2 * Fraction(c))
    for (i, j), c in model.J.items():
        c = Fraction(c)
        add((), c)
        add((i,), -2 * c)
        add((j,), -2 * c)
        add((i, j), 4 * c)
    return Polynomial({k: _exact(c) for k, c in terms.items()})


def random_gauge(n: int, rng: np.random.Generator) -> Tuple[int, ...]:
    return tuple(int(g) for g in rng.choice((-1, 1), size=n))


def spin_reversal_gauge(problem: ProblemLike, g: Sequence[int]) -> Polynomial:
    """Apply ``h_i -> g_i h_i`` and ``J_ij -> g_i g_j J_ij``.

    The gauged energy at ``g * s`` equals the original energy at ``s``;
    applying the same gauge twice restores the original coefficients.
    """
    p, n = _poly_and_n(problem)
    if any(gi not in (1, -1) for gi in g):
        raise ValueError("gauge entries must be +1 or -1")
    if p.variables and max(p.variables) >= len(g):
        raise ValueError("gauge vector is shorter than the variable count")
    m = to_ising(p)
    gauged = IsingModel(
        {i: c * g[i] for i, c in m.h.items()},
        {(i, j): c * g[i] * g[j] for (i, j), c in m.J.items()},
        m.offset,
    )
    return from_ising(gauged)


def gauge_bits(bits: Sequence[int], g: Sequence[int]) -> Tuple[int, ...]:
    """Binary image of ``g * s``: bits with ``g_i = -1`` are complemented."""
    return tuple(int(b) ^ (gi == -1) for b, gi in zip(bits, g))


# -- splitting --------------------------------------------------------------


@dataclass
class Subproblem:
    """One of ``2**k`` restrictions; ``id`` is the prefix read big-endian."""

    id: int
    fixed: Dict[int, int]
    polynomial: Polynomial
    num_vars: int

    @property
    def prefix(self) -> str:
        return "".join(str(self.fixed[i]) for i in sorted(self.fixed))


def split_variables(problem: ProblemLike, k: int) -> List[int]:
    """Variables fixed by a ``k``-split: the first ``k`` turn bits (or first ``k`` variables)."""
    if isinstance(problem, EncodedProblem):
        order = problem.turn_indices() or list(range(problem.num_vars))
    else:
        order = list(range(problem.num_variables))
    if k > len(order):
        raise ValueError(f"cannot fix {k} variables, only {len(order)} are available")
    return order[:k]


def split_subproblems(problem: ProblemLike, k: int) -> List[Subproblem]:
    if k < 0:
        raise ValueError("k must be >= 0")
    p, n = _poly_and_n(problem)
    vars_ = split_variables(problem, k)
    out = []
    for sid, pattern in enumerate(product((0, 1), repeat=k)):
        fixed = dict(zip(vars_, pattern))
        out.append(Subproblem(sid, fixed, p.fix(fixed), n))
    return out


def merge_minimum(results: Sequence[ExactResult]):
    return min(r.energy for r in results)


# -- statistics -------------------------------------------------------------


def r99(p_s: float, target: float = 0.99) -> float:
    """Repetitions for ``target`` confidence: ``ceil(log(1 - target) / log(1 - p_s))``."""
    if not 0 <= p_s <= 1:
        raise ValueError("p_s must lie in [0, 1]")
    if p_s == 1:
        return 1
    if p_s == 0:
        return math.inf
    return math.ceil(math.log(1 - target) / math.log1p(-p_s))


@dataclass
class RunStats:
    total: int
    hits: int
    p_s: float
    r99: float
    t_sample_us: float
    tts_s: float
    p_s_sub: Optional[float] = None
    flags: List[str] = field(default_factory=list)

    def report(self) -> Dict[str, object]:
        out = {
            "total": self.total,
            "hits": self.hits,
            "p_s": self.p_s,
            "r99": None if math.isinf(self.r99) else self.r99,
            "t_sample_us": self.t_sample_us,
            "tts_s": None if math.isinf(self.tts_s) else self.tts_s,
        }
        if self.p_s_sub is not None:
            out["p_s_sub"] = self.p_s_sub
        if self.flags:
            out["flags"] = list(self.flags)
        return out


def stats(hits: int, total: int, t_sample_us: float = 20.0, strict: bool = True, p_s_sub=None) -> RunStats:
    """``p_s = hits / total``, ``R99`` and ``TTS = R99 * t_sample``.

    ``strict`` raises :class:`DegenerateProbability` for ``hits`` in
    ``{0, total}``; otherwise ``hits = 0`` reports an infinite R99 with the
    ``r99_infinite`` flag and ``hits = total`` reports ``R99 = 1``.
    """
    if total < 1 or not 0 <= hits <= total:
        raise ValueError("need 0 <= hits <= total and total >= 1")
    flags = []
    if hits in (0, total):
        if strict:
            raise DegenerateProbability(f"p_s = {hits}/{total} has no finite, informative R99")
        if hits == 0:
            flags.append("r99_infinite")
    p = hits / total
    rep = r99(p)
    tts = rep * t_sample_us * 1e-6
    return RunStats(total, hits, p, rep, t_sample_us, tts, p_s_sub, flags)


# -- pipeline ---------------------------------------------------------------


@dataclass
class PipelineResult:
    stats: RunStats
    best_energy: object
    best: Sample
    per_subproblem: Dict[int, Tuple[int, int]]
    samples: SampleSet


def _run_batch(args):
    p, n, fixed, sid, m, schedule, seed, descent, eliminate = args
    s = simulated_annealing(p, m, schedule, seed, n, fixed, sid, eliminate)
    if descent:
        s = descend_set(p, s, n, fixed)
    return s


def run_pipeline(
    problem: EncodedProblem,
    k: int = 0,
    samples: int = 1000,
    max_samples: int = 1_000_000,
    target=None,
    schedule: Optional[Schedule] = None,
    seed: int = 0,
    descent: bool = True,
    t_sample_us: float = 20.0,
    workers: int = 1,
    eliminate: Union[str, Sequence[int], None] = "auto",
) -> PipelineResult:
    """Split, anneal, post-process and score.

    Rounds of one batch of ``samples`` per subproblem run until some sample
    reaches ``target`` (when given) or ``max_samples`` are spent.  Hits count
    samples at or below ``target`` (or the best energy seen).  ``eliminate``
    defaults to the non-turn variables (see :func:`simulated_annealing`);
    pass ``None`` for plain single-flip annealing.
    """
    subs = split_subproblems(problem, k)
    elim = default_eliminated(problem) if eliminate == "auto" else list(eliminate or ())
    per_sets: Dict[int, List[SampleSet]] = {s.id: [] for s in subs}
    drawn = 0
    rnd = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while drawn < max_samples:
            m = max(1, min(samples, (max_samples - drawn) // len(subs)))
            jobs = [
                (problem.polynomial, problem.num_vars, s.fixed, s.id, m, schedule, seed + (rnd * len(subs) + s.id) * m,
                 descent, elim)
                for s in subs
            ]
            batch = list(pool.map(_run_batch, jobs)) if pool else [_run_batch(j) for j in jobs]
            for s, st in zip(subs, batch):
                per_sets[s.id].append(st)
            drawn += m * len(subs)
            rnd += 1
            if target is None or any(st.count_at_most(target) for st in batch):
                break
    finally:
        if pool:
            pool.shutdown()
    sets = [SampleSet.concat(per_sets[s.id]) for s in subs]
    allset = SampleSet.concat(sets)
    best_row = int(np.argmin(allset.energies))
    best = allset[best_row]
    goal = best.energy if target is None else target
    per = {s.id: (st.count_at_most(goal), len(st)) for s, st in zip(subs, sets)}
    hits = sum(h for h, _ in per.values())
    p_sub = max(h / t for h, t in per.values())
    st = stats(hits, len(allset), t_sample_us, strict=False, p_s_sub=p_sub)
    return PipelineResult(st, best.energy, best, per, allset)
