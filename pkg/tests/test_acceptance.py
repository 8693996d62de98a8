"""Acceptance suite: one test per headline criterion, each printing a PASS/FAIL line.

Oracles are independent of the encoders: the self-avoiding-walk enumerator
for energies and minimizers, brute-force tables for penalties and
reductions, and closed forms written out here for the register sizes.
"""

import math
import random
import time
from functools import lru_cache

import numpy as np
import pytest

from latfold.encoders import nested_shell as ns
from latfold.encoders import turn_ancilla as ta
from latfold.encoders import turn_circuit as tc
from latfold.lattice import CUBIC, PLANAR, saw_enumerate
from latfold.pbp import format_coefficient, mask_indices
from latfold.potentials import hp_table, interaction_matrix, load_potential
from latfold.reduction import reduce_problem, verify_reduction
from latfold.solve import (
    Scaled,
    milp_solve,
    run_pipeline,
    solve_exact,
    split_subproblems,
    stats,
)

from conftest import hp_sequences, random_mj_sequences, turn_minima

pytestmark = pytest.mark.acceptance

_LINES = []


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    if tr is not None and _LINES:
        tr.write_line("")
        tr.write_line("acceptance summary")
        for line in _LINES:
            tr.write_line("  " + line)


def verdict(request, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    _LINES.append(line)
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    if tr is not None:
        tr.write_line("")
        tr.write_line(line)
    else:
        print(line)
    assert ok, line


# -- instances ---------------------------------------------------------------


@lru_cache(maxsize=None)
def _mj():
    return load_potential("mj")


def instances():
    """All HP sequences of length 4-5 and 20 random MJ sequences of length 4-6 (cubic)."""
    out = [("hp", s) for n in (4, 5) for s in hp_sequences(n)]
    out += [("mj", s) for s in random_mj_sequences()]
    return out


def matrix(kind, seq, lattice=CUBIC):
    table = hp_table() if kind == "hp" else _mj()
    return interaction_matrix(seq, table, lattice)


@lru_cache(maxsize=None)
def oracle(kind, seq, lattice=CUBIC):
    return saw_enumerate(seq, matrix(kind, seq, lattice), lattice)


@lru_cache(maxsize=None)
def encoded(encoder, kind, seq, lattice=CUBIC):
    P = matrix(kind, seq, lattice)
    if encoder == "ta":
        return ta.encode(seq, P, lattice=lattice)
    if encoder == "tc":
        return tc.encode(seq, P, lattice=lattice)
    if encoder == "tc-reduced":
        return reduce_problem(encoded("tc", kind, seq, lattice))
    return ns.encode(seq, P)


def turn_ground_states(problem):
    """Minimum of ``min over ancillas`` and the folds at the minimizing turn assignments."""
    mins = turn_minima(problem)
    best = min(mins)
    t = len(problem.turn_indices())
    folds = []
    for x, v in enumerate(mins):
        if v == best:
            bits = [(x >> i) & 1 for i in range(t)] + [0] * (problem.num_vars - t)
            folds.append(problem.decode(bits))
    return best, folds


@lru_cache(maxsize=None)
def ground(encoder, kind, seq):
    """``(energy, decoded minimizers)`` of one encoding, computed exactly."""
    prob = encoded(encoder, kind, seq)
    if encoder in ("ta", "tc"):
        return turn_ground_states(prob)
    res = solve_exact(prob)
    return res.energy, [prob.decode(b) for b in res.argmin]


# -- criteria ----------------------------------------------------------------


def test_oracle_equivalence(request):
    t0 = time.time()
    bad = []
    cases = instances()
    for kind, seq in cases:
        o = oracle(kind, seq)
        coords = {f.coords for f in o.folds}
        canon = {f.canonical().coords for f in o.folds}
        for enc in ("ta", "tc", "ns"):
            e, folds = ground(enc, kind, seq)
            if e != o.energy:
                bad.append(f"{enc} {seq}: {e} != {o.energy}")
                continue
            if any(f is None or not f.is_valid for f in folds):
                bad.append(f"{enc} {seq}: minimizer decodes to an invalid fold")
            elif enc == "ns":
                if any(f.canonical().coords not in canon for f in folds):
                    bad.append(f"{enc} {seq}: minimizer is not an oracle minimizer up to symmetry")
            elif {f.coords for f in folds} != coords:
                bad.append(f"{enc} {seq}: minimizer set differs from the oracle's")
    detail = f"{len(cases)} instances x 3 encodings, {len(bad)} mismatches, {time.time() - t0:.0f}s"
    if bad:
        detail += "; " + "; ".join(bad[:5])
    verdict(request, "oracle equivalence", not bad, detail)


def test_cross_encoding_agreement(request):
    t0 = time.time()
    bad = []
    cases = instances()
    for kind, seq in cases:
        e_ta = ground("ta", kind, seq)[0]
        e_ns = ground("ns", kind, seq)[0]
        e_tc, folds = ground("tc-reduced", kind, seq)
        if not e_ta == e_tc == e_ns:
            bad.append(f"{seq}: ta {e_ta}, tc {e_tc}, ns {e_ns}")
        elif any(f is None or f.coords not in {g.coords for g in oracle(kind, seq).folds} for f in folds):
            bad.append(f"{seq}: reduced turn-circuit minimizer is not an oracle minimizer")
    detail = f"{len(cases)} instances, turn-circuit after reduction, {len(bad)} disagreements, {time.time() - t0:.0f}s"
    if bad:
        detail += "; " + "; ".join(bad[:5])
    verdict(request, "cross-encoding agreement", not bad, detail)


def closed_form_turn_ancilla(n):
    turn = 3 * n - 8
    slack = sum(
        math.ceil(2 * math.log2(j - i)) * ((1 + j - i) % 2) for i in range(n - 4) for j in range(i + 4, n)
    )
    flags = sum((k - j) % 2 for j in range(n - 3) for k in range(j + 3, n))
    return turn + slack + flags


def test_qubit_counts(request):
    bad = []
    for n in range(4, 13):
        # an all-H chain interacts on every odd separation, so every flag is allocated
        seq = "H" * n
        got = ta.encode(seq, interaction_matrix(seq, hp_table())).num_vars
        want = closed_form_turn_ancilla(n)
        if got != want:
            bad.append(f"turn-ancilla N={n}: {got} != {want}")
        got = len(tc.registry(n))
        if got != 3 * n - 8:
            bad.append(f"turn-circuit N={n}: {got} != {3 * n - 8}")
    for n in (4, 5, 6):
        p = tc.encode("H" * n, interaction_matrix("H" * n, hp_table()))
        if p.num_vars != 3 * n - 8 or max(p.polynomial.variables) >= 3 * n - 8:
            bad.append(f"turn-circuit N={n}: Hamiltonian leaves the 3N-8 register")
    detail = "turn-ancilla closed form and turn-circuit 3N-8 for N=4..12"
    verdict(request, "qubit-count formulas", not bad, detail + ("; " + "; ".join(bad) if bad else ""))


def h_improv(n):
    n_redun = n - math.ceil(math.log2(n + 1))
    return (n * n + n - n_redun * n_redun - n_redun) // 2


def _fit_error(ns_, ys, model):
    # relative RMS error of the best single-coefficient fit y ~ a * model(n)
    f = np.array([model(n) for n in ns_], dtype=float)
    y = np.array(ys, dtype=float)
    a = (f @ y) / (f @ f)
    return float(np.sqrt(np.mean(((a * f - y) / y) ** 2)))


def test_circuit_complexity(request):
    rng = random.Random(5)
    bad = []
    for n in range(2, 65):
        if tc.count_adders(n) != h_improv(n):
            bad.append(f"n={n}: {tc.count_adders(n)} adders, closed form {h_improv(n)}")
        # the pruned network still counts: run it on integers
        for _ in range(20):
            xs = [rng.randint(0, 1) for _ in range(n)]
            net = tc.count_bits(xs, 0, tc.half_adder, pruned=True)
            if sum(b << r for r, b in enumerate(net.bits)) != sum(xs) or any(net.dropped):
                bad.append(f"n={n}: pruned network miscounts {xs}")
                break
    for n in range(2, 9):
        s = tc.build_sum_string(0, n, tc.Direction("x", 1))
        if s.adders != h_improv(n):
            bad.append(f"sum string of {n} turns uses {s.adders} adders")
    grid = list(range(8, 65))
    pruned = [tc.count_adders(n) for n in grid]
    full = [tc.count_adders(n, pruned=False) for n in grid]
    nlogn = lambda n: n * math.log2(n)
    quad = lambda n: n * n
    fits = {
        "pruned": (_fit_error(grid, pruned, nlogn), _fit_error(grid, pruned, quad)),
        "unpruned": (_fit_error(grid, full, nlogn), _fit_error(grid, full, quad)),
    }
    if not fits["pruned"][0] < fits["pruned"][1]:
        bad.append("pruned counts do not fit n log n better than n^2")
    if not fits["unpruned"][1] < fits["unpruned"][0]:
        bad.append("unpruned counts do not fit n^2 better than n log n")
    slope = np.polyfit(np.log(grid), np.log(pruned), 1)[0]
    slope_full = np.polyfit(np.log(grid), np.log(full), 1)[0]
    detail = (
        f"h_improv exact for n=2..64; rel. fit error pruned nlogn {fits['pruned'][0]:.3f} vs n^2 "
        f"{fits['pruned'][1]:.3f}, unpruned nlogn {fits['unpruned'][0]:.3f} vs n^2 {fits['unpruned'][1]:.3f}; "
        f"log-log slopes {slope:.2f} / {slope_full:.2f}"
    )
    verdict(request, "circuit complexity", not bad, detail + ("; " + "; ".join(bad[:5]) if bad else ""))


# -- penalty sufficiency -------------------------------------------------------


def turn_penalty_gap(problem, oracle_result):
    """``(lowest invalid energy, highest valid fold energy)`` over all assignments.

    Works on ``min over ancillas`` per turn assignment, which is the lowest
    energy of any full assignment carrying those turn bits.  Also checks that
    every valid fold is priced at exactly its contact energy.
    """
    mins = turn_minima(problem)
    t = len(problem.turn_indices())
    P = problem.interactions
    valid, invalid = [], []
    for x, v in enumerate(mins):
        fold = problem.decode([(x >> i) & 1 for i in range(t)] + [0] * (problem.num_vars - t))
        if fold is not None and fold.is_valid:
            from latfold.lattice import fold_energy

            assert v == fold_energy(fold, P), "valid fold priced above its contact energy"
            valid.append(v)
        else:
            invalid.append(v)
    assert len(valid) == oracle_result.walks
    return min(invalid), max(valid)


def one_hot_grid(problem, space):
    """Scaled energies and fold validity for every one-flag-per-residue assignment."""
    n = space.n
    sets = space.qubitsets
    s = Scaled.of(problem.polynomial)
    shape = [len(q) for q in sets]
    pos = {q: (i, a) for i in range(n) for a, q in enumerate(sets[i])}
    single = [np.zeros(m, dtype=np.int64) for m in shape]
    pair = {}
    const = 0
    for m, c in s.terms.items():
        idx = mask_indices(m)
        if not idx:
            const += c
            continue
        loc = sorted(pos[q] for q in idx)
        if len(idx) == 1:
            single[loc[0][0]][loc[0][1]] += c
        elif loc[0][0] != loc[1][0]:
            (i, a), (j, b) = loc
            pair.setdefault((i, j), np.zeros((shape[i], shape[j]), dtype=np.int64))[a, b] += c
        # two flags of one residue are never both set here

    def spread(arr, dims):
        sh = [1] * n
        for d in dims:
            sh[d] = shape[d]
        return arr.reshape(sh)

    energy = np.full(shape, const, dtype=np.int64)
    for i in range(n):
        energy = energy + spread(single[i], [i])
    for (i, j), tab in pair.items():
        energy = energy + spread(tab, [i, j])
    co = [np.array([space.site[q] for q in sets[i]]) for i in range(n)]
    ok = np.ones(shape, dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            d = np.abs(co[i][:, None, :] - co[j][None, :, :]).sum(-1)
            ok = ok & spread((d == 1) if j == i + 1 else (d > 0), [i, j])
    return energy, ok, s


def shell_penalty_gap(problem):
    """Same quantity for the nested shell, by an exact case split.

    Every assignment either has exactly one flag per residue (enumerated in
    full) or has some residue with no flag or with two or more; each of those
    sets is minimized exactly by MILP with a count constraint on the residue.
    """
    space = ns.build_space(problem.n)
    energy, ok, s = one_hot_grid(problem, space)
    valid_max = s.value(int(energy[ok].max()))
    lows = [s.value(int(energy[~ok].min()))]
    cliques = ns.penalty_cliques(problem)
    bounds = ns.contact_bounds(problem)
    dominance = ns.symmetry_breaking(problem)
    for i, qs in enumerate(space.qubitsets):
        ranges = [(0, 0)] + ([(2, len(qs))] if len(qs) > 1 else [])
        for lo, hi in ranges:
            r = milp_solve(
                problem, cliques=cliques, count_bounds=bounds, dominance=dominance, linear=[(qs, lo, hi)]
            )
            lows.append(r.energy)
    return min(lows), valid_max, int(ok.sum())


def penalty_instances():
    """HP instances (every distinct interaction pattern) and MJ samples, N = 4, 5."""
    seen, out = set(), []
    for n in (4, 5):
        for s in hp_sequences(n):
            pattern = tuple(matrix("hp", s)[i, j] for i in range(n) for j in range(i + 3, n))
            if (n, pattern) not in seen:
                seen.add((n, pattern))
                out.append(("hp", s))
    mj = [s for s in random_mj_sequences() if len(s) in (4, 5)]
    return out, mj


def test_penalty_sufficiency(request):
    t0 = time.time()
    bad = []
    checked = 0
    for lattice in (CUBIC, PLANAR):
        cases = [("hp", s) for n in (4, 5) for s in hp_sequences(n)]
        if lattice == CUBIC:
            cases += [("mj", s) for s in random_mj_sequences() if len(s) in (4, 5)]
        for kind, seq in cases:
            o = oracle(kind, seq, lattice)
            for enc in ("ta", "tc"):
                low, high = turn_penalty_gap(encoded(enc, kind, seq, lattice), o)
                checked += 1
                if not low > high:
                    bad.append(f"{enc} {lattice} {seq}: invalid {low} <= valid {high}")
    hp_cases, mj_cases = penalty_instances()
    for kind, seq in hp_cases + [("mj", s) for s in mj_cases[:4]]:
        low, high, walks = shell_penalty_gap(encoded("ns", kind, seq))
        checked += 1
        if walks != len(_all_walks(len(seq))):
            bad.append(f"ns {seq}: {walks} valid one-hot assignments")
        if not low > high:
            bad.append(f"ns {seq}: invalid {low} <= valid {high}")
    detail = f"{checked} encoded instances, N=4,5, {time.time() - t0:.0f}s"
    verdict(request, "penalty sufficiency", not bad, detail + ("; " + "; ".join(bad[:5]) if bad else ""))


@lru_cache(maxsize=None)
def _all_walks(n):
    """Every self-avoiding walk of ``n`` residues from the origin (no symmetry reduction)."""
    steps = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    out = []

    def grow(path):
        if len(path) == n:
            out.append(tuple(path))
            return
        x = path[-1]
        for d in steps:
            y = (x[0] + d[0], x[1] + d[1], x[2] + d[2])
            if y not in path:
                grow(path + [y])

    grow([(0, 0, 0)])
    return out


def test_reduction_soundness(request):
    t0 = time.time()
    bad = []
    checked = skipped = 0
    cases = [(k, s, lat) for lat in (CUBIC, PLANAR) for n in (4, 5) for k, s in [("hp", x) for x in hp_sequences(n)]]
    cases += [("mj", s, CUBIC) for s in random_mj_sequences() if len(s) <= 5]
    for kind, seq, lat in cases:
        base = encoded("tc", kind, seq, lat)
        red = encoded("tc-reduced", kind, seq, lat)
        if red.num_vars > 24:
            skipped += 1
            continue
        rep = verify_reduction(base.polynomial, red.polynomial, red.reduction, num_original=base.num_vars)
        checked += 1
        if not rep.ok:
            bad.append(f"{lat} {seq}: {rep.original_min} vs {rep.reduced_min}")
    ok = not bad and checked > 0
    detail = f"{checked} turn-circuit instances with <= 24 variables certified ({skipped} larger skipped), {time.time() - t0:.0f}s"
    verdict(request, "reduction soundness", ok, detail + ("; " + "; ".join(bad[:5]) if bad else ""))


def test_metrics(request):
    st = stats(4957, 204_800_000, 20)
    chig = stats(244, 1_000_000, 20)
    ok = abs(st.r99 - 190262) <= 5 and abs(st.tts_s - 3.805) <= 0.001 and chig.r99 == 18872
    detail = f"Trp-Cage R99 {st.r99}, TTS {st.tts_s:.4f}s; Chignolin p_s=0.000244 gives R99 {chig.r99}"
    verdict(request, "metrics reproduction", ok, detail)


def test_pipeline_rehearsal(request):
    t0 = time.time()
    rows = []
    ok = True
    for seq, lattice in (("DAYAQWLK", CUBIC), ("YYDPETGTWY", PLANAR)):
        P = interaction_matrix(seq, _mj(), lattice)
        o = saw_enumerate(seq, P, lattice)
        prob = ta.encode(seq, P, lattice=lattice)
        for k in (0, 2):
            r = run_pipeline(prob, k, samples=250, max_samples=10**6, target=o.energy, seed=11)
            st = r.stats
            hit = r.best_energy == o.energy and st.hits > 0
            ok = ok and hit
            rows.append(
                f"{seq} k={k} oracle {format_coefficient(o.energy)} best {format_coefficient(r.best_energy)} p_s {st.p_s:.3g} "
                f"R99 {st.r99} TTS {st.tts_s:.3g}s ({st.hits}/{st.total})"
            )
    elapsed = time.time() - t0
    ok = ok and elapsed < 600
    verdict(request, "pipeline rehearsal", ok, f"{elapsed:.0f}s; " + "; ".join(rows))


def test_split_merge(request):
    bad = []
    cases = [("hp", "HPPHH"), ("mj", "DAYAQ")]
    for kind, seq in cases:
        for enc in ("ta", "tc", "tc-reduced", "ns"):
            prob = encoded(enc, kind, seq)
            whole = solve_exact(prob).energy
            for k in (1, 2, 3):
                parts = [solve_exact(prob, fixed=s.fixed).energy for s in split_subproblems(prob, k)]
                if min(parts) != whole:
                    bad.append(f"{enc} {seq} k={k}: {min(parts)} != {whole}")
    detail = "N=5, k=1,2,3, turn-ancilla, turn-circuit (before and after reduction), nested-shell"
    verdict(request, "split/merge exactness", not bad, detail + ("; " + "; ".join(bad) if bad else ""))
