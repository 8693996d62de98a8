import itertools
import random

import pytest
from hypothesis import settings

from latfold.potentials import hp_table, interaction_matrix, load_potential

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")


def hp_sequences(n):
    return ["".join(s) for s in itertools.product("HP", repeat=n)]


def random_mj_sequences(count=20, lengths=(4, 5, 6), seed=2021):
    rng = random.Random(seed)
    letters = "ACDEFGHIKLMNPQRSTVWY"
    return ["".join(rng.choice(letters) for _ in range(rng.choice(lengths))) for _ in range(count)]


@pytest.fixture(scope="session")
def hp():
    return hp_table()


@pytest.fixture(scope="session")
def mj():
    return load_potential("mj")


def hp_matrix(seq, lattice="cubic"):
    return interaction_matrix(seq, hp_table(), lattice)


def turn_minima(problem):
    """Exact ``min over ancillas`` of H for every turn-register assignment.

    Turn bits occupy the low indices, so entry ``x`` of the result belongs
    to the assignment with ``q_i = (x >> i) & 1``.
    """
    from fractions import Fraction

    from latfold.solve import energy_table

    t = len(problem.turn_indices())
    assert problem.turn_indices() == list(range(t))
    table, den = energy_table(problem.polynomial, problem.num_vars)
    mins = table.reshape(-1, 1 << t).min(axis=0)
    return [Fraction(int(v), den) for v in mins]


def turn_bits(x, t):
    return [(x >> i) & 1 for i in range(t)]
