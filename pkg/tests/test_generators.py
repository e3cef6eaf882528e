from fractions import Fraction

from oracles import ve_probability
from stpagency.chain import EMPTY_STP, validate_chain
from stpagency.generators import random_chain, random_paloop
from stpagency.inference import enumerate_support


def test_seed_pins_the_chain():
    for seed in (0, 7, 123):
        assert random_chain(seed).to_document() == random_chain(seed).to_document()
        assert (
            random_paloop(seed).chain.to_document()
            == random_paloop(seed).chain.to_document()
        )


def test_seeds_vary():
    docs = {str(random_chain(seed).to_document()) for seed in range(10)}
    assert len(docs) > 1


def test_chains_are_valid_and_bounded():
    for seed in range(30):
        chain = random_chain(seed)
        assert validate_chain(chain).ok
        assert 1 <= len(chain.spatial) <= 3
        assert 1 <= chain.t_max <= 2
        for var in chain.variables:
            assert 1 <= len(chain.alphabets[var]) <= 3
            for row in chain.mechanisms[var].values():
                assert sum(row) == 1
                assert all(p.denominator <= 16 for p in row)


def test_loops_are_valid():
    for seed in range(30):
        loop = random_paloop(seed)
        assert validate_chain(loop.chain).ok
        assert set(loop.chain.spatial) == {"M", "E"}
        assert 1 <= loop.chain.t_max <= 3


def test_support_is_a_distribution():
    for seed in range(10):
        chain = random_chain(seed)
        support = enumerate_support(chain)
        assert sum(tr.probability for tr in support) == 1
        assert ve_probability(chain, EMPTY_STP) == 1


def test_fully_deterministic_rows_leave_one_trajectory():
    for seed in range(5):
        loop = random_paloop(seed, deterministic_fraction=1.0)
        assert len(enumerate_support(loop.chain)) == 1


def test_zero_entries_appear():
    # cut-point rows may park mass on a boundary; over many seeds some must
    found = False
    for seed in range(20):
        chain = random_chain(seed, deterministic_fraction=0.0)
        for var in chain.variables:
            for row in chain.mechanisms[var].values():
                if len(row) > 1 and Fraction(0) in row:
                    found = True
    assert found
