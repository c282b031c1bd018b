import math

import numpy as np
import pytest

from exactbn import oracle
from exactbn.bounds import network_score
from exactbn.dataset import Dataset
from exactbn.errors import DataError
from exactbn.scorer import mdl_score_direct


def random_dataset(rng, n, records, arity=2):
    return Dataset.from_codes(rng.integers(0, arity, size=(records, n)))


class TestAllDags:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 3), (3, 25), (4, 543)])
    def test_labeled_dag_counts(self, n, count):
        assert sum(1 for _ in oracle.all_dags(n)) == count


class TestDpOptimal:
    def test_single_variable(self):
        d = Dataset.from_codes([[0], [1], [1]])
        res = oracle.dp_optimal(d)
        assert res.score == pytest.approx(mdl_score_direct(0, 0, d))
        assert res.network.parents == (0,)

    def test_two_variables_by_hand(self):
        rng = np.random.default_rng(21)
        d = random_dataset(rng, 2, 12)
        no_edge = mdl_score_direct(0, 0, d) + mdl_score_direct(1, 0, d)
        x1_to_x2 = mdl_score_direct(0, 0, d) + mdl_score_direct(1, 0b01, d)
        x2_to_x1 = mdl_score_direct(0, 0b10, d) + mdl_score_direct(1, 0, d)
        res = oracle.dp_optimal(d)
        assert res.score == pytest.approx(min(no_edge, x1_to_x2, x2_to_x1), rel=1e-12)

    def test_network_attains_score(self):
        rng = np.random.default_rng(22)
        for _ in range(5):
            d = random_dataset(rng, 4, int(rng.integers(10, 60)), arity=3)
            res = oracle.dp_optimal(d)
            assert network_score(res.network.parents, d) == pytest.approx(res.score, rel=1e-9)

    def test_cap(self):
        d = random_dataset(np.random.default_rng(0), 3, 10)
        with pytest.raises(DataError):
            oracle.dp_optimal(d, cap=2)


class TestExhaustiveOptimal:
    def test_single_variable(self):
        d = Dataset.from_codes([[0], [1]])
        res = oracle.exhaustive_optimal(d)
        assert res.network.parents == (0,)

    def test_two_variables(self):
        rng = np.random.default_rng(23)
        d = random_dataset(rng, 2, 10)
        res = oracle.exhaustive_optimal(d)
        assert res.score == pytest.approx(oracle.dp_optimal(d).score, rel=1e-12)

    @pytest.mark.parametrize("n", [3, 4])
    def test_cross_oracle_agreement(self, n):
        rng = np.random.default_rng(24 + n)
        for _ in range(4):
            d = random_dataset(rng, n, int(rng.integers(8, 50)), arity=int(rng.integers(2, 4)))
            a = oracle.exhaustive_optimal(d)
            b = oracle.dp_optimal(d)
            assert a.score == pytest.approx(b.score, rel=1e-9)

    def test_cap(self):
        d = random_dataset(np.random.default_rng(0), 5, 10)
        with pytest.raises(DataError):
            oracle.exhaustive_optimal(d)


class TestParentBoundEmpirical:
    def test_unrestricted_optimum_never_beats_restricted(self):
        # the exhaustive search allows any parent-set size; it must not
        # find anything better than the size-capped recurrence
        rng = np.random.default_rng(31)
        for _ in range(6):
            n = int(rng.integers(2, 5))
            d = random_dataset(rng, n, int(rng.integers(4, 40)), arity=int(rng.integers(2, 4)))
            free = oracle.exhaustive_optimal(d)
            capped = oracle.dp_optimal(d)
            assert free.score == pytest.approx(capped.score, rel=1e-9)
            assert oracle.max_parent_size(capped.network) <= max(
                1, int(math.log2(2 * d.num_records / math.log2(d.num_records)))
            )
