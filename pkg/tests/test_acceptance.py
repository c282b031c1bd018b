"""Acceptance suite: one test per exit criterion, one PASS/FAIL line each.

Run with:  pytest tests/test_acceptance.py -v -s

The randomized-oracle sweep (criteria 1, 2, 5, 9) runs once per session
and is shared; any instance that disagrees with the oracles is dumped
under tests/regressions/ before the test fails.
"""

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
import pytest

from _datagen import structured_dataset, uniform_dataset
from exactbn import cli, scorer, varset
from exactbn.bounds import network_score, topological_order
from exactbn.dataset import Dataset
from exactbn.errors import SearchError
from exactbn.oracle import dp_optimal, exhaustive_optimal
from exactbn.order_graph import learn

SWEEP_INSTANCES = 100
SWEEP_SEED = 20250808
REL_TOL = 1e-9

REGRESSION_DIR = os.path.join(os.path.dirname(__file__), "regressions")


def report(number, name):
    def outcome(ok):
        print(f"\nACCEPTANCE {number} ({name}): {'PASS' if ok else 'FAIL'}")

    return outcome


def close(a, b):
    return abs(a - b) <= REL_TOL * max(1.0, abs(b))


def preserve(data: Dataset, tag: str) -> str:
    os.makedirs(REGRESSION_DIR, exist_ok=True)
    path = os.path.join(REGRESSION_DIR, f"{tag}.csv")
    with open(path, "w") as f:
        for row in data.columns.T.tolist():
            f.write(",".join(map(str, row)) + "\n")
    return path


@dataclass
class SweepResult:
    datasets: list = field(default_factory=list)
    dp_scores: list = field(default_factory=list)
    exhaustive_scores: list = field(default_factory=list)  # None when n > 4
    runs: dict = field(default_factory=dict)  # mode -> list of (score, net, stats)
    consistency_violations: int = 0


@pytest.fixture(scope="session")
def sweep(tmp_path_factory):
    rng = np.random.default_rng(SWEEP_SEED)
    root = tmp_path_factory.mktemp("sweep")
    out = SweepResult(runs={"default": [], "safe": [], "nopruning": []})
    t0 = time.perf_counter()
    for i in range(SWEEP_INSTANCES):
        n = int(rng.integers(2, 13))
        records = int(rng.integers(20, 501))
        arity = int(rng.integers(2, 4))
        d = uniform_dataset(rng, n, records, arity)
        out.datasets.append(d)
        out.dp_scores.append(dp_optimal(d).score)
        out.exhaustive_scores.append(exhaustive_optimal(d).score if n <= 4 else None)
        for mode, kwargs in [
            ("default", {}),
            ("safe", {"parent_pruning": False}),
            ("nopruning", {"upper": math.inf}),
        ]:
            try:
                net, stats = learn(d, str(root / f"i{i}-{mode}"), **kwargs)
                out.runs[mode].append((net.score, net, stats))
            except SearchError as exc:
                if "consistency" in str(exc):
                    out.consistency_violations += 1
                out.runs[mode].append((None, None, None))
    print(f"\n[sweep] {SWEEP_INSTANCES} instances x 3 modes in {time.perf_counter() - t0:.1f}s")
    return out


class TestCriterion1OracleOptimality:
    def test_learn_equals_oracles_in_both_modes(self, sweep):
        outcome = report(1, "oracle optimality, both parent-pruning modes")
        try:
            for i, d in enumerate(sweep.datasets):
                want = sweep.dp_scores[i]
                for mode in ("default", "safe"):
                    got = sweep.runs[mode][i][0]
                    if got is None or not close(got, want):
                        path = preserve(d, f"criterion1-{mode}-{i}")
                        pytest.fail(
                            f"instance {i} ({mode}): learn={got!r} dp={want!r}; "
                            f"dataset preserved at {path}"
                        )
                exh = sweep.exhaustive_scores[i]
                if exh is not None:
                    assert close(exh, want), f"instance {i}: exhaustive={exh!r} dp={want!r}"
        except BaseException:
            outcome(False)
            raise
        outcome(True)


class TestCriterion2PruningSoundness:
    def test_disabled_pruning_same_score_and_larger_layers(self, sweep):
        outcome = report(2, "pruning soundness vs upper=inf run")
        try:
            for i, d in enumerate(sweep.datasets):
                want = sweep.dp_scores[i]
                got, _, stats_off = sweep.runs["nopruning"][i]
                assert got is not None and close(got, want), f"instance {i}"
                _, _, stats_on = sweep.runs["default"][i]
                for row_on, row_off in zip(stats_on.layers, stats_off.layers):
                    assert row_on["surviving"] <= row_off["surviving"], (
                        f"instance {i} layer {row_on['layer']}: pruning kept more nodes"
                    )
                    assert row_off["pruned"] == 0
        except BaseException:
            outcome(False)
            raise
        outcome(True)


class TestCriterion3DuplicateDetectionInvariance:
    def test_budget_does_not_change_network_files(self, sweep, tmp_path):
        outcome = report(3, "delayed duplicate detection invariance")
        try:
            for i in range(20):
                d = sweep.datasets[i]
                blobs = []
                for budget in (1, 7, 10**6):
                    net, _ = learn(d, str(tmp_path / f"i{i}-b{budget}"), max_size=budget)
                    blobs.append(
                        cli.format_network(net.parents, d.names, net.score).encode()
                    )
                assert blobs[0] == blobs[1] == blobs[2], f"instance {i}"
        except BaseException:
            outcome(False)
            raise
        outcome(True)


class TestCriterion4ScoreEngineEquivalence:
    def test_accumulated_equals_direct(self, tmp_path):
        outcome = report(4, "sweep-accumulated scores equal direct scores")
        try:
            rng = np.random.default_rng(4)
            for n in range(3, 9):
                d = uniform_dataset(rng, n, int(rng.integers(20, 200)), arity=int(rng.integers(2, 4)))
                cache, _ = scorer.compute_scores(d, str(tmp_path / f"n{n}"))
                tables = [cache.load_table(x) for x in range(n)]
                checked = 0
                while checked < 50:
                    x = int(rng.integers(n))
                    keys = list(tables[x])
                    pm = keys[int(rng.integers(len(keys)))]
                    want = scorer.mdl_score_direct(x, pm, d)
                    got = tables[x][pm]
                    assert math.isfinite(got)
                    assert abs(got - want) <= REL_TOL * max(1.0, abs(want)), (n, x, pm)
                    checked += 1
        except BaseException:
            outcome(False)
            raise
        outcome(True)

    def test_degenerate_zero_count_datasets(self, tmp_path):
        outcome = report(4.1, "zero-count branches and 0*log0 handling")
        try:
            cases = [
                # identical columns, one state never observed
                Dataset.from_codes(
                    np.array([[0, 0, 0], [1, 1, 0]] * 3), arities=[2, 2, 3]
                ),
                # constant column plus all-distinct rows
                Dataset.from_codes(np.array([[0, 0], [0, 1]]), arities=[3, 2]),
                # three states but only corners observed
                Dataset.from_codes(np.array([[0, 2], [2, 0], [0, 2], [2, 0]])),
            ]
            for k, d in enumerate(cases):
                cache, _ = scorer.compute_scores(d, str(tmp_path / f"deg{k}"))
                for x in range(d.n):
                    for pm, got in cache.load_table(x).items():
                        want = scorer.mdl_score_direct(x, pm, d)
                        assert math.isfinite(got) and math.isfinite(want)
                        assert abs(got - want) <= REL_TOL * max(1.0, abs(want)) + 1e-12
        except BaseException:
            outcome(False)
            raise
        outcome(True)


class TestCriterion5HeuristicConsistency:
    def test_no_consistency_violation_in_sweep(self, sweep):
        outcome = report(5, "edge scores never undercut the bound table")
        try:
            assert sweep.consistency_violations == 0
        except BaseException:
            outcome(False)
            raise
        outcome(True)


class TestCriterion6ParentBound:
    def test_bound_values_and_small_instance_check(self, sweep):
        outcome = report(6, "largest-useful-parent-set bound")
        try:
            assert scorer.max_parents(178) == 5
            assert scorer.max_parents(30162) == 11
            # exact integer evaluation: k = floor(log2(2N/log2 N))
            for N, k in ((178, 5), (30162, 11)):
                assert N ** (1 << k) <= 1 << (2 * N)
                assert N ** (1 << (k + 1)) > 1 << (2 * N)
            small = 0
            for i, d in enumerate(sweep.datasets):
                if d.n > 4:
                    continue
                small += 1
                exh = sweep.exhaustive_scores[i]
                assert close(exh, sweep.dp_scores[i]), (
                    f"instance {i}: unrestricted optimum beats the size-capped one"
                )
                net = dp_optimal(d).network
                mp = scorer.max_parents(d.num_records)
                assert all(len(varset.bits(pm)) <= mp for pm in net.parents)
            assert small > 0
        except BaseException:
            outcome(False)
            raise
        outcome(True)


class TestCriterion7DeskScaleEnvelope:
    def test_fourteen_variable_instance_under_a_minute(self, tmp_path):
        outcome = report(7, "14-variable, 178-record instance under 60 s")
        try:
            rng = np.random.default_rng(7)
            d = structured_dataset(rng, 14, 178)
            t0 = time.perf_counter()
            net, _ = learn(d, str(tmp_path / "wine-shaped"))
            elapsed = time.perf_counter() - t0
            print(f"\n[criterion 7] 14 vars / 178 records: {elapsed:.1f}s score={net.score:.2f}")
            assert elapsed < 60.0
        except BaseException:
            outcome(False)
            raise
        outcome(True)

    def test_seventeen_variable_instance_under_ten_minutes(self, tmp_path):
        outcome = report(7.1, "17-variable, 435-record instance under 600 s")
        try:
            rng = np.random.default_rng(7)
            structured_dataset(rng, 14, 178)  # keep the stream aligned
            d = structured_dataset(rng, 17, 435)
            t0 = time.perf_counter()
            net, _ = learn(d, str(tmp_path / "votes-shaped"))
            elapsed = time.perf_counter() - t0
            print(f"\n[criterion 7] 17 vars / 435 records: {elapsed:.1f}s score={net.score:.2f}")
            assert elapsed < 600.0
        except BaseException:
            outcome(False)
            raise
        outcome(True)


class TestCriterion8FrontierMemory:
    def test_layer_files_deleted_and_profile_rises_and_falls(self, tmp_path):
        outcome = report(8, "frontier deletion discipline and disk profile")
        try:
            rng = np.random.default_rng(8)
            d = structured_dataset(rng, 14, 178)
            violations = []

            def hook(layer, workdir):
                for dirpath, _, names in os.walk(workdir):
                    rel = os.path.relpath(dirpath, workdir)
                    for fname in names:
                        if rel.startswith("recon") or fname == "meta.json":
                            continue
                        idx = int("".join(c for c in fname if c.isdigit()))
                        if idx < layer:
                            violations.append((layer, os.path.join(rel, fname)))

            _, stats = learn(d, str(tmp_path / "hooked"), upper=math.inf, layer_hook=hook)
            assert not violations, violations[:5]
            profile = [row["disk_bytes"] for row in stats.layers]
            peak = max(profile)
            peak_at = profile.index(peak)
            assert 0 < peak_at < len(profile) - 1
            assert profile[0] < peak and profile[-1] < peak
            csv = stats.to_csv()
            assert csv.splitlines()[0] == "layer,generated,pruned,surviving,disk_bytes"
        except BaseException:
            outcome(False)
            raise
        outcome(True)


class TestCriterion9ReconstructionClosure:
    def test_every_network_acyclic_and_rescores_to_goal(self, sweep):
        outcome = report(9, "reconstruction closure")
        try:
            for i, d in enumerate(sweep.datasets):
                for mode in ("default", "safe", "nopruning"):
                    got, net, _ = sweep.runs[mode][i]
                    assert net is not None, f"instance {i} ({mode})"
                    assert topological_order(net.parents) is not None
                    rescored = network_score(net.parents, d)
                    assert abs(rescored - got) <= REL_TOL * max(1.0, abs(got)), (
                        f"instance {i} ({mode}): goal={got!r} rescored={rescored!r}"
                    )
        except BaseException:
            outcome(False)
            raise
        outcome(True)
