"""Session driver tests: Monte Carlo reproducibility, enumeration, sweeps."""

import itertools

import numpy as np
import pytest

from ghzqss.harness import (
    COMPATIBLE,
    MAX_ENUM_ROUNDS,
    Scenario,
    SimConfig,
    TapeDecider,
    derived_seed,
    enumerate_branches,
    original_plans,
    revised_plans,
    run_grid,
    run_simulation,
    stream,
)
from ghzqss.protocol import (
    CARRIER,
    W1,
    W2,
    CarrierTracker,
    EntangledPair,
    ProductPair,
    RoundPlan,
    SinglePair,
    transcripts_to_jsonl,
)
from ghzqss.qsim import equal_up_to_sign


class TestSeeding:
    def test_streams_are_reproducible_and_distinct(self):
        a = stream(5, 0).random(8)
        b = stream(5, 0).random(8)
        c = stream(5, 1).random(8)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_derived_seed_is_stable(self):
        assert derived_seed(1, 2, 3) == derived_seed(1, 2, 3)
        assert derived_seed(1, 2, 3) != derived_seed(1, 2, 4)


class TestSimConfigValidation:
    @pytest.mark.parametrize(
        "kwargs,match",
        [
            (dict(variant="bogus"), "unknown variant"),
            (dict(variant="revised", strategy="a2"), "not defined"),
            (dict(variant="original", strategy="a1"), "not defined"),
            (dict(variant="original", strategy="a2-probe"), "not defined"),
            (dict(variant="original", strategy="dishonest-bob"), "not defined"),
            (dict(strategy="unheard-of"), "not defined"),
            (dict(rounds=0), "at least 1"),
            (dict(check_fraction=0.0), "check_fraction"),
            (dict(check_fraction=1.2), "check_fraction"),
            (dict(hadamard_bias=-0.1), "hadamard_bias"),
            (dict(hadamard_bias=1.5), "hadamard_bias"),
            (dict(rounds=3, secret_bits="01"), "3 rounds"),
            (dict(rounds=3, secret_bits="01x"), "only 0 and 1"),
        ],
    )
    def test_bad_configs_are_rejected(self, kwargs, match):
        with pytest.raises(ValueError, match=match):
            SimConfig(**kwargs)

    def test_compatibility_table(self):
        assert COMPATIBLE["original"] == ("none", "a2")
        assert COMPATIBLE["revised"] == ("none", "a1", "a2-probe", "dishonest-bob")
        for variant, strategies in COMPATIBLE.items():
            for s in strategies:
                SimConfig(variant=variant, strategy=s)


class TestRunSimulation:
    def test_runs_are_byte_deterministic(self):
        cfg = SimConfig(variant="revised", strategy="dishonest-bob", rounds=60, seed=9)
        outs = []
        for _ in range(2):
            transcripts = []
            report = run_simulation(cfg, transcripts_out=transcripts)
            outs.append((report.to_dict(), transcripts_to_jsonl(transcripts)))
        assert outs[0] == outs[1]

    @pytest.mark.parametrize("variant", ["original", "revised"])
    def test_honest_sessions_never_err(self, variant):
        cfg = SimConfig(variant=variant, strategy="none", rounds=400, seed=21)
        report = run_simulation(cfg)
        assert report.honest_error_rate == 0.0
        assert not report.detected
        assert report.eve_accuracy is None
        assert report.rounds_run == 400

    def test_checked_round_count_follows_the_fraction(self):
        for fraction, rounds in ((0.25, 80), (1.0, 31), (0.013, 50)):
            cfg = SimConfig(rounds=rounds, seed=2, check_fraction=fraction)
            report = run_simulation(cfg)
            assert report.checked_rounds == max(1, round(fraction * rounds))

    def test_preset_secrets_are_used(self):
        bits = "0110101001"
        transcripts = []
        run_simulation(SimConfig(rounds=10, seed=4, secret_bits=bits), transcripts)
        assert "".join(str(t.secret) for t in transcripts) == bits

    def test_mode_breakdown_partitions_the_rounds(self):
        report = run_simulation(SimConfig(rounds=300, seed=8))
        assert sum(slot["rounds"] for slot in report.mode_breakdown.values()) == 300
        assert set(report.mode_breakdown) <= {"pair", "single_w1", "single_w2"}
        original = run_simulation(SimConfig(variant="original", rounds=11, seed=8))
        assert original.mode_breakdown["product"]["rounds"] == 6
        assert original.mode_breakdown["pair"]["rounds"] == 5

    def test_hadamard_bias_extremes(self):
        all_single = run_simulation(SimConfig(rounds=50, seed=3, hadamard_bias=0.0))
        assert "pair" not in all_single.mode_breakdown
        # A coin of 1 every round alternates the carrier form, so the
        # modes alternate pair/single rather than staying entangled.
        alternating = run_simulation(SimConfig(rounds=50, seed=3, hadamard_bias=1.0))
        assert alternating.mode_breakdown["pair"]["rounds"] == 25

    def test_full_schedule_reads_everything_without_detection(self):
        cfg = SimConfig(variant="original", strategy="a2", rounds=80, seed=13, check_fraction=0.5)
        report = run_simulation(cfg)
        assert report.honest_error_rate == 0.0
        assert not report.detected
        assert report.eve_accuracy == 1.0

    def test_passive_probes_are_not_scored(self):
        report = run_simulation(SimConfig(strategy="a1", rounds=30, seed=1))
        assert report.eve_accuracy is None
        report = run_simulation(SimConfig(strategy="a2-probe", rounds=30, seed=1))
        assert report.eve_accuracy is None

    def test_dishonest_receiver_profile(self):
        cfg = SimConfig(strategy="dishonest-bob", rounds=900, seed=5, check_fraction=1.0)
        report = run_simulation(cfg)
        breakdown = report.mode_breakdown
        assert breakdown["single_w1"]["error_rate"] == 0.0
        assert abs(breakdown["single_w2"]["error_rate"] - 0.5) < 0.12
        assert abs(breakdown["pair"]["error_rate"] - 0.5) < 0.12
        assert report.detected
        # He names every single-round secret and none of the pair rounds.
        singles = breakdown["single_w1"]["rounds"] + breakdown["single_w2"]["rounds"]
        assert abs(report.eve_accuracy - singles / 900) < 0.12

    def test_detect_threshold_can_tolerate_errors(self):
        cfg = SimConfig(
            strategy="dishonest-bob", rounds=200, seed=5, check_fraction=1.0,
            detect_threshold=0.9,
        )
        report = run_simulation(cfg)
        assert report.honest_error_rate > 0.0
        assert not report.detected


class TestTapeDecider:
    def test_tape_semantics(self):
        decider = TapeDecider([1, 0])
        assert decider.random() == 0.0  # forces outcome 1
        assert decider.random() == 1.0  # forces outcome 0
        assert decider.random() == 1.0  # past the prefix: forced 0
        assert decider.consumed == [1, 0, 0]


class TestEnumeration:
    def test_honest_scenario_forks_only_on_pair_rounds(self):
        plans = revised_plans((1, 1, 0, 1), (0, 1, 1, 0), targets=(W1, W1, W2, W1))
        branches = enumerate_branches(Scenario("revised", plans))
        # Rounds 1 and 4 are entangled (coin^parity == 1); Bob's readout
        # forks each of them, singles are deterministic.
        assert len(branches) == 4
        for branch in branches:
            assert abs(branch.probability - 0.25) < 1e-9
            assert branch.errors == 0
            assert branch.world.labels == CARRIER
        assert abs(sum(b.probability for b in branches) - 1.0) < 1e-9

    def test_final_world_matches_the_tracker_form(self):
        plans = revised_plans((1, 0), (1, 0), targets=(W1, W2))
        for branch in enumerate_branches(Scenario("revised", plans)):
            tracker = CarrierTracker(1)  # one coin flip happened
            assert equal_up_to_sign(branch.world, tracker.expected_state())

    @pytest.mark.parametrize(
        "variant,strategy,plans",
        [
            ("original", "a2", None),
            ("revised", "a1", None),
            ("revised", "a2-probe", None),
            ("revised", "dishonest-bob", None),
        ],
    )
    def test_branch_probabilities_sum_to_one(self, variant, strategy, plans):
        if variant == "original":
            plans = original_plans((1, 0, 1, 0))
        else:
            plans = revised_plans((1, 1, 0, 1), (0, 1, 1, 0), targets=(W1, W2, W2, W1))
        branches = enumerate_branches(Scenario(variant, plans, strategy=strategy))
        assert abs(sum(b.probability for b in branches) - 1.0) < 1e-9

    def test_enumeration_is_exhaustive_for_the_full_schedule(self):
        # Odd rounds decode deterministically under the schedule; round 2
        # forks once (Bob's readout) and even rounds from 4 fork twice,
        # so four rounds give 8 equal branches.
        branches = enumerate_branches(
            Scenario("original", original_plans((1, 1, 0, 1)), strategy="a2")
        )
        assert len(branches) == 8
        for b in branches:
            assert abs(b.probability - 1.0 / 8) < 1e-9

    def test_round_cap(self):
        plans = original_plans([0] * (MAX_ENUM_ROUNDS + 1))
        with pytest.raises(ValueError, match="capped"):
            Scenario("original", plans)

    def test_scenario_validation(self):
        with pytest.raises(ValueError, match="at least one"):
            Scenario("revised", ())
        bad_index = (RoundPlan(2, EntangledPair(0), alice_hadamard=1),)
        with pytest.raises(ValueError, match="round_index"):
            Scenario("revised", bad_index)
        with pytest.raises(ValueError, match="not defined"):
            Scenario("revised", original_plans((0,)), strategy="a2")
        mismatched = (RoundPlan(1, EntangledPair(0), alice_hadamard=0),)
        with pytest.raises(ValueError, match="against the carrier form"):
            Scenario("revised", mismatched)
        no_coin = (RoundPlan(1, EntangledPair(0)),)
        with pytest.raises(ValueError, match="need alice_hadamard"):
            Scenario("revised", no_coin)
        wrong_alt = (RoundPlan(1, EntangledPair(0)),)
        with pytest.raises(ValueError, match="alternate"):
            Scenario("original", wrong_alt)

    def test_monte_carlo_agrees_with_exact_probabilities(self):
        # Two-round sessions, coin forced to 1 both rounds: a pair round
        # followed by a single round.  The exact round-2 error rates come
        # from enumeration (averaged over target and payload); sampled
        # frequencies must sit within 3 sigma.
        for strategy, exact in (("a1", 0.25), ("a2-probe", 0.5)):
            total = 0.0
            for q1 in (0, 1):
                for target in (W1, W2):
                    plans = revised_plans(
                        (1, 1), (0, 0), q1_bits=(0, q1), targets=(W1, target)
                    )
                    branches = enumerate_branches(Scenario("revised", plans, strategy=strategy))
                    total += sum(
                        b.probability
                        for b in branches
                        if b.transcripts[1].recovered != b.transcripts[1].secret
                    ) / 4
            assert abs(total - exact) < 1e-9

            n = 400
            errs = 0
            for j in range(n):
                transcripts = []
                run_simulation(
                    SimConfig(
                        strategy=strategy, rounds=2, seed=derived_seed(4242, j),
                        check_fraction=1.0, hadamard_bias=1.0,
                    ),
                    transcripts,
                )
                errs += int(transcripts[1].recovered != transcripts[1].secret)
            sigma = np.sqrt(exact * (1 - exact) / n)
            assert abs(errs / n - exact) <= 3 * sigma


class TestPlansBuilders:
    def test_original_plans_alternate(self):
        plans = original_plans((1, 0, 1))
        assert [type(p.mode) for p in plans] == [ProductPair, EntangledPair, ProductPair]
        assert [p.secret for p in plans] == [1, 0, 1]
        assert all(p.alice_hadamard is None for p in plans)

    def test_revised_plans_respect_the_pairing_rule(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            coins = [int(b) for b in rng.integers(0, 2, size=n)]
            secrets = [int(b) for b in rng.integers(0, 2, size=n)]
            plans = revised_plans(coins, secrets)
            Scenario("revised", plans)  # validation would raise on a bad pairing
            parity = 0
            for plan, coin in zip(plans, coins):
                is_pair = isinstance(plan.mode, EntangledPair)
                assert is_pair == bool(coin ^ parity)
                parity ^= coin

    def test_revised_plans_steering(self):
        plans = revised_plans((0, 0), (1, 1), q1_bits=(1, 0), targets=(W2, W1))
        assert isinstance(plans[0].mode, SinglePair)
        assert plans[0].mode.q1 == 1 and plans[0].mode.q2 == 0
        assert plans[0].target == W2 and plans[1].target == W1
        with pytest.raises(ValueError, match="equal length"):
            revised_plans((0, 1), (1,))


class TestRunGrid:
    def test_grid_shape_and_determinism(self):
        reports = run_grid("revised", ["none", "a1"], [20, 30], [0.25], repeats=2, master_seed=7)
        assert len(reports) == 2 * 2 * 1 * 2
        again = run_grid("revised", ["none", "a1"], [20, 30], [0.25], repeats=2, master_seed=7)
        assert [r.to_dict() for r in reports] == [r.to_dict() for r in again]
        combos = {(r.strategy, r.rounds) for r in reports}
        assert combos == set(itertools.product(("none", "a1"), (20, 30)))
        seeds = [r.seed for r in reports]
        assert len(set(seeds)) == len(seeds)

    def test_grid_validation(self):
        with pytest.raises(ValueError, match="empty"):
            run_grid("revised", [], [10], [0.5], 1, 0)
        with pytest.raises(ValueError, match="repeats"):
            run_grid("revised", ["none"], [10], [0.5], 0, 0)
        with pytest.raises(ValueError, match="not defined"):
            run_grid("original", ["a1"], [10], [0.5], 1, 0)
