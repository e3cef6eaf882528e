"""Loop recognition, sensor/action partitions, extension, verifiers."""

from fractions import Fraction

import pytest

from stpagency.chain import MarkovChain, Stp, VarIndex, validate_chain
from stpagency.errors import (
    EmptyEnvironmentSet,
    HorizonExceedsChain,
    InvalidChain,
    NotAPaLoop,
)
from stpagency.generators import random_paloop
from stpagency.inference import enumerate_support
from stpagency.paloop import (
    ExtendedPaLoop,
    PaLoop,
    conditional_entropy_next_memory,
    extend_paloop,
    extract_action_partition,
    extract_sensor_partition,
    memory_path_id,
    positive_prefix_anchors,
    specialization_survey,
    verify_action_entropy_equivalence,
    verify_invariant_extension,
    verify_perception_specialization,
)

BINARY = ("0", "1")
UNIFORM = (Fraction(1, 2), Fraction(1, 2))


def point(value):
    return tuple(Fraction(1) if s == value else Fraction(0) for s in BINARY)


def half_sensing_loop():
    """M@1 ignores E when M@0=0 and copies E when M@0=1; E@1 is noise."""
    alphabets = {VarIndex(j, t): BINARY for j in "ME" for t in (0, 1)}
    parents = {VarIndex(j, 1): [VarIndex("E", 0), VarIndex("M", 0)] for j in "ME"}
    mechanisms = {
        VarIndex("M", 0): {(): UNIFORM},
        VarIndex("E", 0): {(): UNIFORM},
        VarIndex("M", 1): {
            ("0", "0"): UNIFORM,
            ("1", "0"): UNIFORM,
            ("0", "1"): point("0"),
            ("1", "1"): point("1"),
        },
        VarIndex("E", 1): {(e, m): UNIFORM for e in BINARY for m in BINARY},
    }
    return PaLoop.from_chain(MarkovChain(["M", "E"], 1, alphabets, parents, mechanisms))


class TestRecognition:
    def test_wrong_labels(self, ca2_fix):
        with pytest.raises(NotAPaLoop):
            PaLoop.from_chain(ca2_fix)

    def test_wrong_parents(self, pa_fix):
        doc = pa_fix.to_document()
        doc["parents"]["M@1"] = ["E@0"]
        doc["mechanisms"]["M@1"] = {"0": ["1", "0"], "1": ["0", "1"]}
        with pytest.raises(NotAPaLoop):
            PaLoop.from_chain(MarkovChain.from_document(doc))

    def test_invalid_chain_refused_first(self, pa_fix):
        doc = pa_fix.to_document()
        doc["mechanisms"]["M@0"] = {"": ["1/2", "1/3"]}
        with pytest.raises(InvalidChain):
            PaLoop.from_chain(MarkovChain.from_document(doc))

    def test_entity_set_cached(self, pa_loop):
        assert pa_loop.entity_set() is pa_loop.entity_set()


class TestPartitions:
    def test_xor_loop_senses_everything(self, pa_loop):
        for t in (0, 1):
            assert extract_sensor_partition(pa_loop, t).blocks == (("0",), ("1",))
            assert extract_action_partition(pa_loop, t).blocks == (("0", "1"),)

    def test_degenerate_loop_senses_nothing(self, degenerate_loop):
        for t in (0, 1):
            assert extract_sensor_partition(degenerate_loop, t).blocks == (("0",),)
            assert extract_action_partition(degenerate_loop, t).blocks == (("0", "1"),)

    def test_half_sensing_loop_still_splits(self):
        # m=1 distinguishes the environments even though m=0 does not
        assert extract_sensor_partition(half_sensing_loop(), 0).blocks == (("0",), ("1",))

    def test_transition_bounds(self, pa_loop):
        with pytest.raises(HorizonExceedsChain):
            extract_sensor_partition(pa_loop, 2)
        with pytest.raises(HorizonExceedsChain):
            extract_action_partition(pa_loop, -1)


class TestExtension:
    def test_shape(self, pa_loop):
        ext = extend_paloop(pa_loop)
        chain = ext.chain
        assert chain.t_max == 4
        assert set(chain.spatial) == {"M", "A", "S", "E"}
        assert validate_chain(chain).ok
        # sensor alphabet carries the block labels, actuator collapses
        assert chain.alphabets[VarIndex("S", 1)] == ("0", "1")
        assert chain.alphabets[VarIndex("A", 1)] == ("0+1",)
        # inert at even timesteps
        assert chain.alphabets[VarIndex("S", 0)] == ("*",)
        assert chain.alphabets[VarIndex("A", 4)] == ("*",)
        assert ext.extended_var(VarIndex("M", 2)) == VarIndex("M", 4)

    def test_half_steps_hold_values(self, pa_loop):
        ext = extend_paloop(pa_loop)
        support = enumerate_support(ext.chain)
        assert len(support) == 16
        for tr in support:
            for t in (0, 1):
                odd = 2 * t + 1
                assert tr.stp.get(VarIndex("M", odd)) == tr.stp.get(VarIndex("M", 2 * t))
                assert tr.stp.get(VarIndex("E", odd)) == tr.stp.get(VarIndex("E", 2 * t))
                # block labels equal the member symbols here
                assert tr.stp.get(VarIndex("S", odd)) == tr.stp.get(VarIndex("E", 2 * t))
                assert tr.stp.get(VarIndex("A", odd)) == "0+1"

    def test_marginal_matches_exactly(self, pa_loop, degenerate_loop):
        for loop in (pa_loop, degenerate_loop):
            check = verify_invariant_extension(loop, extend_paloop(loop))
            assert check.equal
            assert check.max_discrepancy == 0
        payload = verify_invariant_extension(pa_loop, extend_paloop(pa_loop)).payload()
        assert payload == {
            "equal": True,
            "max_discrepancy": "0",
            "assignments_checked": 16,
        }

    def test_corrupted_sensor_is_detected(self, pa_loop):
        ext = extend_paloop(pa_loop)
        doc = ext.chain.to_document()
        # sensor misreads environment 1 as block "0"
        doc["mechanisms"]["S@1"]["1"] = ["1", "0"]
        broken = ExtendedPaLoop(
            MarkovChain.from_document(doc),
            pa_loop,
            ext.sensor_partitions,
            ext.action_partitions,
        )
        check = verify_invariant_extension(pa_loop, broken)
        assert not check.equal
        assert check.max_discrepancy > 0

    def test_random_loops(self):
        for seed in range(20):
            loop = random_paloop(seed)
            check = verify_invariant_extension(loop, extend_paloop(loop))
            assert check.equal, f"seed {seed}"


class TestEntropy:
    def test_xor_loop_is_one_bit(self, pa_loop):
        for t in (0, 1):
            result = conditional_entropy_next_memory(pa_loop, t)
            assert result.bits == 1.0
            assert result.positive

    def test_degenerate_loop_is_zero(self, degenerate_loop):
        result = conditional_entropy_next_memory(degenerate_loop, 0)
        assert result.bits == 0.0
        assert not result.positive

    def test_bounds(self, pa_loop):
        with pytest.raises(HorizonExceedsChain):
            conditional_entropy_next_memory(pa_loop, 2)


class TestActionEntropyEquivalence:
    def test_fixtures(self, pa_loop, degenerate_loop):
        for t in (0, 1):
            row = verify_action_entropy_equivalence(pa_loop, t)
            assert row.action_exists and row.entropy_positive and row.equivalent
            row = verify_action_entropy_equivalence(degenerate_loop, t)
            assert not row.action_exists and not row.entropy_positive
            assert row.equivalent and row.entropy_bits == 0.0

    def test_random_loops(self):
        for seed in range(20):
            loop = random_paloop(seed)
            for t in range(loop.chain.t_max):
                row = verify_action_entropy_equivalence(loop, t)
                assert row.equivalent, f"seed {seed} t {t}"
                assert (row.entropy_bits > 0) == row.entropy_positive

    def test_memory_path_id(self, pa_loop):
        tr = enumerate_support(pa_loop.chain)[0]
        assert memory_path_id(pa_loop, tr.stp) == "0,0,0"


class TestSpecialization:
    def test_xor_loop_anchor(self, pa_loop):
        result = verify_perception_specialization(pa_loop, "0,0,0", 1)
        assert result.matches
        assert result.morphs_match_mechanism
        assert result.sensor_refines
        assert result.anchor_memory == "0"
        assert result.perception.blocks == (("0",), ("1",))
        assert result.anchor_row_partition.same_blocks(result.perception)
        assert result.sensor_restricted.same_blocks(result.perception)

    def test_survey_covers_all_anchors(self, pa_loop, degenerate_loop):
        survey = specialization_survey(pa_loop)
        assert len(survey) == 16  # 8 realizable anchors at each of two timesteps
        assert all(r.matches and r.morphs_match_mechanism and r.sensor_refines for r in survey)
        survey = specialization_survey(degenerate_loop)
        assert [(r.t, r.anchor_id) for r in survey] == [
            (0, "0,0,0"), (0, "0,0,1"), (0, "0,1,0"), (0, "0,1,1"),
            (1, "0,0,0"), (1, "0,0,1"),
        ]
        assert all(r.matches for r in survey)

    def test_positive_prefix_filter(self, degenerate_loop):
        assert positive_prefix_anchors(degenerate_loop, 1) == ("0,0,0", "0,0,1")
        # a never-realized prefix leaves nothing to perceive
        with pytest.raises(EmptyEnvironmentSet):
            verify_perception_specialization(degenerate_loop, "1,1,1", 0)

    def test_sensor_can_be_strictly_finer(self):
        loop = half_sensing_loop()
        blind = verify_perception_specialization(loop, "0,0", 0)
        assert blind.matches and blind.sensor_refines
        assert blind.perception.blocks == (("0", "1"),)
        assert not blind.sensor_restricted.same_blocks(blind.perception)
        sighted = verify_perception_specialization(loop, "1,0", 0)
        assert sighted.matches
        assert sighted.perception.blocks == (("0",), ("1",))
        assert sighted.sensor_restricted.same_blocks(sighted.perception)

    def test_random_loops(self):
        for seed in range(10):
            for result in specialization_survey(random_paloop(seed)):
                assert result.matches, f"seed {seed}: {result.anchor_id} t={result.t}"
                assert result.morphs_match_mechanism
                assert result.sensor_refines

    def test_payload_shape(self, pa_loop):
        payload = verify_perception_specialization(pa_loop, "0,0,0", 1).payload()
        assert payload["matches"] is True
        assert payload["perception"]["blocks"] == [["0"], ["1"]]
        assert payload["pipeline"]["anchor"] == "0,0,0"
