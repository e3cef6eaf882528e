"""Perception pipeline: co-entities, environments, branching, morphs, partitions."""

from fractions import Fraction

import pytest

from stpagency.chain import Stp
from stpagency.entities import build_all_stps, build_paloop_entity_set, entity_set_from_document
from stpagency.errors import (
    AnchorSliceMissing,
    ConditionHasZeroProbability,
    EmptyEnvironmentSet,
    EnvironmentNotCoPerception,
    HorizonExceedsChain,
    InterpenetratingEntitySet,
    QueryInvariantViolated,
)
from stpagency.perceptions import (
    branch_morph,
    branching_partition,
    co_perception_entities,
    co_perception_environments,
    mutual_exclusivity_check,
    perception_partition,
    perception_report,
)


def stp(text):
    return Stp.parse_pattern_string(text)


@pytest.fixture
def pa_entities(pa_loop):
    return build_paloop_entity_set(pa_loop)


class TestCoPerception:
    def test_entities_t1(self, pa_fix, pa_entities):
        assert co_perception_entities(pa_fix, pa_entities, "0,0,0", 1) == ("0,0,0", "0,0,1")

    def test_entities_t0(self, pa_fix, pa_entities):
        assert co_perception_entities(pa_fix, pa_entities, "0,0,0", 0) == (
            "0,0,0", "0,0,1", "0,1,0", "0,1,1",
        )

    def test_environments_t1(self, pa_fix, pa_entities):
        # each value of E@1 is jointly possible with one memory continuation
        assert co_perception_environments(pa_fix, pa_entities, "0,0,0", 1) == (
            stp("E@1=0"), stp("E@1=1"),
        )

    def test_environments_t0(self, pa_fix, pa_entities):
        assert co_perception_environments(pa_fix, pa_entities, "0,0,0", 0) == (
            stp("E@0=0"), stp("E@0=1"),
        )

    def test_impossible_anchor_has_no_environments(self, copy_fix):
        es = build_all_stps(copy_fix, 2)
        # anchor starts at the probability-zero initial value
        with pytest.raises(EmptyEnvironmentSet):
            co_perception_environments(copy_fix, es, "e9", 0)


class TestBranching:
    def test_blocks_t1(self, pa_fix, pa_entities):
        bp = branching_partition(pa_fix, pa_entities, "0,0,0", 1)
        assert bp.carrier == ("0,0,0", "0,0,1")
        assert [(b.block_id, b.members) for b in bp.blocks] == [
            ("M@2=0", ("0,0,0",)),
            ("M@2=1", ("0,0,1",)),
        ]
        assert bp.anchor_block == "M@2=0"
        assert bp.as_partition().blocks == (("0,0,0",), ("0,0,1",))

    def test_blocks_t0_r1_groups_by_next_memory(self, pa_fix, pa_entities):
        bp = branching_partition(pa_fix, pa_entities, "0,0,0", 0)
        assert [(b.block_id, b.members) for b in bp.blocks] == [
            ("M@1=0", ("0,0,0", "0,0,1")),
            ("M@1=1", ("0,1,0", "0,1,1")),
        ]

    def test_blocks_t0_r2_splits_fully(self, pa_fix, pa_entities):
        bp = branching_partition(pa_fix, pa_entities, "0,0,0", 0, r=2)
        assert len(bp.blocks) == 4
        assert bp.blocks[0].signature == stp("M@1=0,M@2=0")

    def test_horizon_checks(self, pa_fix, pa_entities):
        with pytest.raises(HorizonExceedsChain):
            branching_partition(pa_fix, pa_entities, "0,0,0", 1, r=2)
        with pytest.raises(QueryInvariantViolated):
            branching_partition(pa_fix, pa_entities, "0,0,0", 1, r=0)


class TestBranchMorphs:
    def test_t1_morphs_are_deterministic(self, pa_fix, pa_entities):
        m0 = branch_morph(pa_fix, pa_entities, "0,0,0", 1, stp("E@1=0"))
        assert m0.as_dict() == {"M@2=0": Fraction(1), "M@2=1": Fraction(0)}
        m1 = branch_morph(pa_fix, pa_entities, "0,0,0", 1, stp("E@1=1"))
        assert m1.as_dict() == {"M@2=0": Fraction(0), "M@2=1": Fraction(1)}

    def test_t0_r2_morph_splits_evenly(self, pa_fix, pa_entities):
        m = branch_morph(pa_fix, pa_entities, "0,0,0", 0, stp("E@0=0"), r=2)
        assert m.as_dict() == {
            "M@1=0,M@2=0": Fraction(1, 2),
            "M@1=0,M@2=1": Fraction(1, 2),
            "M@1=1,M@2=0": Fraction(0),
            "M@1=1,M@2=1": Fraction(0),
        }

    def test_morph_is_distribution(self, pa_fix, pa_entities):
        for t, r in [(0, 1), (0, 2), (1, 1)]:
            for anchor_id in pa_entities.ids():
                for env in co_perception_environments(pa_fix, pa_entities, anchor_id, t):
                    m = branch_morph(pa_fix, pa_entities, anchor_id, t, env, r)
                    assert sum(p for _, p in m.distribution) == 1
                    assert m.denominator > 0
                    assert all(p >= 0 for _, p in m.distribution)

    def test_rejects_foreign_environment(self, pa_fix, pa_entities):
        with pytest.raises(EnvironmentNotCoPerception):
            branch_morph(pa_fix, pa_entities, "0,0,0", 1, stp("M@1=0"))

    def test_stale_environment_with_impossible_condition(self, pa_fix, pa_entities):
        # E@0=1 contradicts the anchor prefix M@0=0, M@1=0
        bad = stp("E@0=1")
        with pytest.raises(ConditionHasZeroProbability):
            branch_morph(pa_fix, pa_entities, "0,0,0", 1, bad, environments=(bad,))

    def test_stale_environment_with_no_possible_entity(self, ca2_fix):
        es = entity_set_from_document(
            ca2_fix, [{"id": "x", "assignment": {"a@0": "0", "a@1": "0"}}]
        )
        bad = stp("b@0=1")  # forces a@1=1, so x cannot happen
        with pytest.raises(EnvironmentNotCoPerception):
            branch_morph(ca2_fix, es, "x", 0, bad, environments=(bad,))

    def test_refuses_interpenetrating_set(self, ca2_fix):
        es = build_all_stps(ca2_fix)
        with pytest.raises(InterpenetratingEntitySet) as err:
            branch_morph(ca2_fix, es, "e12", 0, stp("b@0=0"))
        assert err.value.details["witness"]["first"] == "e0"


class TestMutualExclusivity:
    def test_paloop_sets_pass(self, pa_fix, pa_entities):
        for t in (0, 1):
            assert mutual_exclusivity_check(pa_fix, pa_entities, "0,0,0", t).passed

    def test_interpenetrating_pair_fails_with_witness(self, ca2_fix):
        es = entity_set_from_document(
            ca2_fix,
            [
                {"id": "x", "assignment": {"a@0": "1", "a@1": "1"}},
                {"id": "y", "assignment": {"a@0": "1", "a@1": "1", "b@1": "1"}},
            ],
        )
        result = mutual_exclusivity_check(ca2_fix, es, "x", 0)
        assert not result.passed
        witness = result.witness
        assert (witness.first_id, witness.second_id) == ("x", "y")
        assert witness.environment == stp("b@0=0")
        assert witness.probability == Fraction(1, 8)
        assert witness.payload()["probability"] == "1/8"


class TestPerceptionPartition:
    def test_t1_two_percepts(self, pa_fix, pa_entities):
        p = perception_partition(pa_fix, pa_entities, "0,0,0", 1)
        assert p.blocks == (("E@1=0",), ("E@1=1",))

    def test_t0_two_percepts(self, pa_fix, pa_entities):
        p = perception_partition(pa_fix, pa_entities, "0,0,0", 0)
        assert p.blocks == (("E@0=0",), ("E@0=1",))

    def test_lumps_equal_morphs(self, ca2_fix):
        # b@1 has no parents, so both b@0 environments induce the same morph
        es = entity_set_from_document(
            ca2_fix,
            [
                {"id": "up", "assignment": {"b@0": "0", "b@1": "1"}},
                {"id": "down", "assignment": {"b@0": "0", "b@1": "0"}},
            ],
        )
        report = perception_report(ca2_fix, es, "up", 0)
        assert report.environments == (stp("a@0=0"), stp("a@0=1"))
        assert [m.as_dict() for m in report.morphs] == [
            {"b@1=0": Fraction(1, 2), "b@1=1": Fraction(1, 2)},
        ] * 2
        assert report.partition.blocks == (("a@0=0", "a@0=1"),)

    def test_report_payload_shape(self, pa_fix, pa_entities):
        payload = perception_report(pa_fix, pa_entities, "0,0,0", 1).payload()
        assert payload["anchor"] == "0,0,0"
        assert payload["co_entities"] == ["0,0,0", "0,0,1"]
        assert payload["environments"] == ["E@1=0", "E@1=1"]
        assert payload["morphs"][0]["distribution"] == {"M@2=0": "1", "M@2=1": "0"}
        assert payload["perceptions"] == [["E@1=0"], ["E@1=1"]]

    def test_report_refuses_interpenetrating_set(self, ca2_fix):
        es = build_all_stps(ca2_fix)
        with pytest.raises(InterpenetratingEntitySet):
            perception_report(ca2_fix, es, "e12", 0)


class TestAnchorChecks:
    def test_missing_slice(self, ca2_fix):
        es = build_all_stps(ca2_fix)
        with pytest.raises(AnchorSliceMissing) as err:
            co_perception_entities(ca2_fix, es, "e0", 0)
        assert err.value.details["t"] == 1

    def test_unknown_anchor(self, pa_fix, pa_entities):
        with pytest.raises(QueryInvariantViolated):
            co_perception_entities(pa_fix, pa_entities, "nope", 0)

    def test_t_out_of_range(self, pa_fix, pa_entities):
        with pytest.raises(QueryInvariantViolated):
            co_perception_entities(pa_fix, pa_entities, "0,0,0", 2)
