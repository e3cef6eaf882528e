from stpagency.partition import Partition


def test_group_by_keeps_carrier_order():
    p = Partition.group_by(["b", "a", "c", "d"], lambda x: x in ("a", "b"))
    assert p.blocks == (("b", "a"), ("c", "d"))
    assert p.block_of("c") == ("c", "d")
    assert len(p) == 2


def test_refinement_and_equality():
    coarse = Partition(("a", "b", "c"), (("a", "b"), ("c",)))
    fine = Partition(("a", "b", "c"), (("a",), ("b",), ("c",)))
    assert fine.refines(coarse)
    assert not coarse.refines(fine)
    assert coarse.refines(coarse)
    shuffled = Partition(("c", "a", "b"), (("c",), ("b", "a")))
    assert coarse.same_blocks(shuffled)
    assert not coarse.same_blocks(fine)
    assert not fine.refines(Partition(("a", "b"), (("a", "b"),)))


def test_restricted():
    p = Partition(("a", "b", "c", "d"), (("a", "b"), ("c", "d")))
    q = p.restricted(["a", "d"])
    assert q.carrier == ("a", "d")
    assert q.blocks == (("a",), ("d",))


def test_payload():
    p = Partition(("a", "b"), (("a",), ("b",)))
    assert p.payload() == {"carrier": ["a", "b"], "blocks": [["a"], ["b"]]}
