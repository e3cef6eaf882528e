"""Perception-action loops and their derived structure.

A PA-loop is a two-process chain with labels ``M`` (memory) and ``E``
(environment) in which, at every timestep after the first, both processes
have exactly the previous ``M`` and ``E`` as parents. From its mechanisms
two partitions are read off per transition:

* the sensor partition of E_t's alphabet: two environment values fall in
  one block when they induce identical M_{t+1} rows for every memory value;
* the action partition of M_t's alphabet: the mirror image for E_{t+1}.

``extend_paloop`` rewires the loop through explicit sensor/actuator nodes
``S`` and ``A`` on interleaved half-steps and ``verify_invariant_extension``
checks, exactly, that marginalizing the extension back onto the original
variables reproduces the original distribution.

The remaining verifiers connect the loop-level readings to the generic
entity machinery, always by running both routes and comparing:

* ``verify_action_entropy_equivalence``: the memory-path entity set admits a
  co-action at t if and only if H(M_{t+1} | E_t) > 0 (positivity decided on
  exact rationals, not on the float entropy);
* ``verify_perception_specialization``: the generic perception partition of
  an anchor's environments equals the partition of those environments by
  the M_{t+1} mechanism rows at the anchor's current memory value. The full
  sensor partition compares rows at every memory value, so restricted to
  the anchor's environments it can only refine the perception partition;
  the result records that refinement separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .chain import MarkovChain, Stp, VarIndex, format_rational
from .entities import EntitySet, build_paloop_entity_set
from .errors import HorizonExceedsChain, NotAPaLoop
from .inference import require_valid_chain, stp_probability, support_index
from .partition import Partition
from .perceptions import PerceptionReport, perception_report


@dataclass(frozen=True)
class PaLoop:
    chain: MarkovChain

    @classmethod
    def from_chain(cls, chain: MarkovChain) -> "PaLoop":
        require_valid_chain(chain)
        if set(chain.spatial) != {"M", "E"}:
            raise NotAPaLoop(
                f"expected exactly the spatial labels 'M' and 'E', got {sorted(chain.spatial)}"
            )
        for t in range(1, chain.t_max + 1):
            expected = (VarIndex("E", t - 1), VarIndex("M", t - 1))
            for j in ("M", "E"):
                if chain.parents[VarIndex(j, t)] != expected:
                    raise NotAPaLoop(
                        f"{j}@{t} must have exactly M@{t - 1} and E@{t - 1} as parents"
                    )
        return cls(chain)

    def m_var(self, t: int) -> VarIndex:
        return VarIndex("M", t)

    def e_var(self, t: int) -> VarIndex:
        return VarIndex("E", t)

    def m_alphabet(self, t: int) -> tuple[str, ...]:
        return self.chain.alphabets[self.m_var(t)]

    def e_alphabet(self, t: int) -> tuple[str, ...]:
        return self.chain.alphabets[self.e_var(t)]

    def next_memory_row(self, t: int, m: str, e: str) -> tuple[Fraction, ...]:
        """Distribution of M_{t+1} given M_t = m, E_t = e."""
        return self.chain.mechanism_row(
            self.m_var(t + 1), {self.m_var(t): m, self.e_var(t): e}
        )

    def next_env_row(self, t: int, m: str, e: str) -> tuple[Fraction, ...]:
        """Distribution of E_{t+1} given M_t = m, E_t = e."""
        return self.chain.mechanism_row(
            self.e_var(t + 1), {self.m_var(t): m, self.e_var(t): e}
        )

    def entity_set(self) -> EntitySet:
        cached = self.chain.caches.get("paloop_entities")
        if cached is None:
            cached = self.chain.caches["paloop_entities"] = build_paloop_entity_set(self)
        return cached


def _check_transition(pa: PaLoop, t: int) -> None:
    if t < 0 or t + 1 > pa.chain.t_max:
        raise HorizonExceedsChain(
            f"transition t={t} -> t+1 exceeds the chain's final timestep {pa.chain.t_max}",
            t=t,
            t_max=pa.chain.t_max,
        )


def extract_sensor_partition(pa: PaLoop, t: int) -> Partition:
    """Environment values with identical M_{t+1} rows for every memory value."""
    _check_transition(pa, t)
    m_alpha = pa.m_alphabet(t)
    return Partition.group_by(
        pa.e_alphabet(t),
        lambda e: tuple(pa.next_memory_row(t, m, e) for m in m_alpha),
    )


def extract_action_partition(pa: PaLoop, t: int) -> Partition:
    """Memory values with identical E_{t+1} rows for every environment value."""
    _check_transition(pa, t)
    e_alpha = pa.e_alphabet(t)
    return Partition.group_by(
        pa.m_alphabet(t),
        lambda m: tuple(pa.next_env_row(t, m, e) for e in e_alpha),
    )


# ---------------------------------------------------------------------------
# extension


def _block_labels(partition: Partition) -> tuple[str, ...]:
    labels = tuple("+".join(block) for block in partition.blocks)
    if len(set(labels)) != len(labels):
        # member symbols contained '+' themselves; fall back to positional names
        labels = tuple(f"b{i}" for i in range(len(partition.blocks)))
    return labels


def _block_label_of(partition: Partition, labels: tuple[str, ...], element: str) -> str:
    for label, block in zip(labels, partition.blocks):
        if element in block:
            return label
    raise KeyError(element)


def _point_row(alphabet: tuple[str, ...], value: str) -> tuple[Fraction, ...]:
    return tuple(Fraction(1) if sym == value else Fraction(0) for sym in alphabet)


@dataclass(frozen=True)
class ExtendedPaLoop:
    """The re-timed loop: original timestep t sits at extended timestep 2t.

    Odd timesteps carry the sensor reading ``S`` (a deterministic function
    of the current environment), the actuator setting ``A`` (a deterministic
    function of the current memory) and frozen copies of ``M`` and ``E``;
    the following even timestep updates memory from (M, S) and environment
    from (E, A) using the original mechanisms, which is well defined because
    rows agree within a block by construction.
    """

    chain: MarkovChain
    source: PaLoop
    sensor_partitions: dict[int, Partition]
    action_partitions: dict[int, Partition]

    def extended_var(self, var: VarIndex) -> VarIndex:
        return VarIndex(var.j, 2 * var.t)


def extend_paloop(pa: PaLoop) -> ExtendedPaLoop:
    chain = pa.chain
    t_max = chain.t_max
    sensors = {t: extract_sensor_partition(pa, t) for t in range(t_max)}
    actions = {t: extract_action_partition(pa, t) for t in range(t_max)}
    sensor_labels = {t: _block_labels(sensors[t]) for t in range(t_max)}
    action_labels = {t: _block_labels(actions[t]) for t in range(t_max)}

    alphabets: dict[VarIndex, tuple[str, ...]] = {}
    parents: dict[VarIndex, list[VarIndex]] = {}
    mechanisms: dict[VarIndex, dict[tuple[str, ...], tuple[Fraction, ...]]] = {}

    def put(var, alphabet, pars, rows):
        alphabets[var] = tuple(alphabet)
        parents[var] = pars
        mechanisms[var] = rows

    dummy = ("*",)
    for t in range(t_max + 1):
        even = 2 * t
        m_alpha = pa.m_alphabet(t)
        e_alpha = pa.e_alphabet(t)
        if t == 0:
            put(VarIndex("M", 0), m_alpha, [], dict(chain.mechanisms[pa.m_var(0)]))
            put(VarIndex("E", 0), e_alpha, [], dict(chain.mechanisms[pa.e_var(0)]))
        else:
            prev_m = pa.m_alphabet(t - 1)
            prev_e = pa.e_alphabet(t - 1)
            # memory reads the sensor block; any member environment gives the
            # same row, so the first member stands in for the block
            rows_m = {}
            for m in prev_m:
                for label, block in zip(sensor_labels[t - 1], sensors[t - 1].blocks):
                    rows_m[(m, label)] = pa.next_memory_row(t - 1, m, block[0])
            put(
                VarIndex("M", even),
                m_alpha,
                [VarIndex("M", even - 1), VarIndex("S", even - 1)],
                rows_m,
            )
            rows_e = {}
            for label, block in zip(action_labels[t - 1], actions[t - 1].blocks):
                for e in prev_e:
                    rows_e[(label, e)] = pa.next_env_row(t - 1, block[0], e)
            put(
                VarIndex("E", even),
                e_alpha,
                [VarIndex("A", even - 1), VarIndex("E", even - 1)],
                rows_e,
            )
        # S and A are inert at even timesteps
        put(VarIndex("S", even), dummy, [], {(): (Fraction(1),)})
        put(VarIndex("A", even), dummy, [], {(): (Fraction(1),)})

        if t < t_max:
            odd = even + 1
            put(
                VarIndex("M", odd),
                m_alpha,
                [VarIndex("M", even)],
                {(m,): _point_row(m_alpha, m) for m in m_alpha},
            )
            put(
                VarIndex("E", odd),
                e_alpha,
                [VarIndex("E", even)],
                {(e,): _point_row(e_alpha, e) for e in e_alpha},
            )
            s_alpha = sensor_labels[t]
            put(
                VarIndex("S", odd),
                s_alpha,
                [VarIndex("E", even)],
                {
                    (e,): _point_row(s_alpha, _block_label_of(sensors[t], s_alpha, e))
                    for e in e_alpha
                },
            )
            a_alpha = action_labels[t]
            put(
                VarIndex("A", odd),
                a_alpha,
                [VarIndex("M", even)],
                {
                    (m,): _point_row(a_alpha, _block_label_of(actions[t], a_alpha, m))
                    for m in m_alpha
                },
            )

    extended = MarkovChain(["M", "A", "S", "E"], 2 * t_max, alphabets, parents, mechanisms)
    return ExtendedPaLoop(extended, pa, sensors, actions)


@dataclass(frozen=True)
class ExtensionCheck:
    equal: bool
    max_discrepancy: Fraction
    assignments_checked: int

    def payload(self) -> dict:
        return {
            "equal": self.equal,
            "max_discrepancy": format_rational(self.max_discrepancy),
            "assignments_checked": self.assignments_checked,
        }


def verify_invariant_extension(pa: PaLoop, ext: ExtendedPaLoop) -> ExtensionCheck:
    """Marginalize the extension onto the original variables and compare."""
    original_vars = pa.chain.variables
    original: dict[tuple[str, ...], Fraction] = {}
    for trajectory in support_index(pa.chain).trajectories:
        key = tuple(trajectory.stp.get(v) for v in original_vars)
        original[key] = original.get(key, Fraction(0)) + trajectory.probability

    extended_vars = tuple(ext.extended_var(v) for v in original_vars)
    marginal: dict[tuple[str, ...], Fraction] = {}
    for trajectory in support_index(ext.chain).trajectories:
        key = tuple(trajectory.stp.get(v) for v in extended_vars)
        marginal[key] = marginal.get(key, Fraction(0)) + trajectory.probability

    worst = Fraction(0)
    for key in original.keys() | marginal.keys():
        gap = abs(original.get(key, Fraction(0)) - marginal.get(key, Fraction(0)))
        if gap > worst:
            worst = gap
    return ExtensionCheck(worst == 0, worst, len(original.keys() | marginal.keys()))


# ---------------------------------------------------------------------------
# entropy and the action equivalence


@dataclass(frozen=True)
class EntropyResult:
    t: int
    bits: float
    positive: bool  # decided on exact rationals, not on the float value

    def payload(self) -> dict:
        return {"t": self.t, "bits": self.bits, "positive": self.positive}


def conditional_entropy_next_memory(pa: PaLoop, t: int) -> EntropyResult:
    """H(M_{t+1} | E_t) in bits, with an exact positivity flag."""
    _check_transition(pa, t)
    chain = pa.chain
    bits = 0.0
    positive = False
    for e in pa.e_alphabet(t):
        p_e = stp_probability(chain, Stp(((pa.e_var(t), e),)))
        if p_e == 0:
            continue
        joints = []
        for m_next in pa.m_alphabet(t + 1):
            joint = stp_probability(
                chain, Stp.of({pa.e_var(t): e, pa.m_var(t + 1): m_next})
            )
            if joint > 0:
                joints.append(joint)
        if len(joints) > 1:
            positive = True
        for joint in joints:
            bits += float(joint) * math.log2(float(p_e) / float(joint))
    return EntropyResult(t, bits, positive)


@dataclass(frozen=True)
class EquivalenceRow:
    t: int
    action_exists: bool
    entropy_positive: bool
    entropy_bits: float

    @property
    def equivalent(self) -> bool:
        return self.action_exists == self.entropy_positive

    def payload(self) -> dict:
        return {
            "t": self.t,
            "action_exists": self.action_exists,
            "entropy_positive": self.entropy_positive,
            "entropy_bits": self.entropy_bits,
            "equivalent": self.equivalent,
        }


def memory_path_id(pa: PaLoop, full: Stp) -> str:
    return ",".join(full.get(pa.m_var(t)) for t in range(pa.chain.t_max + 1))


def verify_action_entropy_equivalence(pa: PaLoop, t: int) -> EquivalenceRow:
    """Compare co-action existence against entropy positivity at timestep t.

    Existence is decided by the generic co-action machinery over the
    memory-path entity set. For that entity set the answer for a query
    trajectory depends only on its environment value at t and its memory
    value at t+1: occupation is identical for all members, and a different
    memory path never occurs in the query trajectory, so dropping the query
    trajectory from a candidate's occurrence set cannot change emptiness.
    One query per (e_t, m_{t+1}) group therefore covers the support.
    """
    from .actions import ActionQuery, any_co_action

    _check_transition(pa, t)
    chain = pa.chain
    es = pa.entity_set()
    groups: dict[tuple[str, str], object] = {}
    for trajectory in support_index(chain).trajectories:
        key = (trajectory.stp.get(pa.e_var(t)), trajectory.stp.get(pa.m_var(t + 1)))
        groups.setdefault(key, trajectory)
    action_exists = any(
        any_co_action(
            chain, es, ActionQuery(memory_path_id(pa, trajectory.stp), trajectory, t)
        )
        for trajectory in groups.values()
    )
    entropy = conditional_entropy_next_memory(pa, t)
    return EquivalenceRow(t, action_exists, entropy.positive, entropy.bits)


# ---------------------------------------------------------------------------
# perception specialization


@dataclass(frozen=True)
class SpecializationResult:
    anchor_id: str
    t: int
    anchor_memory: str
    matches: bool  # generic perception partition == anchor-row partition
    morphs_match_mechanism: bool
    sensor_refines: bool  # restricted full sensor partition refines perceptions
    perception: Partition  # over environment symbols
    anchor_row_partition: Partition
    sensor: Partition
    sensor_restricted: Partition
    report: PerceptionReport

    def payload(self) -> dict:
        return {
            "anchor": self.anchor_id,
            "t": self.t,
            "anchor_memory": self.anchor_memory,
            "matches": self.matches,
            "morphs_match_mechanism": self.morphs_match_mechanism,
            "sensor_refines": self.sensor_refines,
            "perception": self.perception.payload(),
            "anchor_row_partition": self.anchor_row_partition.payload(),
            "sensor": self.sensor.payload(),
            "sensor_restricted": self.sensor_restricted.payload(),
            "pipeline": self.report.payload(),
        }


def verify_perception_specialization(pa: PaLoop, anchor_id: str, t: int) -> SpecializationResult:
    """Both routes to the anchor's perception partition, compared exactly.

    Route one runs the generic pipeline over the memory-path entity set and
    reads off which environments get equal branch-morphs. Route two only
    looks at the mechanism table: it groups the same environments by the
    M_{t+1} row at the anchor's current memory value. The result also checks
    the stronger per-environment fact that each morph equals that row.
    """
    chain = pa.chain
    es = pa.entity_set()
    report = perception_report(chain, es, anchor_id, t, r=1)
    anchor = es.get(anchor_id)
    anchor_memory = anchor.get(pa.m_var(t))

    env_symbol = {
        env.pattern_string(): env.get(pa.e_var(t)) for env in report.environments
    }
    env_symbols = tuple(env_symbol[e.pattern_string()] for e in report.environments)
    perception = Partition(
        env_symbols,
        tuple(tuple(env_symbol[e] for e in block) for block in report.partition.blocks),
    )

    anchor_row_partition = Partition.group_by(
        env_symbols, lambda e: pa.next_memory_row(t, anchor_memory, e)
    )

    # each branching block is one M_{t+1} value; its morph mass should be
    # exactly the mechanism entry for that value
    next_alpha = pa.m_alphabet(t + 1)
    block_value = {
        block.block_id: block.signature.get(pa.m_var(t + 1))
        for block in report.branching.blocks
    }
    morphs_ok = True
    for env, morph in zip(report.environments, report.morphs):
        row = pa.next_memory_row(t, anchor_memory, env.get(pa.e_var(t)))
        for block_id, mass in morph.distribution:
            if mass != row[next_alpha.index(block_value[block_id])]:
                morphs_ok = False

    sensor = extract_sensor_partition(pa, t)
    sensor_restricted = sensor.restricted(env_symbols)
    return SpecializationResult(
        anchor_id=anchor_id,
        t=t,
        anchor_memory=anchor_memory,
        matches=perception.same_blocks(anchor_row_partition),
        morphs_match_mechanism=morphs_ok,
        sensor_refines=sensor_restricted.refines(perception),
        perception=perception,
        anchor_row_partition=anchor_row_partition,
        sensor=sensor,
        sensor_restricted=sensor_restricted,
        report=report,
    )


def positive_prefix_anchors(pa: PaLoop, t: int) -> tuple[str, ...]:
    """Anchor ids whose memory path up to t has positive probability."""
    es = pa.entity_set()
    out = []
    for entity_id, pattern in es:
        if stp_probability(pa.chain, pattern.prefix(t)) > 0:
            out.append(entity_id)
    return tuple(out)


def specialization_survey(pa: PaLoop) -> tuple[SpecializationResult, ...]:
    """Verify every positive-prefix anchor at every transition timestep."""
    out = []
    for t in range(pa.chain.t_max):
        for anchor_id in positive_prefix_anchors(pa, t):
            out.append(verify_perception_specialization(pa, anchor_id, t))
    return tuple(out)
