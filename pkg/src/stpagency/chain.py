"""Layered Markov chains with exact rational mechanisms.

A chain over spatial labels J and timesteps 0..t_max is stored as a
time-unrolled Bayesian network: one variable per (label, timestep), parents
drawn only from the previous timestep, and a conditional table per variable
whose rows are tuples of ``fractions.Fraction``. Keeping every probability
rational means the equality-based constructions downstream (partitions of
environments by branch behaviour, row-identity of mechanisms) are decided
exactly rather than within a float tolerance.

The module also defines the pattern algebra used everywhere else:

* ``VarIndex``   -- a (label, timestep) pair with the canonical ordering
  (timestep first, then label as a plain string).
* ``Stp``        -- a spatiotemporal pattern: a partial value assignment on
  a subset of the chain's variables, stored in canonical order.
* ``Trajectory`` -- a full assignment together with its chain-rule
  probability.

Serialization to and from the documented JSON chain format lives here too,
so the service, the CLI and the test oracles all share one parser.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, total_ordering
from typing import Iterable, Mapping, Optional, Union

from .errors import InputError, PatternNotInTrajectory

# Characters reserved by the wire formats: "@" splits label from timestep,
# "," joins list items, "=" joins variable and value, "|{}" build block labels.
_RESERVED = set("@,|{}=")


def check_label(text: str, what: str) -> str:
    if not isinstance(text, str) or not text or text.strip() != text:
        raise InputError(f"{what} must be a non-empty string without surrounding whitespace: {text!r}")
    bad = _RESERVED.intersection(text)
    if bad:
        raise InputError(f"{what} {text!r} contains reserved character {sorted(bad)[0]!r}")
    return text


# ---------------------------------------------------------------------------
# rationals


def parse_rational(text: Union[str, int]) -> Fraction:
    """Parse ``"p/q"`` (or a bare integer string) into a Fraction."""
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise InputError(f"expected a rational string like '1/2', got {text!r}")
    parts = text.strip().split("/")
    try:
        if len(parts) == 1:
            return Fraction(int(parts[0]))
        if len(parts) == 2:
            num, den = int(parts[0]), int(parts[1])
            if den == 0:
                raise InputError(f"zero denominator in rational {text!r}")
            return Fraction(num, den)
    except ValueError:
        pass
    raise InputError(f"malformed rational literal {text!r}")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# variables and patterns


@total_ordering
@dataclass(frozen=True)
class VarIndex:
    """One node of the unrolled chain: spatial label ``j`` at timestep ``t``."""

    j: str
    t: int

    def __str__(self) -> str:
        return f"{self.j}@{self.t}"

    def __lt__(self, other: "VarIndex") -> bool:
        return (self.t, self.j) < (other.t, other.j)

    @classmethod
    def parse(cls, text: str) -> "VarIndex":
        if not isinstance(text, str) or "@" not in text:
            raise InputError(f"variable reference must look like 'j@t', got {text!r}")
        label, _, when = text.rpartition("@")
        check_label(label, "spatial label")
        try:
            t = int(when)
        except ValueError:
            raise InputError(f"non-integer timestep in variable reference {text!r}") from None
        if t < 0:
            raise InputError(f"negative timestep in variable reference {text!r}")
        return cls(label, t)


@dataclass(frozen=True)
class Stp:
    """A spatiotemporal pattern: values on a subset of variables.

    ``items`` is always sorted by the canonical variable order and free of
    duplicates, so two patterns are equal exactly when they assign the same
    values to the same variables. Construct through :meth:`of` unless the
    items are already canonical.
    """

    items: tuple[tuple[VarIndex, str], ...]

    @classmethod
    def of(cls, assignment: Union[Mapping[VarIndex, str], Iterable[tuple[VarIndex, str]]]) -> "Stp":
        pairs = assignment.items() if isinstance(assignment, Mapping) else assignment
        seen: dict[VarIndex, str] = {}
        for var, sym in pairs:
            if var in seen and seen[var] != sym:
                raise InputError(f"pattern assigns {var} both {seen[var]!r} and {sym!r}")
            seen[var] = sym
        return cls(tuple(sorted(seen.items(), key=lambda p: (p[0].t, p[0].j))))

    @cached_property
    def as_dict(self) -> dict[VarIndex, str]:
        return dict(self.items)

    @property
    def domain(self) -> tuple[VarIndex, ...]:
        return tuple(var for var, _ in self.items)

    @property
    def is_empty(self) -> bool:
        return not self.items

    def __len__(self) -> int:
        return len(self.items)

    def get(self, var: VarIndex) -> Optional[str]:
        return self.as_dict.get(var)

    @cached_property
    def times(self) -> tuple[int, ...]:
        return tuple(sorted({var.t for var, _ in self.items}))

    def vars_at(self, t: int) -> tuple[VarIndex, ...]:
        return tuple(var for var, _ in self.items if var.t == t)

    def time_slice(self, t: int) -> "Stp":
        return Stp(tuple(p for p in self.items if p[0].t == t))

    def prefix(self, t: int) -> "Stp":
        """Restriction to timesteps <= t."""
        return Stp(tuple(p for p in self.items if p[0].t <= t))

    def suffix(self, t: int) -> "Stp":
        """Restriction to timesteps > t."""
        return Stp(tuple(p for p in self.items if p[0].t > t))

    def restrict(self, variables: Iterable[VarIndex]) -> "Stp":
        wanted = set(variables)
        return Stp(tuple(p for p in self.items if p[0] in wanted))

    def merge(self, other: "Stp") -> Optional["Stp"]:
        """Union of two patterns, or None when they conflict on a variable."""
        mine = self.as_dict
        for var, sym in other.items:
            if var in mine and mine[var] != sym:
                return None
        return Stp.of(list(self.items) + list(other.items))

    def occurs_in(self, other: "Stp") -> bool:
        """True when ``other`` extends this pattern (same values on my domain)."""
        theirs = other.as_dict
        return all(theirs.get(var) == sym for var, sym in self.items)

    def pattern_string(self) -> str:
        return ",".join(f"{var}={sym}" for var, sym in self.items)

    @classmethod
    def parse_pattern_string(cls, text: str) -> "Stp":
        if not isinstance(text, str):
            raise InputError(f"expected a pattern string, got {text!r}")
        if text.strip() == "":
            return EMPTY_STP
        pairs = []
        for chunk in text.split(","):
            var_text, eq, sym = chunk.partition("=")
            if not eq:
                raise InputError(f"pattern item {chunk!r} is missing '='")
            pairs.append((VarIndex.parse(var_text.strip()), check_label(sym.strip(), "symbol")))
        return cls.of(pairs)


EMPTY_STP = Stp(())


@dataclass(frozen=True)
class Trajectory:
    """A full assignment on every variable of a chain, with its probability."""

    stp: Stp
    probability: Fraction


# ---------------------------------------------------------------------------
# the chain container


class MarkovChain:
    """Container for a layered chain; use :func:`validate_chain` to check it.

    The constructor normalizes shapes (sorted parents, Fraction entries) but
    deliberately accepts semantically broken chains so that validation can
    report every violation instead of failing on the first.
    """

    def __init__(
        self,
        spatial: Iterable[str],
        t_max: int,
        alphabets: Mapping[VarIndex, Iterable[str]],
        parents: Mapping[VarIndex, Iterable[VarIndex]],
        mechanisms: Mapping[VarIndex, Mapping[tuple[str, ...], Iterable[Fraction]]],
    ):
        self.spatial = tuple(spatial)
        self.t_max = int(t_max)
        self.variables: tuple[VarIndex, ...] = tuple(
            VarIndex(j, t) for t in range(self.t_max + 1) for j in sorted(self.spatial)
        )
        self._var_pos = {var: i for i, var in enumerate(self.variables)}
        self.alphabets = {var: tuple(alphabets[var]) for var in self.variables}
        self.parents = {
            var: tuple(sorted(parents.get(var, ()))) for var in self.variables
        }
        self.mechanisms = {
            var: {
                tuple(key): tuple(Fraction(x) for x in row)
                for key, row in mechanisms.get(var, {}).items()
            }
            for var in self.variables
        }
        # scratch space for memoized support/validation results; keyed by name
        self.caches: dict = {}

    # -- lookups ------------------------------------------------------------

    def has_var(self, var: VarIndex) -> bool:
        return var in self._var_pos

    def var_position(self, var: VarIndex) -> int:
        try:
            return self._var_pos[var]
        except KeyError:
            raise InputError(f"unknown variable {var}") from None

    def alphabet(self, var: VarIndex) -> tuple[str, ...]:
        return self.alphabets[var]

    def symbol_index(self, var: VarIndex, sym: str) -> int:
        try:
            return self.alphabets[var].index(sym)
        except (KeyError, ValueError):
            raise InputError(f"symbol {sym!r} is not in the alphabet of {var}") from None

    def slice_vars(self, t: int) -> tuple[VarIndex, ...]:
        return tuple(VarIndex(j, t) for j in sorted(self.spatial))

    def mechanism_row(self, var: VarIndex, parent_values: Mapping[VarIndex, str]) -> tuple[Fraction, ...]:
        """Row of the conditional table of ``var`` under the given parent values."""
        key = tuple(parent_values[p] for p in self.parents[var])
        try:
            return self.mechanisms[var][key]
        except KeyError:
            raise InputError(f"no mechanism row for {var} under parents {key!r}") from None

    # -- serialization ------------------------------------------------------

    def _row_key_order(self, var: VarIndex) -> list[tuple[str, ...]]:
        parent_alphabets = [self.alphabets.get(p, ()) for p in self.parents[var]]
        if any(not a for a in parent_alphabets):
            return []  # unknown parent: no canonical ordering exists
        return [tuple(k) for k in itertools.product(*parent_alphabets)]

    def to_document(self) -> dict:
        """Canonical JSON-ready form; deterministic, so emit/parse/emit is stable."""
        alphabet_values = {self.alphabets[v] for v in self.variables}
        if len(alphabet_values) == 1:
            alphabets: dict = {"default": list(next(iter(alphabet_values)))}
        else:
            alphabets = {str(v): list(self.alphabets[v]) for v in self.variables}
        parents = {
            str(v): [str(p) for p in self.parents[v]]
            for v in self.variables
            if self.parents[v]
        }
        mechanisms = {}
        for var in self.variables:
            rows = self.mechanisms[var]
            ordered = [k for k in self._row_key_order(var) if k in rows]
            extras = sorted(k for k in rows if k not in set(ordered))
            table = {}
            for key in ordered + extras:
                table[",".join(key)] = [format_rational(x) for x in rows[key]]
            mechanisms[str(var)] = table
        return {
            "spatial": list(self.spatial),
            "t_max": self.t_max,
            "alphabets": alphabets,
            "parents": parents,
            "mechanisms": mechanisms,
        }

    @classmethod
    def from_document(cls, doc: object) -> "MarkovChain":
        if not isinstance(doc, dict):
            raise InputError("chain document must be a JSON object")
        allowed = {"spatial", "t_max", "alphabets", "parents", "mechanisms"}
        unknown = set(doc) - allowed
        if unknown:
            raise InputError(f"unknown chain field {sorted(unknown)[0]!r}")
        for field in ("spatial", "t_max", "alphabets", "mechanisms"):
            if field not in doc:
                raise InputError(f"chain document is missing field {field!r}")

        spatial = doc["spatial"]
        if not isinstance(spatial, list) or not spatial:
            raise InputError("field 'spatial' must be a non-empty list of labels")
        labels = [check_label(j, "spatial label") for j in spatial]
        if len(set(labels)) != len(labels):
            raise InputError("field 'spatial' contains a duplicate label")

        t_max = doc["t_max"]
        if not isinstance(t_max, int) or isinstance(t_max, bool) or t_max < 0:
            raise InputError("field 't_max' must be a non-negative integer")

        variables = [VarIndex(j, t) for t in range(t_max + 1) for j in sorted(labels)]
        var_set = set(variables)

        raw_alpha = doc["alphabets"]
        if not isinstance(raw_alpha, dict):
            raise InputError("field 'alphabets' must be an object")
        default = None
        explicit: dict[VarIndex, tuple[str, ...]] = {}
        for key, syms in raw_alpha.items():
            if not isinstance(syms, list) or not syms:
                raise InputError(f"alphabets.{key} must be a non-empty list of symbols")
            symbols = tuple(check_label(s, "symbol") for s in syms)
            if len(set(symbols)) != len(symbols):
                raise InputError(f"alphabets.{key} contains a duplicate symbol")
            if key == "default":
                default = symbols
            else:
                var = VarIndex.parse(key)
                if var not in var_set:
                    raise InputError(f"alphabets.{key} refers to a variable outside the chain")
                explicit[var] = symbols
        alphabets = {}
        for var in variables:
            if var in explicit:
                alphabets[var] = explicit[var]
            elif default is not None:
                alphabets[var] = default
            else:
                raise InputError(f"no alphabet given for {var} and no 'default' entry")

        raw_parents = doc.get("parents", {})
        if not isinstance(raw_parents, dict):
            raise InputError("field 'parents' must be an object")
        parents: dict[VarIndex, list[VarIndex]] = {}
        for key, plist in raw_parents.items():
            var = VarIndex.parse(key)
            if var not in var_set:
                raise InputError(f"parents.{key} refers to a variable outside the chain")
            if not isinstance(plist, list):
                raise InputError(f"parents.{key} must be a list of variable references")
            entries = [VarIndex.parse(p) for p in plist]
            if len(set(entries)) != len(entries):
                raise InputError(f"parents.{key} lists a parent twice")
            parents[var] = entries

        raw_mech = doc["mechanisms"]
        if not isinstance(raw_mech, dict):
            raise InputError("field 'mechanisms' must be an object")
        mechanisms: dict[VarIndex, dict[tuple[str, ...], list[Fraction]]] = {}
        for key, table in raw_mech.items():
            var = VarIndex.parse(key)
            if var not in var_set:
                raise InputError(f"mechanisms.{key} refers to a variable outside the chain")
            if not isinstance(table, dict):
                raise InputError(f"mechanisms.{key} must be an object of rows")
            rows = {}
            for row_key, row in table.items():
                if not isinstance(row, list):
                    raise InputError(f"mechanisms.{key}[{row_key!r}] must be a list of rationals")
                parsed_key = () if row_key == "" else tuple(row_key.split(","))
                if parsed_key in rows:
                    raise InputError(f"mechanisms.{key} repeats row key {row_key!r}")
                try:
                    rows[parsed_key] = [parse_rational(x) for x in row]
                except InputError as exc:
                    raise InputError(f"mechanisms.{key}[{row_key!r}]: {exc}") from None
            mechanisms[var] = rows

        return cls(labels, t_max, alphabets, parents, mechanisms)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    code: str
    var: Optional[VarIndex]
    message: str

    def payload(self) -> dict:
        return {"code": self.code, "var": None if self.var is None else str(self.var), "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def payload(self) -> dict:
        return {"valid": self.ok, "violations": [v.payload() for v in self.violations]}


def validate_chain(chain: MarkovChain) -> ValidationReport:
    """Check layering, row completeness, entry ranges and normalization.

    Returns every violation found (in canonical variable order) instead of
    stopping at the first; the report is cached on the chain.
    """
    cached = chain.caches.get("validation")
    if cached is not None:
        return cached

    found: list[Violation] = []

    def flag(code: str, var: Optional[VarIndex], message: str) -> None:
        found.append(Violation(code, var, message))

    if len(set(chain.spatial)) != len(chain.spatial):
        flag("labels", None, "duplicate spatial label")
    for j in chain.spatial:
        try:
            check_label(j, "spatial label")
        except InputError as exc:
            flag("labels", None, str(exc))

    for var in chain.variables:
        alphabet = chain.alphabets[var]
        if not alphabet:
            flag("alphabet", var, "empty alphabet")
            continue
        if len(set(alphabet)) != len(alphabet):
            flag("alphabet", var, "duplicate symbol in alphabet")
        for sym in alphabet:
            try:
                check_label(sym, "symbol")
            except InputError as exc:
                flag("alphabet", var, str(exc))

        parent_ok = True
        for p in chain.parents[var]:
            if not chain.has_var(p):
                flag("parent-unknown", var, f"parent {p} is not a variable of the chain")
                parent_ok = False
            elif p.t != var.t - 1:
                flag("parent-layer", var, f"parent {p} is not in the previous timestep")
                parent_ok = False
        if var.t == 0 and chain.parents[var]:
            flag("parent-layer", var, "timestep-0 variables must have no parents")
            parent_ok = False

        rows = chain.mechanisms[var]
        if parent_ok:
            expected = set(chain._row_key_order(var))
            missing = expected - set(rows)
            extra = set(rows) - expected
            for key in sorted(missing):
                flag("row-keys", var, f"missing mechanism row for parent values {key!r}")
            for key in sorted(extra):
                flag("row-keys", var, f"mechanism row {key!r} matches no parent values")
        for key in sorted(rows):
            row = rows[key]
            if len(row) != len(alphabet):
                flag("row-shape", var, f"row {key!r} has {len(row)} entries for {len(alphabet)} symbols")
                continue
            if any(x < 0 or x > 1 for x in row):
                flag("entry-range", var, f"row {key!r} has an entry outside [0, 1]")
            if sum(row) != 1:
                flag("normalization", var, f"row {key!r} sums to {format_rational(sum(row))}, not 1")

    report = ValidationReport(tuple(found))
    chain.caches["validation"] = report
    return report


# ---------------------------------------------------------------------------
# environments


def environment(trajectory: Trajectory, pattern: Stp, t: int) -> Stp:
    """Values the trajectory gives, at timestep ``t``, to every variable the
    pattern does not occupy there.

    Raises :class:`PatternNotInTrajectory` when the pattern does not occur in
    the trajectory, since then "its" environment is not defined.
    """
    full = trajectory.stp
    if not pattern.occurs_in(full):
        raise PatternNotInTrajectory(
            "pattern does not occur in the trajectory",
            pattern=pattern.pattern_string(),
        )
    occupied = set(pattern.vars_at(t))
    return Stp(tuple(p for p in full.items if p[0].t == t and p[0] not in occupied))
