"""Discrete Bayesian network / influence diagram model, validation and JSON format.

Conventions used throughout the package:

* Values of a variable with arity ``n`` are the integers ``0 .. n-1``.
* A parent configuration is encoded as a single mixed-radix integer with the
  FIRST-listed parent as the most significant digit (see
  :func:`parent_config_index`).
* CPTs are row-stochastic tables: one row per parent configuration, one
  column per child value.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Iterator, Mapping

from .errors import ModelFormatError, ModelValidationError

ROW_SUM_TOL = 1e-9

# An assignment maps variable names to 0-based value indices.
Assignment = Mapping[str, int]


@dataclass(frozen=True)
class Variable:
    name: str
    arity: int
    parents: tuple[str, ...] = ()


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table: rows[j][k] = P(child=k | parents=j)."""

    rows: tuple[tuple[float, ...], ...]

    @classmethod
    def from_rows(cls, rows) -> "Cpt":
        return cls(tuple(tuple(float(p) for p in row) for row in rows))


@dataclass(frozen=True)
class Network:
    variables: tuple[Variable, ...]
    cpts: dict[str, Cpt]

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)


@dataclass(frozen=True)
class Decision:
    name: str
    arity: int
    parents: tuple[str, ...] = ()  # informational parents, observed before acting


@dataclass(frozen=True)
class Utility:
    parents: tuple[str, ...]
    table: tuple[float, ...]  # one strictly positive value per parent configuration


@dataclass(frozen=True)
class InfluenceDiagram:
    network: Network
    decision: Decision
    utility: Utility


Model = Network | InfluenceDiagram


def parent_config_index(assignment: Assignment, parents: tuple[str, ...],
                        arities: tuple[int, ...]) -> int:
    """Encode the parents' values as one mixed-radix integer.

    The first-listed parent is the most significant digit, so e.g. parents
    (B arity 2, C arity 3) with B=1, C=2 give index 1*3 + 2 = 5.
    """
    index = 0
    for name, arity in zip(parents, arities):
        if name not in assignment:
            raise KeyError(f"missing assignment for parent '{name}'")
        index = index * arity + assignment[name]
    return index


def parent_config_assignment(index: int, parents: tuple[str, ...],
                             arities: tuple[int, ...]) -> dict[str, int]:
    """Inverse of :func:`parent_config_index`."""
    values: dict[str, int] = {}
    for name, arity in zip(reversed(parents), reversed(arities)):
        values[name] = index % arity
        index //= arity
    return values


def _topo_names(names: tuple[str, ...], parents_of: Mapping[str, tuple[str, ...]]) -> tuple[str, ...]:
    """Kahn's algorithm with declaration order breaking ties deterministically."""
    placed: list[str] = []
    done: set[str] = set()
    remaining = list(names)
    while remaining:
        for name in remaining:
            if all(p in done for p in parents_of[name]):
                placed.append(name)
                done.add(name)
                remaining.remove(name)
                break
        else:
            raise ModelValidationError(
                f"cycle in parent relation involving '{remaining[0]}'")
    return tuple(placed)


def topological_order(net: Network) -> tuple[str, ...]:
    """Variable names ordered so every parent precedes its children."""
    return _topo_names(net.names, {v.name: v.parents for v in net.variables})


def validate(model: Model) -> list[str]:
    """Check all structural invariants; returns a list of violations (empty if valid)."""
    net = model.network if isinstance(model, InfluenceDiagram) else model
    violations: list[str] = []

    names = [v.name for v in net.variables]
    if len(set(names)) != len(names):
        violations.append("duplicate variable names")
    arity_of: dict[str, int] = {v.name: v.arity for v in net.variables}
    if isinstance(model, InfluenceDiagram):
        dec = model.decision
        if dec.name in arity_of:
            violations.append(f"decision '{dec.name}' clashes with a chance variable")
        if dec.arity < 1:
            violations.append(f"decision '{dec.name}': arity must be >= 1")
        arity_of[dec.name] = dec.arity
        for p in dec.parents:
            if p not in arity_of or p == dec.name:
                violations.append(f"decision '{dec.name}': unknown parent '{p}'")

    for var in net.variables:
        if var.arity < 1:
            violations.append(f"variable '{var.name}': arity must be >= 1")
        if len(set(var.parents)) != len(var.parents):
            violations.append(f"variable '{var.name}': duplicate parents")
        if var.name in var.parents:
            violations.append(f"variable '{var.name}': self-reference in parents")
        for p in var.parents:
            if p not in arity_of:
                violations.append(f"variable '{var.name}': unknown parent '{p}'")

    # CPT shapes and row sums (only where parents resolved cleanly)
    for var in net.variables:
        cpt = net.cpts.get(var.name)
        if cpt is None:
            violations.append(f"variable '{var.name}': missing CPT")
            continue
        if any(p not in arity_of for p in var.parents):
            continue
        n_rows = math.prod(arity_of[p] for p in var.parents)
        if len(cpt.rows) != n_rows:
            violations.append(
                f"variable '{var.name}': CPT has {len(cpt.rows)} rows, expected {n_rows}")
            continue
        for j, row in enumerate(cpt.rows):
            if len(row) != var.arity:
                violations.append(
                    f"variable '{var.name}': CPT row {j} has {len(row)} entries, "
                    f"expected {var.arity}")
                continue
            if any(p < 0.0 or p > 1.0 for p in row):
                violations.append(f"variable '{var.name}': CPT row {j} has entries outside [0,1]")
            if abs(math.fsum(row) - 1.0) > ROW_SUM_TOL:
                violations.append(
                    f"variable '{var.name}': CPT row {j} sums to {math.fsum(row)!r}, not 1")

    # acyclicity (decision participates in the DAG of an influence diagram)
    parents_of = {v.name: v.parents for v in net.variables}
    order_names = list(net.names)
    if isinstance(model, InfluenceDiagram):
        parents_of[model.decision.name] = model.decision.parents
        order_names.append(model.decision.name)
    if all(p in parents_of for ps in parents_of.values() for p in ps):
        try:
            _topo_names(tuple(order_names), parents_of)
        except ModelValidationError as exc:
            violations.append(str(exc))

    if isinstance(model, InfluenceDiagram):
        util = model.utility
        for p in util.parents:
            if p not in arity_of:
                violations.append(f"utility: unknown parent '{p}'")
        if all(p in arity_of for p in util.parents):
            n_rows = math.prod(arity_of[p] for p in util.parents)
            if len(util.table) != n_rows:
                violations.append(
                    f"utility: table has {len(util.table)} entries, expected {n_rows}")
        for j, u in enumerate(util.table):
            if not u > 0.0:
                violations.append(f"utility: entry {j} is {u!r}, must be strictly positive")

    return violations


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

_TOP_KEYS = {"variables", "cpts", "decision", "utility"}
_VAR_KEYS = {"name", "arity", "parents"}
_DEC_KEYS = {"name", "arity", "parents"}
_UTIL_KEYS = {"parents", "table"}


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ModelFormatError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ModelFormatError(f"{where}: missing field(s) {sorted(missing)}")


def model_from_dict(obj: Any, check: bool = True) -> Model:
    """Build a model from parsed JSON; raises on format (and, with check=True,
    validation) errors."""
    if not isinstance(obj, dict):
        raise ModelFormatError("top level must be a JSON object")
    _require_keys(obj, _TOP_KEYS, {"variables", "cpts"}, "model")
    if ("decision" in obj) != ("utility" in obj):
        raise ModelFormatError("'decision' and 'utility' must be given together")

    if not isinstance(obj["variables"], list):
        raise ModelFormatError("'variables' must be an array")
    variables = []
    for i, v in enumerate(obj["variables"]):
        where = f"variables[{i}]"
        if not isinstance(v, dict):
            raise ModelFormatError(f"{where}: must be an object")
        _require_keys(v, _VAR_KEYS, _VAR_KEYS, where)
        if not isinstance(v["name"], str) or not isinstance(v["arity"], int):
            raise ModelFormatError(f"{where}: 'name' must be a string, 'arity' an integer")
        if not isinstance(v["parents"], list) or not all(isinstance(p, str) for p in v["parents"]):
            raise ModelFormatError(f"{where}: 'parents' must be an array of names")
        variables.append(Variable(v["name"], v["arity"], tuple(v["parents"])))

    cpts_obj = obj["cpts"]
    if not isinstance(cpts_obj, dict):
        raise ModelFormatError("'cpts' must be an object mapping variable name to rows")
    declared = {v.name for v in variables}
    unknown = set(cpts_obj) - declared
    if unknown:
        raise ModelFormatError(f"cpts: unknown variable(s) {sorted(unknown)}")
    cpts: dict[str, Cpt] = {}
    for v in variables:
        rows = cpts_obj.get(v.name)
        if rows is None:
            raise ModelFormatError(f"cpts: missing table for '{v.name}'")
        if (not isinstance(rows, list)
                or not all(isinstance(r, list) for r in rows)
                or not all(isinstance(p, (int, float)) for r in rows for p in r)):
            raise ModelFormatError(f"cpts['{v.name}']: must be an array of rows of numbers")
        cpts[v.name] = Cpt.from_rows(rows)

    net = Network(tuple(variables), cpts)
    model: Model = net
    if "decision" in obj:
        d = obj["decision"]
        if not isinstance(d, dict):
            raise ModelFormatError("'decision' must be an object")
        _require_keys(d, _DEC_KEYS, {"name", "arity"}, "decision")
        if not isinstance(d["name"], str) or not isinstance(d["arity"], int):
            raise ModelFormatError("decision: 'name' must be a string, 'arity' an integer")
        dec_parents = d.get("parents", [])
        if not isinstance(dec_parents, list) or not all(isinstance(p, str) for p in dec_parents):
            raise ModelFormatError("decision: 'parents' must be an array of names")
        u = obj["utility"]
        if not isinstance(u, dict):
            raise ModelFormatError("'utility' must be an object")
        _require_keys(u, _UTIL_KEYS, _UTIL_KEYS, "utility")
        if (not isinstance(u["parents"], list)
                or not all(isinstance(p, str) for p in u["parents"])):
            raise ModelFormatError("utility: 'parents' must be an array of names")
        if (not isinstance(u["table"], list)
                or not all(isinstance(x, (int, float)) for x in u["table"])):
            raise ModelFormatError("utility: 'table' must be an array of numbers")
        model = InfluenceDiagram(
            network=net,
            decision=Decision(d["name"], d["arity"], tuple(dec_parents)),
            utility=Utility(tuple(u["parents"]), tuple(float(x) for x in u["table"])),
        )

    if check:
        violations = validate(model)
        if violations:
            raise ModelValidationError("; ".join(violations))
    return model


def model_to_dict(model: Model) -> dict[str, Any]:
    net = model.network if isinstance(model, InfluenceDiagram) else model
    obj: dict[str, Any] = {
        "variables": [
            {"name": v.name, "arity": v.arity, "parents": list(v.parents)}
            for v in net.variables
        ],
        "cpts": {v.name: [list(row) for row in net.cpts[v.name].rows] for v in net.variables},
    }
    if isinstance(model, InfluenceDiagram):
        obj["decision"] = {
            "name": model.decision.name,
            "arity": model.decision.arity,
            "parents": list(model.decision.parents),
        }
        obj["utility"] = {
            "parents": list(model.utility.parents),
            "table": list(model.utility.table),
        }
    return obj


def load(text: str) -> Model:
    """Parse a model from JSON text (see README for the schema)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}") from exc
    return model_from_dict(obj)


def render(model: Model) -> str:
    """Serialize a model back to JSON text; load(render(m)) == m."""
    return json.dumps(model_to_dict(model), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Estimation problems
# ---------------------------------------------------------------------------

class EstimationProblem:
    """A model plus an evidence assignment (and an action choice for IDs).

    Fixes the split X = (Z, O): the evidence variables O are clamped to their
    observed values, the remaining chance variables Z are free.  The target
    quantity is the sum over Z of g(Z), where g multiplies all CPT entries
    with O clamped (times the utility, with the decision clamped, for IDs).
    """

    def __init__(self, source: Model, evidence: Assignment | None = None,
                 action: int | None = None):
        evidence = dict(evidence or {})
        violations = validate(source)
        if violations:
            raise ModelValidationError("; ".join(violations))
        self.source = source
        self.network = source.network if isinstance(source, InfluenceDiagram) else source
        self.decision = source.decision if isinstance(source, InfluenceDiagram) else None
        self.utility = source.utility if isinstance(source, InfluenceDiagram) else None
        self.evidence: dict[str, int] = evidence
        self.action = action

        self.arity: dict[str, int] = {v.name: v.arity for v in self.network.variables}
        self.parents: dict[str, tuple[str, ...]] = {
            v.name: v.parents for v in self.network.variables}
        if self.decision is not None:
            self.arity[self.decision.name] = self.decision.arity
            self.parents[self.decision.name] = self.decision.parents

        chance = set(self.network.names)
        for name, value in evidence.items():
            if name not in chance:
                raise ModelValidationError(f"evidence names unknown variable '{name}'")
            if not 0 <= value < self.arity[name]:
                raise ModelValidationError(
                    f"evidence value {name}={value} out of range [0, {self.arity[name]})")
        if self.decision is None:
            if action is not None:
                raise ModelValidationError("action given but model has no decision node")
        else:
            if action is None:
                raise ModelValidationError("an action index is required for an influence diagram")
            if not 0 <= action < self.decision.arity:
                raise ModelValidationError(
                    f"action {action} out of range [0, {self.decision.arity})")
            missing = [p for p in self.decision.parents if p not in evidence]
            if missing:
                raise ModelValidationError(
                    f"evidence must include the decision's informational parents: {missing}")

        order = list(self.network.names)
        parents_of = dict(self.parents)
        if self.decision is not None:
            order.append(self.decision.name)
        self.sample_order: tuple[str, ...] = _topo_names(tuple(order), parents_of)
        self.free_vars: tuple[str, ...] = tuple(
            n for n in self.sample_order if n in chance and n not in evidence)
        self.evidence_vars: tuple[str, ...] = tuple(
            n for n in self.sample_order if n in evidence)

        self._parent_arities: dict[str, tuple[int, ...]] = {
            name: tuple(self.arity[p] for p in ps) for name, ps in self.parents.items()}

    @property
    def is_influence_diagram(self) -> bool:
        return self.decision is not None

    @property
    def state_count(self) -> int:
        return math.prod(self.arity[n] for n in self.free_vars)

    def parent_row(self, name: str, full: Assignment) -> int:
        """Row index of `name`'s CPT under the full assignment."""
        return parent_config_index(full, self.parents[name], self._parent_arities[name])

    def full_assignment(self, z: Assignment) -> dict[str, int]:
        """Merge a free-variable assignment with the clamped evidence and action."""
        full = dict(self.evidence)
        full.update(z)
        if self.decision is not None:
            full[self.decision.name] = self.action  # type: ignore[assignment]
        return full

    def iter_free_assignments(self) -> Iterator[dict[str, int]]:
        """All configurations of Z in mixed-radix order (first free variable most significant)."""
        names = self.free_vars
        if not names:
            yield {}
            return
        arities = [self.arity[n] for n in names]
        values = [0] * len(names)
        while True:
            yield dict(zip(names, values))
            i = len(names) - 1
            while i >= 0:
                values[i] += 1
                if values[i] < arities[i]:
                    break
                values[i] = 0
                i -= 1
            if i < 0:
                return

    def utility_value(self, full: Assignment) -> float:
        assert self.utility is not None
        idx = parent_config_index(full, self.utility.parents,
                                  tuple(self.arity[p] for p in self.utility.parents))
        return self.utility.table[idx]

    def g_value(self, full: Assignment) -> float:
        """Target factor product at a full assignment (direct multiplication)."""
        g = 1.0
        for name in self.network.names:
            row = self.network.cpts[name].rows[self.parent_row(name, full)]
            g *= row[full[name]]
        if self.utility is not None:
            g *= self.utility_value(full)
        return g

    def log_g(self, full: Assignment) -> float:
        """log of :meth:`g_value`, accumulated factor by factor; -inf if any factor is 0."""
        total = 0.0
        for name in self.network.names:
            row = self.network.cpts[name].rows[self.parent_row(name, full)]
            p = row[full[name]]
            if p == 0.0:
                return -math.inf
            total += math.log(p)
        if self.utility is not None:
            total += math.log(self.utility_value(full))
        return total
