"""The built-in CNCC learning and recognition programs and static analyses."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .errors import CyclicDependency
from .parser import builtin_context, parse_molecule, render_program
from .program import ChamProgram, ReactionRule
from .terms import HORMONES, TOKEN_KINDS, DataSymbol, HormoneSymbol, Molecule, Solution

STAGES = ("SC", "DL", "CC", "EL", "RL", "IL")
LEARNING_ORDER = tuple(f"TS_{s}" for s in STAGES)
RECOGNITION_ORDER = LEARNING_ORDER[:4]
EXTERNALS = ("Mi", "Mn", "Es", "Ma", "Mv", "Mt", "Ms")

# Initial (unreacted) sub-solutions.
SS_SOURCES: dict[str, tuple[str, ...]] = {
    "SC": ("i(Mi) <> i(Mn) <> i(Es) <> g(EH_SC) <> SC <> o(Sa) <> o(Sv) <> d(EH_SC)",),
    "DL": (
        "i(Sa) <> i(Ma) <> g(EH_DL) <> DL <> o(Fa)",
        "i(Sv) <> i(Mv) <> DL <> o(Fv) <> d(EH_DL)",
    ),
    "RL": ("i(Cp) <> g(EH_RL) <> RL <> o(Ei) <> o(Es) <> d(EH_RL)",),
    "IL": (
        "i(Ei) <> i(Cp) <> g(EH_IL) <> IL <> o(Mp) <> o(Ma) <> o(Mv) <> o(Mt) <> o(Ms) <> d(EH_IL)",
    ),
    "CC": (
        "i(Fa) <> i(Mt) <> g(EH_CC) <> CC <> o(Ct) <> d(EH_CC)",
        "i(Fv) <> i(Ms) <> g(EH_CC) <> CC <> o(Cs) <> d(EH_CC)",
    ),
    "EL": ("i(Ct) <> i(Cs) <> i(Fa) <> i(Fv) <> g(EH_EL) <> EL <> o(Cp) <> d(EH_EL)",),
}

# Reacted sub-solutions: the processing element moves to the front.
SM_SOURCES: dict[str, tuple[str, ...]] = {
    "SC": ("SC <> i(Mi) <> i(Mn) <> i(Es) <> g(EH_SC) <> o(Sa) <> o(Sv) <> d(EH_SC)",),
    "DL": (
        "DL <> i(Sa) <> i(Ma) <> g(EH_DL) <> o(Fa)",
        "DL <> i(Sv) <> i(Mv) <> o(Fv) <> d(EH_DL)",
    ),
    "RL": ("RL <> i(Cp) <> g(EH_RL) <> o(Ei) <> o(Es) <> d(EH_RL)",),
    "IL": (
        "IL <> i(Ei) <> i(Cp) <> g(EH_IL) <> o(Mp) <> o(Ma) <> o(Mv) <> o(Mt) <> o(Ms) <> d(EH_IL)",
    ),
    "CC": (
        "CC <> i(Fa) <> i(Mt) <> g(EH_CC) <> o(Ct) <> d(EH_CC)",
        "CC <> i(Fv) <> i(Ms) <> g(EH_CC) <> o(Cs) <> d(EH_CC)",
    ),
    "EL": ("EL <> i(Ct) <> i(Cs) <> i(Fa) <> i(Fv) <> g(EH_EL) <> o(Cp) <> d(EH_EL)",),
}

# Dataflow contract of each stage: (inputs, outputs).
STAGE_SIGNATURES: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "TS_SC": (("Mi", "Mn", "Es"), ("Sa", "Sv")),
    "TS_DL": (("Sa", "Ma", "Sv", "Mv"), ("Fa", "Fv")),
    "TS_CC": (("Fa", "Mt", "Fv", "Ms"), ("Ct", "Cs")),
    "TS_EL": (("Ct", "Cs", "Fa", "Fv"), ("Cp",)),
    "TS_RL": (("Cp",), ("Ei", "Es")),
    "TS_IL": (("Ei", "Cp"), ("Mp", "Ma", "Mv", "Mt", "Ms", "Mn")),
}


def _molecules(sources: tuple[str, ...]) -> list[Molecule]:
    ctx = builtin_context()
    return [parse_molecule(s, ctx) for s in sources]


def ss_part(stage: str) -> Solution:
    return Solution({f"SS_{stage}": _molecules(SS_SOURCES[stage])})


def sm_part(stage: str) -> Solution:
    return Solution({f"SM_{stage}": _molecules(SM_SOURCES[stage])})


def _join(parts) -> Solution:
    out = Solution()
    for p in parts:
        out = out | p
    return out


def initial_learning_solution() -> Solution:
    return _join(ss_part(s) for s in STAGES)


def initial_recognition_solution() -> Solution:
    return _join([*(ss_part(s) for s in STAGES[:4]), sm_part("RL"), sm_part("IL")])


def reacted_solution() -> Solution:
    return _join(sm_part(s) for s in STAGES)


def _stage_rule(stage: str, externals: set[str]) -> ReactionRule:
    """SS_x => SM_x, with the upstream reacted molecules that emit each
    non-external input attached as catalysts."""
    needed = {s.name for m in _molecules(SS_SOURCES[stage]) for s in m.inputs()} - externals
    catalysts = []
    for upstream in STAGES:
        if upstream == stage:
            continue
        for m in _molecules(SM_SOURCES[upstream]):
            if needed & {s.name for s in m.outputs()}:
                catalysts.append((f"SM_{upstream}", m))
    catalyst = Solution.from_pairs(catalysts)
    return ReactionRule(f"TS_{stage}", ss_part(stage) | catalyst, sm_part(stage) | catalyst)


def _declarations():
    data = tuple(DataSymbol(n, k) for n, k in TOKEN_KINDS.items())
    hormones = tuple(HormoneSymbol(h) for h in HORMONES)
    externals = frozenset(DataSymbol.builtin(n) for n in EXTERNALS)
    return data, hormones, externals


@lru_cache(maxsize=None)
def builtin_cncc_learning() -> ChamProgram:
    data, hormones, externals = _declarations()
    rules = tuple(_stage_rule(s, set(EXTERNALS)) for s in STAGES)
    return ChamProgram(data, hormones, externals, initial_learning_solution(), rules)


@lru_cache(maxsize=None)
def builtin_cncc_recognition() -> ChamProgram:
    data, hormones, externals = _declarations()
    rules = tuple(_stage_rule(s, set(EXTERNALS)) for s in STAGES[:4])
    return ChamProgram(data, hormones, externals, initial_recognition_solution(), rules)


def shipped_source(name: str) -> str:
    """Text of a bundled ``.cham`` file (``cncc_learning`` or ``cncc_recognition``)."""
    return resources.files("cncc").joinpath("programs", f"{name}.cham").read_text(encoding="utf-8")


def write_shipped_sources(directory) -> None:
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, program in (
        ("cncc_learning", builtin_cncc_learning()),
        ("cncc_recognition", builtin_cncc_recognition()),
    ):
        (directory / f"{name}.cham").write_text(render_program(program), encoding="utf-8")


@dataclass(frozen=True)
class CnccFramework:
    learning: ChamProgram
    recognition: ChamProgram
    token_types: Mapping[str, str]
    stage_signatures: Mapping[str, tuple[tuple[str, ...], tuple[str, ...]]]

    @classmethod
    def build(cls) -> CnccFramework:
        return cls(
            builtin_cncc_learning(),
            builtin_cncc_recognition(),
            dict(TOKEN_KINDS),
            dict(STAGE_SIGNATURES),
        )


# --- Layer 0: endocrine gating ---------------------------------------------


@dataclass(frozen=True)
class HormoneGate:
    """Thresholds and starting levels of the hormone reservoir.

    A rule may fire only while every hormone it generates or dissipates sits at
    or above its threshold. Missing entries mean 0, so the default gate never
    blocks anything.
    """

    thresholds: Mapping[str, int] = field(default_factory=dict)
    initial_levels: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for table in (self.thresholds, self.initial_levels):
            for name, value in table.items():
                if value < 0:
                    raise ValueError(f"negative hormone value for {name}: {value}")

    def threshold(self, hormone: str) -> int:
        return self.thresholds.get(hormone, 0)

    def levels_for(self, program: ChamProgram) -> dict[str, int]:
        return {h.name: self.initial_levels.get(h.name, 0) for h in program.hormone_decls}


def endocrine_gate_eval(gate: HormoneGate | None, rule: ReactionRule, levels: Mapping[str, int]) -> bool:
    if gate is None:
        return True
    involved = set(rule.hormones_generated) | set(rule.hormones_dissipated)
    return all(levels.get(h.name, 0) >= gate.threshold(h.name) for h in involved)


def apply_hormones(rule: ReactionRule, levels: Mapping[str, int]) -> dict[str, int]:
    """Reservoir update for one firing: each ``d(EH)`` of the reacting
    molecules takes one unit, floored at zero. ``g(EH)`` only gates."""
    out = dict(levels)
    for h, n in rule.hormones_dissipated.items():
        out[h.name] = max(0, out.get(h.name, 0) - n)
    return out


def secrete(levels: Mapping[str, int], hormone: str, amount: int = 1) -> dict[str, int]:
    """Layer-0 regeneration of a hormone between runs."""
    if amount < 0:
        raise ValueError("secretion amount must be non-negative")
    out = dict(levels)
    out[hormone] = out.get(hormone, 0) + amount
    return out


# --- static analyses -------------------------------------------------------


@dataclass(frozen=True)
class ClosureReport:
    unbound_inputs: tuple[tuple[str, str], ...]
    unused_outputs: tuple[tuple[str, str], ...]
    externals_used: frozenset[str]

    @property
    def ok(self) -> bool:
        return not self.unbound_inputs

    def to_json(self) -> dict:
        return {
            "unboundInputs": [list(p) for p in self.unbound_inputs],
            "unusedOutputs": [list(p) for p in self.unused_outputs],
            "externalsUsed": sorted(self.externals_used),
        }


def dataflow_closure_check(p: ChamProgram) -> ClosureReport:
    externals = {s.name for s in p.externals}
    produced = {s.name for r in p.rules for s in r.output_symbols()}
    consumed = {s.name for r in p.rules for s in r.input_symbols()}
    unbound, used = [], set()
    for rule in p.rules:
        for sym in rule.input_symbols():
            if sym.name in externals:
                used.add(sym.name)
            elif sym.name not in produced:
                unbound.append((rule.name, sym.name))
    unused = [
        (rule.name, sym.name)
        for rule in p.rules
        for sym in rule.output_symbols()
        if sym.name not in consumed
    ]
    return ClosureReport(tuple(unbound), tuple(unused), frozenset(used))


def dependency_edges(p: ChamProgram) -> dict[str, set[str]]:
    """Producer -> consumer edges over one iteration; externals carry no edge."""
    externals = {s.name for s in p.externals}
    edges: dict[str, set[str]] = {r.name: set() for r in p.rules}
    for a in p.rules:
        outs = {s.name for s in a.output_symbols()} - externals
        for b in p.rules:
            if a.name != b.name and outs & {s.name for s in b.input_symbols()}:
                edges[a.name].add(b.name)
    return edges


def _find_cycle(edges: dict[str, set[str]]) -> list[str] | None:
    color: dict[str, int] = {}
    stack: list[str] = []

    def visit(node):
        color[node] = 1
        stack.append(node)
        for nxt in sorted(edges[node]):
            if color.get(nxt) == 1:
                return stack[stack.index(nxt):] + [nxt]
            if nxt not in color:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        color[node] = 2
        return None

    for node in sorted(edges):
        if node not in color:
            found = visit(node)
            if found:
                return found
    return None


def dependency_order(p: ChamProgram) -> list[list[str]]:
    """Every topological order of the rules, lexicographically sorted."""
    edges = dependency_edges(p)
    cycle = _find_cycle(edges)
    if cycle:
        raise CyclicDependency(cycle)
    indegree = Counter({name: 0 for name in edges})
    for targets in edges.values():
        for t in targets:
            indegree[t] += 1

    orders: list[list[str]] = []
    prefix: list[str] = []

    def extend():
        if len(prefix) == len(edges):
            orders.append(list(prefix))
            return
        for name in sorted(edges):
            if indegree[name] == 0 and name not in prefix:
                prefix.append(name)
                for t in edges[name]:
                    indegree[t] -= 1
                extend()
                for t in edges[name]:
                    indegree[t] += 1
                prefix.pop()

    extend()
    return orders
