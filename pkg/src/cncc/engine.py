"""Executing CHAM programs: firing, scheduled runs and state-space exploration."""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import BoundExceeded, RuleNotEnabled
from .model import HormoneGate, apply_hormones, endocrine_gate_eval
from .program import ChamProgram, ReactionRule
from .terms import Solution


def _rule_enabled(state: Solution, rule: ReactionRule, gate, levels) -> bool:
    if not state.contains(rule.consumes):
        return False
    if gate is not None and not endocrine_gate_eval(gate, rule, levels or {}):
        return False
    return True


def enabled_rules(
    state: Solution,
    program: ChamProgram,
    gate: HormoneGate | None = None,
    levels: Mapping[str, int] | None = None,
) -> list[str]:
    if gate is not None and levels is None:
        levels = gate.levels_for(program)
    return sorted(r.name for r in program.rules if _rule_enabled(state, r, gate, levels))


def fire(
    state: Solution,
    rule_name: str,
    program: ChamProgram,
    gate: HormoneGate | None = None,
    levels: Mapping[str, int] | None = None,
) -> Solution:
    """Successor state ``state - consumes + produces``."""
    rule = program.rule(rule_name)
    if gate is not None and levels is None:
        levels = gate.levels_for(program)
    if not _rule_enabled(state, rule, gate, levels):
        raise RuleNotEnabled(rule_name)
    return state.difference(rule.consumes).union(rule.produces)


# --- schedulers --------------------------------------------------------------


class Scheduler:
    name = "base"

    def reset(self, seed: int) -> None:
        pass

    def choose(self, enabled: list[str], step: int) -> str:
        raise NotImplementedError


class Lexicographic(Scheduler):
    name = "lex"

    def choose(self, enabled, step):
        return enabled[0]


class Fifo(Scheduler):
    """Fires the rule that has been enabled the longest; ties by name."""

    name = "fifo"

    def reset(self, seed):
        self._since: dict[str, int] = {}

    def choose(self, enabled, step):
        self._since = {r: self._since.get(r, step) for r in enabled}
        pick = min(enabled, key=lambda r: (self._since[r], r))
        del self._since[pick]
        return pick


class RandomChoice(Scheduler):
    name = "random"

    def reset(self, seed):
        self._rng = random.Random(seed)

    def choose(self, enabled, step):
        return self._rng.choice(enabled)


SCHEDULERS: dict[str, type[Scheduler]] = {
    "lex": Lexicographic,
    "lexicographic": Lexicographic,
    "fifo": Fifo,
    "random": RandomChoice,
}


def make_scheduler(policy: str | Scheduler) -> Scheduler:
    if isinstance(policy, Scheduler):
        return policy
    try:
        return SCHEDULERS[policy]()
    except KeyError:
        raise ValueError(f"unknown scheduler {policy!r}; choose from lex, fifo, random") from None


# --- traces ------------------------------------------------------------------


def _tokens(sol: Solution) -> list[str]:
    return [f"{part}: {m.render()}" for part, m in sol.pairs()]


@dataclass(frozen=True)
class Step:
    index: int
    rule: str
    consumed: tuple[str, ...]
    produced: tuple[str, ...]
    hormones: Mapping[str, int]

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "rule": self.rule,
            "consumed": list(self.consumed),
            "produced": list(self.produced),
            "hormones": dict(sorted(self.hormones.items())),
        }


@dataclass(frozen=True)
class Trace:
    steps: tuple[Step, ...]
    terminal: Solution
    truncated: bool
    levels: Mapping[str, int] = field(default_factory=dict)
    program: str = ""
    scheduler: str = "lex"
    seed: int = 0

    @property
    def rules(self) -> list[str]:
        return [s.rule for s in self.steps]

    def to_json(self) -> dict:
        return {
            "program": self.program,
            "scheduler": self.scheduler,
            "seed": self.seed,
            "steps": [s.to_json() for s in self.steps],
            "terminal": _tokens(self.terminal),
            "truncated": self.truncated,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def run(
    program: ChamProgram,
    initial: Solution | None = None,
    scheduler: str | Scheduler = "lex",
    max_steps: int = 1000,
    seed: int = 0,
    gate: HormoneGate | None = None,
    levels: Mapping[str, int] | None = None,
    on_fire: Callable[[int, str], None] | None = None,
    name: str = "",
) -> Trace:
    """Fire scheduler-chosen rules until none is enabled or ``max_steps`` is hit.

    ``on_fire(index, rule)`` is called after each firing; it is how the numeric
    pipeline binds stages to rules.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    state = program.initial_solution() if initial is None else initial
    sched = make_scheduler(scheduler)
    sched.reset(seed)
    if levels is None:
        levels = (gate or HormoneGate()).levels_for(program)
    levels = dict(levels)

    steps = []
    truncated = False
    while True:
        enabled = enabled_rules(state, program, gate, levels)
        if not enabled:
            break
        if len(steps) == max_steps:
            truncated = True
            break
        pick = sched.choose(enabled, len(steps))
        rule = program.rule(pick)
        state = fire(state, pick, program, gate, levels)
        levels = apply_hormones(rule, levels)
        steps.append(
            Step(len(steps) + 1, pick, tuple(_tokens(rule.consumes)), tuple(_tokens(rule.produces)), dict(levels))
        )
        if on_fire is not None:
            on_fire(len(steps), pick)
    return Trace(tuple(steps), state, truncated, levels, name, sched.name, seed)


def replay(program: ChamProgram, initial: Solution, rules: list[str]) -> Solution:
    state = initial
    for name in rules:
        state = fire(state, name, program)
    return state


# --- exploration -------------------------------------------------------------


@dataclass
class StateGraph:
    initial: str
    states: dict[str, Solution] = field(default_factory=dict)
    edges: set[tuple[str, str, str]] = field(default_factory=set)
    complete: bool = False

    @property
    def terminals(self) -> list[str]:
        sources = {a for a, _, _ in self.edges}
        return sorted(k for k in self.states if k not in sources)

    def successors(self, key: str) -> list[tuple[str, str]]:
        return sorted((rule, b) for a, rule, b in self.edges if a == key)

    def longest_path(self) -> int:
        """Edge count of the longest path from the initial state (acyclic graphs)."""
        memo: dict[str, int] = {}

        def depth(k):
            if k not in memo:
                memo[k] = max((1 + depth(b) for _, b in self.successors(k)), default=0)
            return memo[k]

        return depth(self.initial)

    def to_dot(self) -> str:
        ids = {k: f"s{i}" for i, k in enumerate(sorted(self.states, key=lambda k: (k != self.initial, k)))}
        terminals = set(self.terminals)
        lines = ["digraph cham {", "  rankdir=LR;", '  node [shape=box, fontname="monospace"];']
        for k, sid in sorted(ids.items(), key=lambda kv: int(kv[1][1:])):
            label = k.replace('"', '\\"').replace(" // ", "\\n")
            extra = ", peripheries=2" if k in terminals else ""
            lines.append(f'  {sid} [label="{label}"{extra}];')
        for a, rule, b in sorted(self.edges):
            lines.append(f'  {ids[a]} -> {ids[b]} [label="{rule}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def explore(program: ChamProgram, initial: Solution | None = None, state_bound: int = 64) -> StateGraph:
    """Breadth-first closure over every interleaving, ungated.

    Raises :class:`BoundExceeded` (carrying the partial graph) as soon as more
    than ``state_bound`` distinct states are discovered.
    """
    if state_bound < 1:
        raise ValueError("state_bound must be positive")
    start = program.initial_solution() if initial is None else initial
    graph = StateGraph(start.key(), {start.key(): start})
    frontier = deque([start])
    while frontier:
        state = frontier.popleft()
        for name in enabled_rules(state, program):
            succ = fire(state, name, program)
            key = succ.key()
            if key not in graph.states:
                if len(graph.states) >= state_bound:
                    raise BoundExceeded(state_bound, graph)
                graph.states[key] = succ
                frontier.append(succ)
            graph.edges.add((state.key(), name, key))
    graph.complete = True
    return graph


@dataclass(frozen=True)
class Verdict:
    kind: str
    witness: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"verdict": self.kind, "witness": list(self.witness)}


def check_confluence(g: StateGraph) -> Verdict:
    """``confluent`` iff the complete graph has exactly one terminal state.

    A complete graph with no terminal at all is reported non-confluent with an
    empty witness.
    """
    if not g.complete:
        return Verdict("unknown")
    terminals = g.terminals
    if len(terminals) == 1:
        return Verdict("confluent", tuple(terminals))
    return Verdict("nonConfluent", tuple(terminals[:2]))


def check_termination(g: StateGraph) -> Verdict:
    if not g.complete:
        return Verdict("unknown")
    color: dict[str, int] = {}
    path: list[str] = []

    def visit(k):
        color[k] = 1
        path.append(k)
        for _, b in g.successors(k):
            if color.get(b) == 1:
                return path[path.index(b):] + [b]
            if b not in color:
                found = visit(b)
                if found:
                    return found
        path.pop()
        color[k] = 2
        return None

    for k in [g.initial] + sorted(g.states):
        if k not in color:
            found = visit(k)
            if found:
                return Verdict("cycle", tuple(found))
    return Verdict("terminating")
