from __future__ import annotations

import json
import random

import pytest

from cncc.engine import (
    check_confluence,
    check_termination,
    enabled_rules,
    explore,
    fire,
    make_scheduler,
    replay,
    run,
)
from cncc.errors import BoundExceeded, RuleNotEnabled, UnknownRule
from cncc.model import (
    LEARNING_ORDER,
    RECOGNITION_ORDER,
    builtin_cncc_learning,
    builtin_cncc_recognition,
    reacted_solution,
    sm_part,
    ss_part,
)
from cncc.parser import parse_program, parse_solution
from cncc.terms import EMPTY

from helpers import BRANCH, CHAIN, CYCLE, DIAMOND, ONE_RULE, random_program

LEARN = builtin_cncc_learning()
RECOG = builtin_cncc_recognition()


def test_initially_only_sc_enabled():
    assert enabled_rules(LEARN.initial_solution(), LEARN) == ["TS_SC"]
    assert enabled_rules(EMPTY, LEARN) == []


def test_after_sc_only_dl_enabled():
    state = fire(LEARN.initial_solution(), "TS_SC", LEARN)
    assert enabled_rules(state, LEARN) == ["TS_DL"]


def test_fire_sc_rewrites_only_its_part():
    before = LEARN.initial_solution()
    after = fire(before, "TS_SC", LEARN)
    assert after.part("SM_SC") == sm_part("SC").part("SM_SC")
    assert "SS_SC" not in after.part_names
    for stage in ("DL", "CC", "EL", "RL", "IL"):
        assert after.part(f"SS_{stage}") == ss_part(stage).part(f"SS_{stage}")


def test_fire_errors():
    with pytest.raises(RuleNotEnabled):
        fire(EMPTY, "TS_SC", LEARN)
    with pytest.raises(UnknownRule):
        fire(LEARN.initial_solution(), "TS_XX", LEARN)


@pytest.mark.parametrize("policy", ["lex", "fifo", "random"])
@pytest.mark.parametrize("seed", [0, 1, 99])
def test_learning_run(policy, seed):
    trace = run(LEARN, scheduler=policy, seed=seed, max_steps=100)
    assert trace.rules == list(LEARNING_ORDER)
    assert trace.terminal == reacted_solution()
    assert not trace.truncated
    assert [s.index for s in trace.steps] == list(range(1, 7))


def test_recognition_run():
    trace = run(RECOG, max_steps=100)
    assert trace.rules == list(RECOGNITION_ORDER)
    assert trace.terminal == reacted_solution()
    assert enabled_rules(trace.terminal, RECOG) == []


def test_truncation():
    trace = run(LEARN, max_steps=2)
    assert trace.truncated
    assert trace.rules == ["TS_SC", "TS_DL"]


def test_exactly_reaching_the_limit_is_not_truncation():
    assert not run(LEARN, max_steps=6).truncated


def test_replay_reproduces_terminal():
    trace = run(LEARN)
    assert replay(LEARN, LEARN.initial_solution(), trace.rules) == trace.terminal


def test_trace_json_is_stable():
    a, b = run(LEARN, name="x").dumps(), run(LEARN, name="x").dumps()
    assert a == b
    doc = json.loads(a)
    assert sorted(doc) == ["program", "scheduler", "seed", "steps", "terminal", "truncated"]
    assert doc["steps"][0]["rule"] == "TS_SC"


@pytest.mark.parametrize("seed", range(30))
def test_token_conservation(seed):
    rng = random.Random(seed)
    program = random_program(rng)
    state = program.initial_solution()
    for _ in range(10):
        enabled = enabled_rules(state, program)
        if not enabled:
            break
        rule = program.rule(rng.choice(enabled))
        after = fire(state, rule.name, program)
        assert len(after) == len(state) - len(rule.consumes) + len(rule.produces)
        state = after


def test_fifo_prefers_longest_enabled():
    sched = make_scheduler("fifo")
    sched.reset(0)
    assert sched.choose(["A", "B"], 0) == "A"
    assert sched.choose(["B", "C"], 1) == "B"
    assert sched.choose(["C", "D"], 2) == "C"


def test_random_scheduler_is_seeded():
    program = parse_program(DIAMOND)
    runs = {tuple(run(program, scheduler="random", seed=s).rules) for s in range(20)}
    assert runs == {("R1", "R2"), ("R2", "R1")}
    assert run(program, scheduler="random", seed=3).rules == run(program, scheduler="random", seed=3).rules


def test_unknown_scheduler():
    with pytest.raises(ValueError):
        make_scheduler("round-robin")


def test_learning_graph():
    g = explore(LEARN)
    assert len(g.states) == 7
    assert len(g.edges) == 6
    assert [g.states[k] for k in g.terminals] == [reacted_solution()]
    assert g.longest_path() == 6
    assert check_confluence(g).kind == "confluent"
    assert check_termination(g).kind == "terminating"


def test_graph_edges_and_terminals_consistent():
    g = explore(parse_program(DIAMOND))
    for a, _, b in g.edges:
        assert a in g.states and b in g.states
    for t in g.terminals:
        assert g.successors(t) == []


def test_one_rule():
    g = explore(parse_program(ONE_RULE))
    assert len(g.states) == 2 and len(g.edges) == 1
    (t,) = g.terminals
    assert g.states[t] == parse_solution("solution main { i(b); }",
                                         parse_program(ONE_RULE))


def test_diamond():
    g = explore(parse_program(DIAMOND))
    assert len(g.states) == 4
    assert len(g.edges) == 4
    assert check_confluence(g).kind == "confluent"
    assert check_termination(g).kind == "terminating"


def test_branch_is_not_confluent():
    g = explore(parse_program(BRANCH))
    verdict = check_confluence(g)
    assert verdict.kind == "nonConfluent"
    rendered = sorted(g.states[k].key() for k in verdict.witness)
    assert rendered == sorted(g.states[k].key() for k in g.terminals)
    assert len(verdict.witness) == 2


def test_cycle():
    g = explore(parse_program(CYCLE))
    verdict = check_termination(g)
    assert verdict.kind == "cycle"
    assert verdict.witness[0] == verdict.witness[-1]
    assert len(verdict.witness) == 3
    assert check_confluence(g).kind == "nonConfluent"


def test_bound_exceeded_gives_unknown():
    with pytest.raises(BoundExceeded) as info:
        explore(parse_program(CHAIN), state_bound=2)
    partial = info.value.graph
    assert not partial.complete
    assert len(partial.states) == 2
    assert check_confluence(partial).kind == "unknown"
    assert check_termination(partial).kind == "unknown"


def test_dot_output():
    dot = explore(parse_program(ONE_RULE)).to_dot()
    assert dot.startswith("digraph")
    assert '"R"' in dot or "R" in dot
