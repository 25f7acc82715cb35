"""The eight acceptance criteria, one test each.

Every test records a PASS/FAIL line (shown in the terminal summary) and then
asserts. Run ``python3 tests/test_acceptance.py`` for the lines alone.
"""

from __future__ import annotations

import json
import random
import time
from pathlib import Path

import numpy as np

import cncc
from cncc.dataset import gen_synthetic_dataset
from cncc.engine import check_confluence, check_termination, explore, run
from cncc.errors import BoundExceeded
from cncc.model import (
    LEARNING_ORDER,
    RECOGNITION_ORDER,
    HormoneGate,
    builtin_cncc_learning,
    builtin_cncc_recognition,
    dataflow_closure_check,
    reacted_solution,
)
from cncc.parser import parse_program, render_program
from cncc.pipeline import PipelineConfig, run_pipeline
from cncc.stages import (
    PROB_TOL,
    MediaSample,
    MemoryHistory,
    RandomFeatureModel,
    ScConfig,
    adaboost_weights,
    stage_cc,
    stage_dl,
    stage_el,
    stage_il,
    stage_rl,
    stage_sc,
    top_k_count,
)

from helpers import BRANCH, CYCLE, DIAMOND, random_program

RESULTS: dict[int, str] = {}
GOLDEN = Path(__file__).parent / "golden" / "pipeline_default.json"


def record(number: int, title: str, ok: bool, elapsed: float, limit: float, detail: str = "") -> None:
    ok = ok and elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title} ({elapsed:.2f}s, limit {limit:g}s)"
    if detail:
        line += f" - {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def test_1_learning_sequence():
    start = time.perf_counter()
    seen = {}
    for policy in ("lex", "fifo", "random"):
        for seed in range(5):
            trace = run(builtin_cncc_learning(), scheduler=policy, seed=seed, max_steps=100)
            seen[(policy, seed)] = trace.rules == list(LEARNING_ORDER) and trace.terminal == reacted_solution()
    elapsed = time.perf_counter() - start
    bad = [k for k, ok in seen.items() if not ok]
    record(1, "learning sequence under every scheduler", not bad, elapsed, 1.0, f"mismatches {bad}" if bad else "")


def test_2_recognition_sequence():
    start = time.perf_counter()
    ok = all(
        run(builtin_cncc_recognition(), scheduler=policy, seed=seed).rules == list(RECOGNITION_ORDER)
        for policy in ("lex", "fifo", "random") for seed in range(3)
    )
    record(2, "recognition sequence of 4 steps", ok, time.perf_counter() - start, 1.0)


def test_3_confluence_and_termination():
    start = time.perf_counter()
    checks = {}
    for name, program in (("learning", builtin_cncc_learning()), ("recognition", builtin_cncc_recognition())):
        try:
            g = explore(program, state_bound=64)
        except BoundExceeded:
            checks[name] = False
            continue
        checks[name] = (
            len(g.terminals) == 1
            and check_confluence(g).kind == "confluent"
            and check_termination(g).kind == "terminating"
        )
    diamond = explore(parse_program(DIAMOND))
    checks["diamond"] = len(diamond.states) == 4 and check_confluence(diamond).kind == "confluent"
    branch = explore(parse_program(BRANCH))
    checks["branch"] = check_confluence(branch).kind == "nonConfluent" and len(check_confluence(branch).witness) == 2
    cycle = check_termination(explore(parse_program(CYCLE)))
    checks["cycle"] = cycle.kind == "cycle" and cycle.witness[0] == cycle.witness[-1]
    bad = [k for k, ok in checks.items() if not ok]
    record(3, "confluence and termination", not bad, time.perf_counter() - start, 1.0,
           f"failed {bad}" if bad else "")


def test_4_dataflow_closure():
    start = time.perf_counter()
    learning = builtin_cncc_learning()
    clean = dataflow_closure_check(learning).unbound_inputs == ()
    broken = {}
    for name in ("TS_SC", "TS_DL", "TS_CC", "TS_EL"):
        unbound = dataflow_closure_check(learning.without_rule(name)).unbound_inputs
        broken[name] = len(unbound) >= 1 and all(rule and sym for rule, sym in unbound)
    ok = clean and all(broken.values())
    record(4, "dataflow closure", ok, time.perf_counter() - start, 1.0,
           "" if ok else f"clean={clean} deletions={broken}")


def test_5_parser_roundtrip():
    start = time.perf_counter()
    package = Path(cncc.__file__).parent / "programs"
    programs = [parse_program(p.read_text(encoding="utf-8")) for p in sorted(package.glob("*.cham"))]
    rng = random.Random(20240601)
    programs += [random_program(rng) for _ in range(200)]
    diffs = 0
    for p in programs:
        text = render_program(p)
        again = parse_program(text)
        if again != p or render_program(again) != text:
            diffs += 1
    ok = diffs == 0 and len(programs) == 202
    record(5, "parser roundtrip on 202 programs", ok, time.perf_counter() - start, 5.0, f"{diffs} structural diffs")


def _stage_contracts(n: int, rng: np.random.Generator) -> dict[str, int]:
    """Count contract violations per stage over ``n`` random inputs each."""
    bad = dict.fromkeys(("SC", "DL", "CC", "EL", "RL", "IL"), 0)

    for _ in range(n):
        h, w, t = rng.integers(2, 9), rng.integers(2, 9), rng.integers(4, 33)
        sample = MediaSample(rng.normal(size=(h, w)), rng.normal(size=t))
        cfg = ScConfig(sparsity=float(rng.uniform(0.05, 1.0)))
        es = float(rng.uniform(0, 2))
        pair = stage_sc(sample, 0.0, es, cfg)
        again = stage_sc(sample, 0.0, es, cfg)
        for smap, size in ((pair.temporal, t), (pair.spatial, h * w)):
            if smap.nnz > top_k_count(cfg.sparsity, size) or np.any(smap.values <= 0):
                bad["SC"] += 1
        # Continuous random inputs have strictly positive contrast almost surely.
        if pair.spatial.nnz != top_k_count(cfg.sparsity, h * w):
            bad["SC"] += 1
        if not np.array_equal(pair.spatial.dense(), again.spatial.dense()):
            bad["SC"] += 1

    models = [
        RandomFeatureModel.init(s, 12, 16, c, hidden=8).fit(
            rng.random((20, 12)), rng.random((20, 16)), np.arange(20) % c)
        for s, c in ((1, 2), (2, 3), (3, 5))
    ]
    for i in range(n):
        model = models[i % len(models)]
        c = model.n_classes
        sa, sv = rng.random((3, 12)) * (rng.random((3, 12)) > 0.5), rng.random((3, 16))
        ma, mv = rng.normal(scale=0.5, size=(8, c)), rng.normal(scale=0.5, size=(8, c))
        out = stage_dl(sa, ma, sv, mv, model)
        twice = stage_dl(sa, ma, sv, mv, model)
        for f in (out.temporal, out.spatial):
            if np.any(f < 0) or np.max(np.abs(f.sum(axis=1) - 1)) > PROB_TOL:
                bad["DL"] += 1
        if not np.array_equal(out.temporal, twice.temporal):
            bad["DL"] += 1

        prior = rng.dirichlet(np.ones(c))
        fa, fv = rng.dirichlet(np.ones(c), size=4), rng.dirichlet(np.ones(c), size=4)
        mt, ms = rng.normal(scale=0.3, size=c), rng.normal(scale=0.3, size=c)
        cc = stage_cc(fa, mt, fv, ms, prior)
        for p in (cc.temporal, cc.spatial):
            if np.any(p < 0) or abs(p.sum() - 1) > PROB_TOL:
                bad["CC"] += 1

        weights = adaboost_weights(rng.uniform(0, 0.5, size=4))
        decision = stage_el(cc.temporal, cc.spatial, fa, fv, weights)
        if (not 0 <= decision.score <= 1 or abs(decision.shares.sum() - 1) > PROB_TOL
                or decision.score != decision.shares[decision.label]):
            bad["EL"] += 1

        expected = int(rng.integers(c)) if rng.random() < 0.5 else rng.dirichlet(np.ones(c))
        fb = stage_rl(decision, expected, float(rng.uniform(0.1, 2)), float(rng.uniform(0.1, 2)))
        if not 0 <= fb.error <= 1 or fb.ei < 0 or fb.es < 0:
            bad["RL"] += 1

        dims = {"hidden_temporal": 8, "hidden_spatial": 8, "topic_temporal": c,
                "topic_spatial": c, "saliency": 6, "shares": c}
        history = MemoryHistory({k: rng.normal(size=(c, d)) for k, d in dims.items()})
        obs = {k: rng.normal(size=(5, d)) for k, d in dims.items()}
        labels = rng.integers(c, size=5)
        ei = float(rng.uniform(0, 2)) if i % 4 else 0.0
        r1 = stage_il(ei, labels, history, obs)
        r2 = stage_il(ei, labels, history, obs)
        same = r1.history.equals(r2.history) and all(
            np.array_equal(getattr(r1.increments, f), getattr(r2.increments, f))
            for f in ("mp", "ma", "mv", "mt", "ms", "mn"))
        if not same or (ei == 0 and (not r1.increments.is_zero() or not r1.history.equals(history))):
            bad["IL"] += 1
    return bad


def test_6_stage_contracts():
    start = time.perf_counter()
    bad = _stage_contracts(1000, np.random.default_rng(6))
    ok = not any(bad.values())
    record(6, "stage contracts on 1000 inputs per stage", ok, time.perf_counter() - start, 10.0,
           ", ".join(f"{k}:{v}" for k, v in bad.items() if v))


def test_7_pipeline_learning():
    start = time.perf_counter()
    data = gen_synthetic_dataset(0, 200, 2, 0.1)
    m = run_pipeline(data, 5, PipelineConfig(), seed=0)
    flat = run_pipeline(data, 5, PipelineConfig(force_zero_ei=True), seed=0)
    elapsed = time.perf_counter() - start
    errors = m.per_iteration_error
    monotone = all(b <= a for a, b in zip(errors, errors[1:]))
    best_single = max(m.accuracy_temporal, m.accuracy_spatial)
    ensemble_ok = m.accuracy_ensemble >= best_single - 0.02
    constant = len(set(flat.per_iteration_error)) == 1
    golden = json.loads(GOLDEN.read_text(encoding="utf-8"))
    doc = m.to_json()
    golden_ok = (
        np.allclose([it["error"] for it in doc["iterations"]], [it["error"] for it in golden["iterations"]],
                    rtol=0, atol=1e-9)
        and doc["accuracy"] == golden["accuracy"]
        and doc["trace"] == golden["trace"]
    )
    ok = monotone and ensemble_ok and constant and golden_ok
    record(7, "pipeline learning behaviour", ok, elapsed, 30.0,
           f"errors {[round(e, 6) for e in errors]}, ensemble {m.accuracy_ensemble:.3f} vs best single "
           f"{best_single:.3f}, Ei=0 constant {constant}, golden match {golden_ok}")


def test_8_gate_neutrality():
    start = time.perf_counter()
    ok = True
    for program in (builtin_cncc_learning(), builtin_cncc_recognition()):
        for policy in ("lex", "fifo", "random"):
            plain = run(program, scheduler=policy, seed=3).dumps()
            gated = run(program, scheduler=policy, seed=3, gate=HormoneGate()).dumps()
            zeros = HormoneGate(dict.fromkeys((h.name for h in program.hormone_decls), 0))
            explicit = run(program, scheduler=policy, seed=3, gate=zeros).dumps()
            ok = ok and plain == gated == explicit
    record(8, "hormone gate neutrality", ok, time.perf_counter() - start, 1.0)


if __name__ == "__main__":
    import sys

    failures = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
