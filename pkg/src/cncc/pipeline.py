"""End-to-end numeric run: the learning CHAM program drives the six stages."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import run as run_cham
from .errors import StageError, StageFailure
from .model import LEARNING_ORDER, STAGE_SIGNATURES, builtin_cncc_learning
from .program import ChamProgram
from .stages import (
    EXPERTS,
    FeedbackBundle,
    Increments,
    MediaSample,
    MemoryHistory,
    RandomFeatureModel,
    ScConfig,
    adaboost_weights,
    expert_votes,
    saliency_batch,
    stage_cc,
    stage_dl,
    stage_el,
    stage_il,
    stage_rl,
    stage_seed,
)


@dataclass(frozen=True)
class PipelineConfig:
    sparsity: float = 0.25
    window: int = 3
    hidden: int = 64
    gain: float = 5.0
    ridge: float = 1e-2
    eta: float = 0.1
    lambda_s: float = 0.5
    lambda_i: float = 1.0
    train_fraction: float = 0.5
    val_fraction: float = 0.25
    force_zero_ei: bool = False
    scheduler: str = "lex"

    def __post_init__(self) -> None:
        if not (0 < self.train_fraction and 0 < self.val_fraction and self.train_fraction + self.val_fraction < 1):
            raise ValueError("train and validation fractions must leave a non-empty test split")
        ScConfig(self.sparsity, self.window)

    @property
    def sc(self) -> ScConfig:
        return ScConfig(self.sparsity, self.window)


@dataclass
class _Context:
    """Everything a stage needs besides the tokens it reads."""

    cfg: PipelineConfig
    model: RandomFeatureModel
    prior: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    history: MemoryHistory
    last_error: float | None = None
    accepted: bool = True


Store = dict


@dataclass(frozen=True)
class StageBinding:
    rule: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    fn: Callable[[Store, _Context], dict]


def _sc(store, ctx):
    sa, sv = saliency_batch(store["Mi"], store["Mn"], store["Es"], ctx.cfg.sc)
    return {"Sa": sa, "Sv": sv}


def _dl(store, ctx):
    feats = stage_dl(store["Sa"], store["Ma"], store["Sv"], store["Mv"], ctx.model)
    return {"Fa": feats.temporal, "Fv": feats.spatial}


def _cc(store, ctx):
    rows = [
        stage_cc(fa, store["Mt"], fv, store["Ms"], ctx.prior)
        for fa, fv in zip(store["Fa"], store["Fv"])
    ]
    return {"Ct": np.stack([r.temporal for r in rows]), "Cs": np.stack([r.spatial for r in rows])}


def _el(store, ctx):
    return {
        "Cp": [
            stage_el(ct, cs, fa, fv, ctx.weights)
            for ct, cs, fa, fv in zip(store["Ct"], store["Cs"], store["Fa"], store["Fv"])
        ]
    }


def _rl(store, ctx):
    fb = [stage_rl(cp, y, ctx.cfg.lambda_s, ctx.cfg.lambda_i) for cp, y in zip(store["Cp"], ctx.labels)]
    error = float(np.mean([f.error for f in fb]))
    ei = 0.0 if ctx.cfg.force_zero_ei else ctx.cfg.lambda_i * error
    return {"Ei": ei, "Es": ctx.cfg.lambda_s * error, "_error": error}


def _observations(store, ctx) -> dict[str, np.ndarray]:
    return {
        "hidden_temporal": ctx.model.hidden(store["Sa"], "temporal"),
        "hidden_spatial": ctx.model.hidden(store["Sv"], "spatial"),
        "topic_temporal": store["Ct"],
        "topic_spatial": store["Cs"],
        "saliency": np.hstack([store["Sa"], store["Sv"]]),
        "shares": np.stack([cp.shares for cp in store["Cp"]]),
    }


def _il(store, ctx):
    def evaluate(inc: Increments) -> float:
        trial = dict(store)
        for sym, attr in (("Mn", "mn"), ("Ma", "ma"), ("Mv", "mv"), ("Mt", "mt"), ("Ms", "ms")):
            trial[sym] = store[sym] + getattr(inc, attr)
        return _forward(trial, ctx, upto="TS_RL")["_error"]

    result = stage_il(
        store["Ei"],
        [cp.label for cp in store["Cp"]],
        ctx.history,
        _observations(store, ctx),
        eta=ctx.cfg.eta,
        evaluate=evaluate,
        last_error=store["_error"],
    )
    ctx.history = result.history
    ctx.accepted = result.accepted
    inc = result.increments
    return {
        "Mp": store["Mp"] + inc.mp,
        "Ma": store["Ma"] + inc.ma,
        "Mv": store["Mv"] + inc.mv,
        "Mt": store["Mt"] + inc.mt,
        "Ms": store["Ms"] + inc.ms,
        "Mn": store["Mn"] + inc.mn,
    }


BINDINGS: dict[str, StageBinding] = {
    b.rule: b
    for b in (
        StageBinding("TS_SC", ("Mi", "Mn", "Es"), ("Sa", "Sv"), _sc),
        StageBinding("TS_DL", ("Sa", "Ma", "Sv", "Mv"), ("Fa", "Fv"), _dl),
        StageBinding("TS_CC", ("Fa", "Mt", "Fv", "Ms"), ("Ct", "Cs"), _cc),
        StageBinding("TS_EL", ("Ct", "Cs", "Fa", "Fv"), ("Cp",), _el),
        StageBinding("TS_RL", ("Cp",), ("Ei", "Es"), _rl),
        StageBinding("TS_IL", ("Ei", "Cp"), ("Mp", "Ma", "Mv", "Mt", "Ms", "Mn"), _il),
    )
}


def check_bindings(program: ChamProgram, bindings: dict[str, StageBinding] = BINDINGS) -> None:
    """Every rule has a stage, and every stage honors its dataflow signature."""
    if set(bindings) != set(program.rule_names):
        raise ValueError(f"bound stages {sorted(bindings)} do not match rules {program.rule_names}")
    for name, b in bindings.items():
        ins, outs = STAGE_SIGNATURES[name]
        if set(b.inputs) != set(ins) or set(b.outputs) != set(outs):
            raise ValueError(f"{name}: stage reads {b.inputs} -> {b.outputs}, contract is {ins} -> {outs}")
        rule = program.rule(name)
        if {s.name for s in rule.input_symbols()} != set(ins):
            raise ValueError(f"{name}: rule inputs disagree with the stage contract")
        if not {s.name for s in rule.output_symbols()} <= set(outs):
            raise ValueError(f"{name}: rule outputs exceed the stage contract")


def _execute(binding: StageBinding, store: Store, ctx: _Context) -> None:
    missing = [s for s in binding.inputs if s not in store]
    if missing:
        raise StageError(f"{binding.rule} fired before {missing} were available")
    store.update(binding.fn(store, ctx))


def _forward(store: Store, ctx: _Context, upto: str) -> Store:
    """Run stages in pipeline order up to and including ``upto``, off the CHAM."""
    for rule in LEARNING_ORDER[: LEARNING_ORDER.index(upto) + 1]:
        _execute(BINDINGS[rule], store, ctx)
    return store


def _seed_store(samples, fb: FeedbackBundle) -> Store:
    return {"Mi": samples, "Mn": fb.mn, "Es": fb.es, "Ma": fb.ma, "Mv": fb.mv, "Mt": fb.mt, "Ms": fb.ms, "Mp": fb.mp}


def _stratified_split(labels: np.ndarray, cfg: PipelineConfig, seed: int):
    rng = np.random.default_rng(stage_seed(seed, "split"))
    train, val, test = [], [], []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n_train = max(1, int(round(cfg.train_fraction * idx.size)))
        n_val = max(1, int(round(cfg.val_fraction * idx.size)))
        train += list(idx[:n_train])
        val += list(idx[n_train:n_train + n_val])
        test += list(idx[n_train + n_val:])
    return sorted(train), sorted(val), sorted(test)


@dataclass
class PipelineMetrics:
    per_iteration_error: list[float]
    accuracy_ensemble: float
    accuracy_temporal: float
    accuracy_spatial: float
    trace: list[list[str]]
    accepted: list[bool] = field(default_factory=list)
    expert_weights: list[float] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "iterations": [
                {"error": e, "accepted": a, "rules": r}
                for e, a, r in zip(self.per_iteration_error, self.accepted, self.trace)
            ],
            "accuracy": {
                "ensemble": self.accuracy_ensemble,
                "temporal": self.accuracy_temporal,
                "spatial": self.accuracy_spatial,
            },
            "expertWeights": dict(zip(EXPERTS, self.expert_weights)),
            "trace": self.trace,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def run_pipeline(
    dataset: Sequence[MediaSample],
    iterations: int,
    cfg: PipelineConfig = PipelineConfig(),
    seed: int = 0,
    program: ChamProgram | None = None,
) -> PipelineMetrics:
    """Fit the stages, then run the learning program once per iteration.

    The readouts are fitted on the training split. The validation split sets
    the expert weights and then flows through every iteration, with Es and the
    IL increments carried over. Accuracies come from the held-out test split
    under the final feedback.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    program = program or builtin_cncc_learning()
    check_bindings(program)

    labels = np.array([s.label for s in dataset])
    if any(s.label is None for s in dataset):
        raise ValueError("the pipeline needs labeled samples")
    n_classes = int(labels.max()) + 1
    h, w, t = dataset[0].shape
    train, val, test = _stratified_split(labels, cfg, seed)
    subset = lambda idx: [dataset[i] for i in idx]  # noqa: E731

    fb = FeedbackBundle.neutral(n_classes, cfg.hidden, t + h * w)
    model = RandomFeatureModel.init(stage_seed(seed, "DL"), t, h * w, n_classes, cfg.hidden, cfg.gain)
    sa, sv = saliency_batch(subset(train), fb.mn, fb.es, cfg.sc)
    model = model.fit(sa, sv, labels[train], cfg.ridge)
    prior = np.bincount(labels[train], minlength=n_classes) / len(train)
    history = MemoryHistory.zeros(n_classes, {
        "hidden_temporal": cfg.hidden, "hidden_spatial": cfg.hidden,
        "topic_temporal": n_classes, "topic_spatial": n_classes,
        "saliency": t + h * w, "shares": n_classes,
    })

    # Expert weights from validation errors under neutral feedback.
    ctx = _Context(cfg, model, prior, np.ones(len(EXPERTS)), labels[val], history)
    probe = _forward(_seed_store(subset(val), fb), ctx, upto="TS_CC")
    votes = np.array([expert_votes(ct, cs, fa, fv)
                      for ct, cs, fa, fv in zip(probe["Ct"], probe["Cs"], probe["Fa"], probe["Fv"])])
    errors = (votes != labels[val][:, None]).mean(axis=0)
    weights = adaboost_weights(errors)
    # No expert beat chance on validation: fall back to an unweighted vote.
    ctx.weights = weights if weights.sum() > 0 else np.ones(len(EXPERTS))

    errors_per_iter, traces, accepted = [], [], []
    for k in range(1, iterations + 1):
        store = _seed_store(subset(val), fb)

        def on_fire(_index, rule, store=store, k=k):
            try:
                _execute(BINDINGS[rule], store, ctx)
            except (StageError, ValueError) as exc:
                raise StageFailure(k, rule, exc) from exc

        trace = run_cham(program, scheduler=cfg.scheduler, seed=stage_seed(seed, "cham", k),
                         max_steps=len(program.rules), on_fire=on_fire)
        traces.append(trace.rules)
        errors_per_iter.append(store["_error"])
        accepted.append(ctx.accepted)
        ctx.last_error = store["_error"]
        fb = FeedbackBundle(store["Ei"], store["Es"], store["Mp"], store["Ma"], store["Mv"],
                            store["Mt"], store["Ms"], store["Mn"])

    final = _forward(_seed_store(subset(test), fb), ctx, upto="TS_EL")
    y = labels[test]
    return PipelineMetrics(
        per_iteration_error=errors_per_iter,
        accuracy_ensemble=float(np.mean([cp.label for cp in final["Cp"]] == y)),
        accuracy_temporal=float(np.mean(final["Ct"].argmax(axis=1) == y)),
        accuracy_spatial=float(np.mean(final["Cs"].argmax(axis=1) == y)),
        trace=traces,
        accepted=accepted,
        expert_weights=[float(a) for a in ctx.weights],
        config=asdict(cfg),
        seed=seed,
    )
