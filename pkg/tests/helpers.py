"""Shared fixture programs and a random program generator for the tests."""

from __future__ import annotations

import random

from cncc.program import ChamProgram, ReactionRule
from cncc.terms import (
    PROCESSORS,
    TOKEN_KINDS,
    DataSymbol,
    Dissipate,
    Generate,
    HormoneSymbol,
    Input,
    Output,
    Processor,
    Solution,
    molecule,
)

DECLS = "data a: set;\ndata b: set;\ndata c: set;\ndata d: set;\n"

ONE_RULE = DECLS + "solution main { i(a); }\nrule R: i(a) => i(b);\n"

# Two independent rules on disjoint tokens: four states, one terminal.
DIAMOND = DECLS + "solution main { i(a); i(c); }\nrule R1: i(a) => i(b);\nrule R2: i(c) => i(d);\n"

# One token, two ways out.
BRANCH = DECLS + "solution main { i(a); }\nrule R1: i(a) => i(b);\nrule R2: i(a) => i(c);\n"

CYCLE = DECLS + "solution main { i(a); }\nrule R1: i(a) => i(b);\nrule R2: i(b) => i(a);\n"

# Six SS->SM steps under a bound that cannot hold them all.
CHAIN = DECLS + "solution main { i(a); }\nrule R1: i(a) => i(b);\nrule R2: i(b) => i(c);\nrule R3: i(c) => i(d);\n"

GENERIC = ("x0", "x1", "x2", "x3")
KINDS = ("matrix", "vector", "parameter", "set")


def random_program(rng: random.Random) -> ChamProgram:
    """A well-formed program over a random subset of symbols, hormones and parts."""
    names = rng.sample(sorted(TOKEN_KINDS), rng.randint(1, 8))
    data = [DataSymbol.builtin(n) for n in names]
    data += [DataSymbol(n, rng.choice(KINDS)) for n in rng.sample(GENERIC, rng.randint(0, 2))]
    rng.shuffle(data)
    hormones = [HormoneSymbol(f"EH_{p}") for p in rng.sample(PROCESSORS, rng.randint(0, 3))]
    externals = frozenset(rng.sample(data, rng.randint(0, len(data))))

    def atom():
        roll = rng.random()
        if roll < 0.2:
            return Processor(rng.choice(PROCESSORS))
        if hormones and roll < 0.35:
            h = rng.choice(hormones)
            return Generate(h) if rng.random() < 0.5 else Dissipate(h)
        sym = rng.choice(data)
        return Input(sym) if rng.random() < 0.5 else Output(sym)

    def solution(min_size: int) -> Solution:
        parts = [f"P{i}" for i in range(rng.randint(1, 3))]
        pairs = [
            (rng.choice(parts), molecule(*(atom() for _ in range(rng.randint(1, 5)))))
            for _ in range(rng.randint(min_size, 4))
        ]
        return Solution.from_pairs(pairs)

    rules = tuple(
        ReactionRule(f"R{i}", solution(1), solution(0)) for i in range(rng.randint(0, 4))
    )
    return ChamProgram(tuple(data), tuple(hormones), externals, solution(0), rules)
