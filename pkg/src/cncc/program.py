"""Reaction rules and whole CHAM programs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import DuplicateRule, UnknownRule, UnknownSymbol
from .terms import DataSymbol, HormoneSymbol, Input, Output, Generate, Dissipate, Solution


@dataclass(frozen=True)
class ReactionRule:
    """A ground rewrite ``consumes => produces`` over part-qualified molecules.

    Molecules present on both sides act as catalysts: they must be in the
    solution for the rule to fire but are handed back unchanged. Symbol and
    hormone bookkeeping only looks at the reacting remainder.
    """

    name: str
    consumes: Solution
    produces: Solution = field(default_factory=Solution)

    def __post_init__(self) -> None:
        if not self.consumes:
            raise ValueError(f"rule {self.name} consumes nothing")

    @property
    def reacting(self) -> Solution:
        return self.consumes.truncated_difference(self.produces)

    @property
    def catalysts(self) -> Solution:
        return self.consumes.truncated_difference(self.reacting)

    def _atoms(self, kind):
        for _, m in self.reacting.pairs():
            for atom in m.atoms:
                if isinstance(atom, kind):
                    yield atom

    @property
    def hormones_generated(self) -> Counter:
        return Counter(a.hormone for a in self._atoms(Generate))

    @property
    def hormones_dissipated(self) -> Counter:
        return Counter(a.hormone for a in self._atoms(Dissipate))

    def input_symbols(self) -> list[DataSymbol]:
        return _unique(a.symbol for a in self._atoms(Input))

    def output_symbols(self) -> list[DataSymbol]:
        return _unique(a.symbol for a in self._atoms(Output))

    def parts(self) -> set[str]:
        return set(self.consumes.part_names) | set(self.produces.part_names)


def _unique(items):
    seen = {}
    for item in items:
        seen.setdefault(item, None)
    return list(seen)


@dataclass(frozen=True)
class ChamProgram:
    data_decls: tuple[DataSymbol, ...] = ()
    hormone_decls: tuple[HormoneSymbol, ...] = ()
    externals: frozenset[DataSymbol] = frozenset()
    sub_solutions: Solution = field(default_factory=Solution)
    rules: tuple[ReactionRule, ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for rule in self.rules:
            if rule.name in seen:
                raise DuplicateRule(rule.name)
            seen.add(rule.name)
        data = set(self.data_decls)
        hormones = set(self.hormone_decls)
        for ext in self.externals:
            if ext not in data:
                raise UnknownSymbol(ext.name, what="data symbol")
        solutions = [self.sub_solutions]
        for rule in self.rules:
            solutions.extend([rule.consumes, rule.produces])
        for sol in solutions:
            for _, m in sol.pairs():
                for sym in m.inputs() + m.outputs():
                    if sym not in data:
                        raise UnknownSymbol(sym.name, what="data symbol")
                for h in m.generated() + m.dissipated():
                    if h not in hormones:
                        raise UnknownSymbol(h.name, what="hormone")

    @property
    def rule_names(self) -> list[str]:
        return [r.name for r in self.rules]

    def rule(self, name: str) -> ReactionRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise UnknownRule(name)

    def initial_solution(self) -> Solution:
        return self.sub_solutions

    def data_symbol(self, name: str) -> DataSymbol:
        for sym in self.data_decls:
            if sym.name == name:
                return sym
        raise UnknownSymbol(name, what="data symbol")

    def without_rule(self, name: str) -> ChamProgram:
        self.rule(name)
        return ChamProgram(
            self.data_decls,
            self.hormone_decls,
            self.externals,
            self.sub_solutions,
            tuple(r for r in self.rules if r.name != name),
        )
