"""CHAM term algebra: atoms, molecules (``<>``) and solutions (``//``)."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

KINDS = ("matrix", "vector", "parameter", "set")

# Token types of the CNCC data alphabet. Mi is the media input and Ma the
# temporal DNN increment. Mn, the attention increment, is part of the alphabet.
TOKEN_KINDS: dict[str, str] = {
    "Mi": "matrix",
    "Sa": "matrix",
    "Sv": "matrix",
    "Fa": "matrix",
    "Fv": "matrix",
    "Ma": "matrix",
    "Mv": "matrix",
    "Ms": "vector",
    "Mt": "vector",
    "Mp": "vector",
    "Mn": "vector",
    "Ei": "parameter",
    "Es": "parameter",
    "Cs": "vector",
    "Ct": "vector",
    "Cp": "set",
    "EH": "set",
}

PROCESSORS = ("SC", "DL", "CC", "EL", "RL", "IL")
HORMONES = ("EH_SC", "EH_DL", "EH_RL", "EH_IL", "EH_CC", "EH_EL")


@dataclass(frozen=True, slots=True)
class DataSymbol:
    name: str
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r} for data symbol {self.name}")
        expected = TOKEN_KINDS.get(self.name)
        if expected is not None and expected != self.kind:
            raise ValueError(f"data symbol {self.name} must be a {expected}, not {self.kind}")

    @classmethod
    def builtin(cls, name: str) -> DataSymbol:
        return cls(name, TOKEN_KINDS[name])


@dataclass(frozen=True, slots=True)
class HormoneSymbol:
    name: str


# Atoms. Each renders to its DSL spelling.


@dataclass(frozen=True, slots=True)
class Processor:
    name: str

    def __post_init__(self) -> None:
        if self.name not in PROCESSORS:
            raise ValueError(f"unknown processing element {self.name!r}")

    def render(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Input:
    symbol: DataSymbol

    def render(self) -> str:
        return f"i({self.symbol.name})"


@dataclass(frozen=True, slots=True)
class Output:
    symbol: DataSymbol

    def render(self) -> str:
        return f"o({self.symbol.name})"


@dataclass(frozen=True, slots=True)
class Generate:
    hormone: HormoneSymbol

    def render(self) -> str:
        return f"g({self.hormone.name})"


@dataclass(frozen=True, slots=True)
class Dissipate:
    hormone: HormoneSymbol

    def render(self) -> str:
        return f"d({self.hormone.name})"


Atom = Processor | Input | Output | Generate | Dissipate


@dataclass(frozen=True, slots=True)
class Molecule:
    """A flattened ``<>`` chain of atoms. Order matters, nesting does not."""

    atoms: tuple[Atom, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("a molecule needs at least one atom")
        for atom in self.atoms:
            if isinstance(atom, (Input, Output)) and not isinstance(atom.symbol, DataSymbol):
                raise TypeError(f"{type(atom).__name__} wraps data symbols only")
            if isinstance(atom, (Generate, Dissipate)) and not isinstance(atom.hormone, HormoneSymbol):
                raise TypeError(f"{type(atom).__name__} wraps hormone symbols only")

    def __len__(self) -> int:
        return len(self.atoms)

    def render(self) -> str:
        return " <> ".join(atom.render() for atom in self.atoms)

    def __str__(self) -> str:
        return self.render()

    def inputs(self) -> list[DataSymbol]:
        return [a.symbol for a in self.atoms if isinstance(a, Input)]

    def outputs(self) -> list[DataSymbol]:
        return [a.symbol for a in self.atoms if isinstance(a, Output)]

    def generated(self) -> list[HormoneSymbol]:
        return [a.hormone for a in self.atoms if isinstance(a, Generate)]

    def dissipated(self) -> list[HormoneSymbol]:
        return [a.hormone for a in self.atoms if isinstance(a, Dissipate)]


def molecule(*atoms: Atom) -> Molecule:
    return Molecule(tuple(atoms))


def compose(a: Molecule, b: Molecule) -> Molecule:
    """The ``<>`` operator: associative, not commutative."""
    return Molecule(a.atoms + b.atoms)


def _molecule_key(m: Molecule) -> str:
    return m.render()


class Solution:
    """An immutable multiset of molecules split into named sub-solutions.

    Parts compose with ``//`` (:func:`solution_union`), which is associative and
    commutative. Empty parts are dropped, so a solution with no molecules is the
    union identity.
    """

    __slots__ = ("_parts", "_key")

    def __init__(self, parts: Mapping[str, Iterable[Molecule] | Mapping[Molecule, int]] | None = None):
        normalized: dict[str, Counter] = {}
        for name, body in (parts or {}).items():
            counts = Counter(body) if not isinstance(body, Mapping) else Counter(dict(body))
            counts = Counter({m: n for m, n in counts.items() if n > 0})
            for m in counts:
                if not isinstance(m, Molecule):
                    raise TypeError(f"part {name} holds a non-molecule: {m!r}")
            if counts:
                normalized[name] = counts
        self._parts = normalized
        self._key = tuple(
            (name, tuple(sorted(((_molecule_key(m), n) for m, n in counts.items()))))
            for name, counts in sorted(normalized.items())
        )

    @classmethod
    def of(cls, **parts: Iterable[Molecule]) -> Solution:
        return cls(parts)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, Molecule]]) -> Solution:
        parts: dict[str, list[Molecule]] = {}
        for name, m in pairs:
            parts.setdefault(name, []).append(m)
        return cls(parts)

    # --- queries -----------------------------------------------------------

    @property
    def part_names(self) -> list[str]:
        return sorted(self._parts)

    def part(self, name: str) -> Counter:
        return Counter(self._parts.get(name, {}))

    def pairs(self) -> Iterator[tuple[str, Molecule]]:
        """Every (part, molecule) occurrence in canonical order, with repeats."""
        for name in self.part_names:
            counts = self._parts[name]
            for m in sorted(counts, key=_molecule_key):
                for _ in range(counts[m]):
                    yield name, m

    def __len__(self) -> int:
        return sum(sum(c.values()) for c in self._parts.values())

    def __bool__(self) -> bool:
        return bool(self._parts)

    def count(self, part: str, m: Molecule) -> int:
        return self._parts.get(part, Counter())[m]

    def contains(self, other: Solution) -> bool:
        """Multiset inclusion, part by part."""
        for name, counts in other._parts.items():
            mine = self._parts.get(name)
            if mine is None:
                return False
            for m, n in counts.items():
                if mine[m] < n:
                    return False
        return True

    # --- algebra -----------------------------------------------------------

    def union(self, other: Solution) -> Solution:
        merged: dict[str, Counter] = {name: Counter(c) for name, c in self._parts.items()}
        for name, counts in other._parts.items():
            merged.setdefault(name, Counter()).update(counts)
        return Solution(merged)

    def __or__(self, other: Solution) -> Solution:
        return self.union(other)

    def difference(self, other: Solution) -> Solution:
        """Multiset difference; raises if ``other`` is not contained."""
        if not self.contains(other):
            raise ValueError("cannot remove molecules that are not present")
        out: dict[str, Counter] = {name: Counter(c) for name, c in self._parts.items()}
        for name, counts in other._parts.items():
            out[name].subtract(counts)
        return Solution(out)

    def truncated_difference(self, other: Solution) -> Solution:
        """Multiset difference with counts floored at zero."""
        out: dict[str, Counter] = {name: Counter(c) for name, c in self._parts.items()}
        for name, counts in other._parts.items():
            if name in out:
                out[name].subtract(counts)
        return Solution(out)

    # --- identity ----------------------------------------------------------

    def key(self) -> str:
        """One-line canonical serialization, injective on solutions."""
        chunks = []
        for name, body in self._key:
            mols = "; ".join(text for text, n in body for _ in range(n))
            chunks.append(f"{name} {{ {mols} }}")
        return " // ".join(chunks)

    def render(self) -> str:
        """Canonical multi-line DSL text (``solution NAME { ... }`` blocks)."""
        blocks = []
        for name, body in self._key:
            lines = [f"solution {name} {{"]
            lines.extend(f"    {text};" for text, n in body for _ in range(n))
            lines.append("}")
            blocks.append("\n".join(lines))
        return "\n".join(blocks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Solution):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Solution({self.key()!r})"


EMPTY = Solution()


def solution_union(s1: Solution, s2: Solution) -> Solution:
    return s1.union(s2)


def multiset_equal(s1: Solution, s2: Solution) -> bool:
    return s1 == s2
