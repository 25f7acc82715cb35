"""Parser and canonical renderer for the ``.cham`` program language.

Grammar::

    program   := decl*
    decl      := "data" NAME ":" KIND ";"
               | "hormone" NAME ("," NAME)* ";"
               | "external" NAME ("," NAME)* ";"
               | "solution" NAME "{" (molecule ";")* "}"
               | "rule" NAME ":" side "=>" side? ";"
    side      := term ("//" term)*
    term      := (NAME ":")? molecule          # unqualified terms go to part "main"
    molecule  := atom ("<>" atom)*
    atom      := PROCESSOR | ("i" | "o") "(" DATA ")" | ("g" | "d") "(" HORMONE ")"

``#`` starts a comment running to end of line. ``◇`` is accepted for ``<>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import (
    ChamSyntaxError,
    DuplicateRule,
    SourceSpan,
    SymbolKindError,
    UnknownSymbol,
)
from .program import ChamProgram, ReactionRule
from .terms import (
    HORMONES,
    KINDS,
    PROCESSORS,
    TOKEN_KINDS,
    DataSymbol,
    Dissipate,
    Generate,
    HormoneSymbol,
    Input,
    Molecule,
    Output,
    Processor,
    Solution,
)

DEFAULT_PART = "main"
HEADER = "# CHAM program (canonical form)"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><>|◇|//|=>|[(){};:,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "name", "op" or "eof"
    text: str
    span: SourceSpan


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ChamSyntaxError(f"unexpected character {text[pos]!r}", SourceSpan(line, col))
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("name", "op"):
                tokens.append(Token(kind, "<>" if value == "◇" else value, SourceSpan(line, col)))
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(line, col)))
    return tokens


# Raw syntax, before names are resolved against declarations.


@dataclass
class _RawAtom:
    head: str  # processor name or connector letter
    arg: Token | None
    span: SourceSpan


@dataclass
class _RawMolecule:
    atoms: list[_RawAtom]


@dataclass
class _RawRule:
    name: Token
    lhs: list[tuple[str, _RawMolecule]]
    rhs: list[tuple[str, _RawMolecule]]


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def expect(self, text: str, opener: Token | None = None) -> Token:
        if self.at(text):
            return self.advance()
        if opener is not None:
            raise ChamSyntaxError(f"unclosed {opener.text!r}: expected {text!r}", opener.span)
        raise ChamSyntaxError(f"expected {text!r}, found {self._describe()}", self.tok.span)

    def expect_name(self, what: str = "a name") -> Token:
        if self.tok.kind == "name":
            return self.advance()
        raise ChamSyntaxError(f"expected {what}, found {self._describe()}", self.tok.span)

    def _describe(self) -> str:
        return "end of input" if self.tok.kind == "eof" else repr(self.tok.text)

    # --- grammar -----------------------------------------------------------

    def molecule(self) -> _RawMolecule:
        atoms = [self.atom()]
        while self.at("<>"):
            self.advance()
            atoms.append(self.atom())
        return _RawMolecule(atoms)

    def atom(self) -> _RawAtom:
        head = self.expect_name("an atom")
        if head.text in ("i", "o", "g", "d") and self.at("("):
            opener = self.advance()
            arg = self.expect_name("a symbol") if self.tok.kind == "name" else None
            if arg is None:
                if self.tok.kind == "eof":
                    raise ChamSyntaxError("unclosed '(': expected a symbol", opener.span)
                raise ChamSyntaxError(f"expected a symbol, found {self._describe()}", self.tok.span)
            self.expect(")", opener)
            return _RawAtom(head.text, arg, head.span)
        return _RawAtom(head.text, None, head.span)

    def term(self) -> tuple[str, _RawMolecule]:
        part = DEFAULT_PART
        if self.tok.kind == "name" and self.peek().kind == "op" and self.peek().text == ":":
            part = self.advance().text
            self.advance()
        return part, self.molecule()

    def side(self) -> list[tuple[str, _RawMolecule]]:
        terms = [self.term()]
        while self.at("//"):
            self.advance()
            terms.append(self.term())
        return terms

    def names(self) -> list[Token]:
        out = [self.expect_name()]
        while self.at(","):
            self.advance()
            out.append(self.expect_name())
        return out

    def parse(self):
        data, hormones, externals, solutions, rules = [], [], [], [], []
        while self.tok.kind != "eof":
            kw = self.expect_name("a declaration")
            if kw.text == "data":
                name = self.expect_name("a data symbol name")
                self.expect(":")
                kind = self.expect_name("a kind")
                if kind.text not in KINDS:
                    raise ChamSyntaxError(
                        f"unknown kind {kind.text!r}, expected one of {', '.join(KINDS)}", kind.span
                    )
                self.expect(";")
                data.append((name, kind))
            elif kw.text == "hormone":
                hormones.extend(self.names())
                self.expect(";")
            elif kw.text == "external":
                externals.extend(self.names())
                self.expect(";")
            elif kw.text == "solution":
                name = self.expect_name("a solution name")
                opener = self.expect("{")
                mols = []
                while not self.at("}"):
                    if self.tok.kind == "eof":
                        raise ChamSyntaxError("unclosed '{'", opener.span)
                    mols.append(self.molecule())
                    if not self.at("}"):
                        self.expect(";")
                self.advance()
                solutions.append((name, mols))
            elif kw.text == "rule":
                name = self.expect_name("a rule name")
                self.expect(":")
                lhs = self.side()
                self.expect("=>")
                rhs = [] if self.at(";") else self.side()
                self.expect(";")
                rules.append(_RawRule(name, lhs, rhs))
            else:
                raise ChamSyntaxError(f"unknown declaration {kw.text!r}", kw.span)
        return data, hormones, externals, solutions, rules


class _Resolver:
    def __init__(self, data: dict[str, DataSymbol], hormones: dict[str, HormoneSymbol]) -> None:
        self.data = data
        self.hormones = hormones

    def atom(self, raw: _RawAtom):
        if raw.arg is None:
            if raw.head not in PROCESSORS:
                raise UnknownSymbol(raw.head, raw.span, what="processing element")
            return Processor(raw.head)
        name, span = raw.arg.text, raw.arg.span
        if raw.head in ("i", "o"):
            if name in self.data:
                sym = self.data[name]
                return Input(sym) if raw.head == "i" else Output(sym)
            if name in self.hormones:
                raise SymbolKindError(f"{name} is a hormone; {raw.head}() takes data symbols only", span)
            raise UnknownSymbol(name, span, what="data symbol")
        if name in self.hormones:
            h = self.hormones[name]
            return Generate(h) if raw.head == "g" else Dissipate(h)
        if name in self.data:
            raise SymbolKindError(f"{name} is a data symbol; {raw.head}() takes hormones only", span)
        raise UnknownSymbol(name, span, what="hormone")

    def molecule(self, raw: _RawMolecule) -> Molecule:
        return Molecule(tuple(self.atom(a) for a in raw.atoms))

    def side(self, terms) -> Solution:
        return Solution.from_pairs((part, self.molecule(m)) for part, m in terms)


def parse_program(text: str) -> ChamProgram:
    data_raw, hormone_raw, ext_raw, sol_raw, rule_raw = _Parser(text).parse()

    data: dict[str, DataSymbol] = {}
    for name, kind in data_raw:
        if name.text in data:
            raise ChamSyntaxError(f"data symbol {name.text!r} declared twice", name.span)
        try:
            data[name.text] = DataSymbol(name.text, kind.text)
        except ValueError as exc:
            raise SymbolKindError(str(exc), kind.span) from None
    hormones: dict[str, HormoneSymbol] = {}
    for tok in hormone_raw:
        if tok.text in hormones or tok.text in data:
            raise ChamSyntaxError(f"symbol {tok.text!r} declared twice", tok.span)
        hormones[tok.text] = HormoneSymbol(tok.text)

    externals = set()
    for tok in ext_raw:
        if tok.text not in data:
            raise UnknownSymbol(tok.text, tok.span, what="data symbol")
        externals.add(data[tok.text])

    resolve = _Resolver(data, hormones)
    parts = Solution.from_pairs(
        (name.text, resolve.molecule(m)) for name, mols in sol_raw for m in mols
    )
    rules, seen = [], set()
    for raw in rule_raw:
        if raw.name.text in seen:
            raise DuplicateRule(raw.name.text, raw.name.span)
        seen.add(raw.name.text)
        rules.append(ReactionRule(raw.name.text, resolve.side(raw.lhs), resolve.side(raw.rhs)))

    return ChamProgram(
        tuple(data.values()),
        tuple(hormones.values()),
        frozenset(externals),
        parts,
        tuple(rules),
    )


def builtin_context() -> ChamProgram:
    """Declarations of the CNCC alphabet, used when no context is given."""
    return ChamProgram(
        tuple(DataSymbol(n, k) for n, k in TOKEN_KINDS.items()),
        tuple(HormoneSymbol(h) for h in HORMONES),
    )


def parse_molecule(text: str, context: ChamProgram | None = None) -> Molecule:
    context = context or builtin_context()
    p = _Parser(text)
    raw = p.molecule()
    if p.tok.kind != "eof":
        raise ChamSyntaxError(f"unexpected {p._describe()} after molecule", p.tok.span)
    resolve = _Resolver(
        {s.name: s for s in context.data_decls}, {h.name: h for h in context.hormone_decls}
    )
    return resolve.molecule(raw)


def parse_solution(text: str, context: ChamProgram | None = None) -> Solution:
    """Parse ``solution`` blocks only, resolving names against ``context``."""
    context = context or builtin_context()
    decls = render_program(
        ChamProgram(context.data_decls, context.hormone_decls)
    )
    return parse_program(decls + "\n" + text).sub_solutions


def _render_side(side: Solution, indent: str) -> str:
    return f"\n{indent}// ".join(f"{part}: {m.render()}" for part, m in side.pairs())


def render_rule(rule: ReactionRule) -> str:
    lines = [f"rule {rule.name}:", "       " + _render_side(rule.consumes, "    ")]
    if rule.produces:
        lines.append("    => " + _render_side(rule.produces, "    ") + ";")
    else:
        lines.append("    => ;")
    return "\n".join(lines)


def render_program(p: ChamProgram) -> str:
    out = [HEADER]
    if p.data_decls:
        out.append("")
        out.extend(f"data {s.name}: {s.kind};" for s in p.data_decls)
    if p.hormone_decls:
        out.append("")
        out.extend(f"hormone {h.name};" for h in p.hormone_decls)
    if p.externals:
        out.append("")
        out.append("external " + ", ".join(sorted(s.name for s in p.externals)) + ";")
    if p.sub_solutions:
        out.append("")
        out.append(p.sub_solutions.render().replace("\n}\n", "\n}\n\n"))
    for rule in p.rules:
        out.append("")
        out.append(render_rule(rule))
    return "\n".join(out) + "\n"
