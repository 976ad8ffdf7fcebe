"""Readers for ground ASP text, DIMACS CNF and query lists."""

from __future__ import annotations

import re
from enum import Enum

from .program import BOTTOM, BOTTOM_NAMES, AtomTable, Program, ReservedNameError, Rule


class SourceFormat(Enum):
    ASP = "asp"
    DIMACS = "dimacs"


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_DIMACS_HEADER = re.compile(r"p\s+cnf\s+(-?\d+)\s+(-?\d+)\s*$")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.line_start = 0

    @property
    def column(self) -> int:
        return self.pos - self.line_start + 1

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.column)

    def skip_space(self) -> None:
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == "\n":
                self.pos += 1
                self.line += 1
                self.line_start = self.pos
            elif ch.isspace():
                self.pos += 1
            elif ch == "%":
                end = text.find("\n", self.pos)
                self.pos = len(text) if end < 0 else end
            else:
                break

    def at_end(self) -> bool:
        self.skip_space()
        return self.pos >= len(self.text)

    def peek(self, token: str) -> bool:
        self.skip_space()
        return self.text.startswith(token, self.pos)

    def expect(self, token: str) -> None:
        if not self.peek(token):
            raise self.error(f"expected {token!r}")
        self.pos += len(token)

    def keyword_not(self) -> bool:
        """Consume ``not`` when it is a keyword, not a prefix of a name."""
        self.skip_space()
        m = _NAME.match(self.text, self.pos)
        if m and m.group() == "not" and not self.text.startswith("(", m.end()):
            self.pos = m.end()
            return True
        return False

    def atom(self) -> str:
        self.skip_space()
        m = _NAME.match(self.text, self.pos)
        if not m:
            raise self.error("expected an atom")
        self.pos = m.end()
        parts = [m.group()]
        if self.pos < len(self.text) and self.text[self.pos] == "(":
            parts.append(self._arguments())
        return "".join(parts)

    def _arguments(self) -> str:
        # balanced parentheses, kept verbatim minus whitespace
        depth = 0
        out = []
        start_line, start_col = self.line, self.column
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "\n":
                break
            self.pos += 1
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            if not ch.isspace():
                out.append(ch)
            if depth == 0:
                if len(out) == 2:
                    raise ParseError("empty argument list", start_line, start_col)
                return "".join(out)
        raise ParseError("unbalanced parenthesis", start_line, start_col)


def _literal(lex: _Lexer) -> tuple[bool, str]:
    negated = lex.keyword_not()
    if negated:
        lex.skip_space()
        line, col = lex.line, lex.column
        if lex.keyword_not():
            raise ParseError("nested negation is not supported", line, col)
    name = lex.atom()
    if name == "not":
        raise lex.error("'not' cannot be used as an atom")
    return negated, name


def parse_asp(text: str) -> Program:
    """Parse ``head :- lit, ..., lit.`` statements into a :class:`Program`."""
    lex = _Lexer(text)
    table = AtomTable()
    rules: list[Rule] = []
    while not lex.at_end():
        head = BOTTOM
        if not lex.peek(":-"):
            line, col = lex.line, lex.column
            name = lex.atom()
            if name == "not":
                raise ParseError("a rule head cannot be negated", line, col)
            head = table.intern(name)
        pos: list[int] = []
        neg: list[int] = []
        if lex.peek(":-"):
            lex.expect(":-")
            if not lex.peek("."):
                while True:
                    negated, name = _literal(lex)
                    (neg if negated else pos).append(table.intern(name))
                    if not lex.peek(","):
                        break
                    lex.expect(",")
        elif head == BOTTOM:
            raise lex.error("expected a rule")
        lex.expect(".")
        rules.append(Rule(head, tuple(pos), tuple(neg)))
    return Program(tuple(rules), table)


def parse_dimacs(text: str) -> Program:
    """Encode a CNF as a program whose stable models are its classical models.

    Variable ``i`` becomes the pair ``t<i> :- not f<i>.  f<i> :- not t<i>.``
    and each clause forbids all of its literals being false.
    """
    header: tuple[int, int] | None = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if header is None:
            m = _DIMACS_HEADER.match(line)
            if not m:
                raise ParseError("expected 'p cnf <vars> <clauses>'", lineno, 1)
            nvars, nclauses = int(m.group(1)), int(m.group(2))
            if nvars < 0 or nclauses < 0:
                raise ParseError("negative count in header", lineno, 1)
            header = (nvars, nclauses)
            continue
        if line.startswith("p"):
            raise ParseError("duplicate header", lineno, 1)
        for m in re.finditer(r"\S+", line):
            try:
                lit = int(m.group())
            except ValueError:
                raise ParseError(f"bad literal {m.group()!r}", lineno, m.start() + 1) from None
            if lit == 0:
                clauses.append(current)
                current = []
            elif abs(lit) > header[0]:
                raise ParseError(f"literal {lit} out of range", lineno, m.start() + 1)
            else:
                current.append(lit)
    if header is None:
        raise ParseError("missing 'p cnf' header", 1, 1)
    if current:
        clauses.append(current)
    nvars, nclauses = header
    if len(clauses) != nclauses:
        raise ParseError(f"header announces {nclauses} clauses, found {len(clauses)}", 1, 1)

    table = AtomTable()
    t = [0] * (nvars + 1)
    f = [0] * (nvars + 1)
    for i in range(1, nvars + 1):
        t[i] = table.intern(f"t{i}")
        f[i] = table.intern(f"f{i}")
    rules = []
    for i in range(1, nvars + 1):
        rules.append(Rule(t[i], (), (f[i],)))
        rules.append(Rule(f[i], (), (t[i],)))
    for clause in clauses:
        lits = set(clause)
        if any(-l in lits for l in lits):
            continue
        body = []
        for lit in dict.fromkeys(clause):
            body.append(f[lit] if lit > 0 else t[-lit])
        rules.append(Rule(BOTTOM, tuple(body), ()))
    return Program(tuple(rules), table, frozenset(table))


def parse_query(text: str, program: Program) -> frozenset[int]:
    """Read one atom name per line and intern each against ``program``."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if line in BOTTOM_NAMES:
            raise ParseError("the false atom cannot be queried", lineno, 1)
        lex = _Lexer(line)
        try:
            name = lex.atom()
        except ParseError as e:
            raise ParseError(e.message, lineno, e.column) from None
        if not lex.at_end():
            raise ParseError("trailing characters after atom", lineno, lex.column)
        try:
            out.append(program.atoms.intern(name))
        except ReservedNameError as e:
            raise ParseError(str(e), lineno, 1) from None
    return frozenset(out)


def detect_format(text: str) -> SourceFormat:
    """DIMACS when a ``p cnf`` header precedes any non-comment line."""
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if _DIMACS_HEADER.match(line):
            return SourceFormat.DIMACS
        if line == "c" or (line.startswith("c ") and not line.endswith(".")):
            continue
        return SourceFormat.ASP
    return SourceFormat.ASP


def parse(text: str, fmt: SourceFormat | None = None) -> Program:
    fmt = fmt or detect_format(text)
    return parse_dimacs(text) if fmt is SourceFormat.DIMACS else parse_asp(text)
