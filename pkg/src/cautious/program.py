"""Ground normal programs, interpretations and estimates.

Atoms are interned to dense integer ids.  Id 0 is the false atom, so a
constraint is simply a rule whose head is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

BOTTOM = 0
BOTTOM_NAMES = frozenset({"⊥", "#false"})

Interpretation = frozenset


class ReservedNameError(ValueError):
    pass


class AtomTable:
    """Append-only bijection between atom names and dense ids."""

    def __init__(self, names: Iterable[str] = ()):
        self._names: list[str] = ["⊥"]
        self._ids: dict[str, int] = {}
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        if not name:
            raise ValueError("empty atom name")
        if name in BOTTOM_NAMES:
            raise ReservedNameError(f"{name!r} is reserved for the false atom")
        atom = self._ids.get(name)
        if atom is None:
            atom = len(self._names)
            self._names.append(name)
            self._ids[name] = atom
        return atom

    def lookup(self, name: str) -> int | None:
        return self._ids.get(name)

    def name(self, atom: int) -> str:
        return self._names[atom]

    def __len__(self) -> int:
        # number of non-bottom atoms
        return len(self._names) - 1

    def __contains__(self, name: object) -> bool:
        return name in self._ids

    def __iter__(self) -> Iterator[int]:
        return iter(range(1, len(self._names)))


@dataclass(frozen=True)
class Rule:
    head: int
    pos: tuple[int, ...] = ()
    neg: tuple[int, ...] = ()

    @property
    def is_constraint(self) -> bool:
        return self.head == BOTTOM

    def atoms(self) -> set[int]:
        out = set(self.pos) | set(self.neg)
        if self.head != BOTTOM:
            out.add(self.head)
        return out


@dataclass(frozen=True)
class Program:
    """A ground normal program.

    ``query`` is ``None`` until a query is attached; :meth:`query_atoms`
    falls back to every atom of the program.
    """

    rules: tuple[Rule, ...]
    atoms: AtomTable
    query: frozenset[int] | None = None

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def name(self, atom: int) -> str:
        return self.atoms.name(atom)

    def names(self, atoms: Iterable[int]) -> list[str]:
        return [self.atoms.name(a) for a in sorted(atoms)]

    def atom_ids(self, names: Iterable[str]) -> frozenset[int]:
        out = []
        for n in names:
            a = self.atoms.lookup(n)
            if a is None:
                raise KeyError(n)
            out.append(a)
        return frozenset(out)

    def query_atoms(self) -> frozenset[int]:
        if self.query is not None:
            return self.query
        return frozenset(self.atoms)

    def with_query(self, query: Iterable[int]) -> Program:
        q = frozenset(query)
        if BOTTOM in q:
            raise ReservedNameError("the false atom cannot be queried")
        return Program(self.rules, self.atoms, q)


@dataclass
class Estimates:
    under: set[int] = field(default_factory=set)
    over: set[int] = field(default_factory=set)

    @property
    def settled(self) -> bool:
        return self.under == self.over


def models(interpretation: Iterable[int], rule: Rule) -> bool:
    """True iff the interpretation satisfies the rule."""
    i = interpretation if isinstance(interpretation, (set, frozenset)) else set(interpretation)
    if rule.head != BOTTOM and rule.head in i:
        return True
    if any(a not in i for a in rule.pos):
        return True
    return any(a in i for a in rule.neg)


def format_rule(rule: Rule, table: AtomTable) -> str:
    body = [table.name(a) for a in rule.pos] + ["not " + table.name(a) for a in rule.neg]
    head = "" if rule.is_constraint else table.name(rule.head)
    if not body:
        return f"{head}." if head else ":- ."
    return f"{head} :- {', '.join(body)}." if head else f":- {', '.join(body)}."


def format_program(program: Program) -> str:
    return "".join(format_rule(r, program.atoms) + "\n" for r in program.rules)
