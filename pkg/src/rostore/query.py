"""SELECT queries over basic graph patterns: parsing, printing, SQL text.

Grammar::

    query   := prefix* SELECT ('*' | var+) WHERE? '{' pattern ('.' pattern)* '.'? '}'
    prefix  := PREFIX pname ':' <iri>
    term    := ?var | <iri> | pname:local | "literal" | a

``a`` abbreviates rdf:type. The rdf, rdfs, owl and xsd prefixes are
predeclared, and an undeclared empty prefix resolves to the empty string,
so ``:pa`` denotes the IRI ``pa``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence, Union

from .rdf import RDF_TYPE, STANDARD_PREFIXES, IRI, Literal, Term, unescape_literal


class QueryError(ValueError):
    pass


class SparqlSyntaxError(QueryError):
    def __init__(self, position: int, message: str):
        super().__init__(f"syntax error at offset {position}: {message}")
        self.position = position


class UnknownPrefix(QueryError):
    def __init__(self, name: str):
        super().__init__(f"unknown prefix {name!r}")
        self.name = name


class VariablePredicateUnsupported(QueryError):
    pass


class UnboundProjection(QueryError):
    def __init__(self, var: str):
        super().__init__(f"projected variable ?{var} does not occur in any pattern")
        self.var = var


class UnsupportedLayout(QueryError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


PatternTerm = Union[Variable, Term]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: Term
    object: PatternTerm

    @property
    def is_type(self) -> bool:
        return self.predicate.lexical == RDF_TYPE

    def variables(self) -> list[Variable]:
        out = []
        for t in (self.subject, self.object):
            if isinstance(t, Variable) and t not in out:
                out.append(t)
        return out


@dataclass(frozen=True)
class SelectQuery:
    projection: tuple[Variable, ...]
    patterns: tuple[TriplePattern, ...]
    prefixes: Mapping[str, str] = field(default_factory=dict, hash=False)

    def variables(self) -> list[Variable]:
        out: list[Variable] = []
        for tp in self.patterns:
            out.extend(v for v in tp.variables() if v not in out)
        return out

    def with_patterns(self, patterns: Sequence[TriplePattern]) -> "SelectQuery":
        return replace(self, patterns=tuple(patterns))


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>\s]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n\r]|\\[tnr"\\])*")
  | (?P<pname>(?:[A-Za-z_][\w-]*)?:(?:[\w-]+(?:\.[\w-]+)*)?)
  | (?P<word>[A-Za-z]+)
  | (?P<punct>[{}.*])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SparqlSyntaxError(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def keyword(self, word: str) -> bool:
        kind, value, _ = self.peek()
        if kind == "word" and value.upper() == word:
            self.i += 1
            return True
        return False

    def expect(self, kind: str, value: str | None = None):
        tok = self.take()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            raise SparqlSyntaxError(tok[2], f"expected {want!r}, found {tok[1] or 'end of input'!r}")
        return tok

    def parse(self) -> SelectQuery:
        while self.keyword("PREFIX"):
            kind, value, pos = self.take()
            if kind != "pname" or not value.endswith(":"):
                raise SparqlSyntaxError(pos, "expected prefix name ending in ':'")
            iri = self.expect("iri")[1][1:-1]
            self.prefixes[value[:-1]] = iri
        if not self.keyword("SELECT"):
            kind, value, pos = self.peek()
            raise SparqlSyntaxError(pos, "expected SELECT")
        star = False
        projection: list[Variable] = []
        if self.peek()[:2] == ("punct", "*"):
            self.take()
            star = True
        else:
            while self.peek()[0] == "var":
                projection.append(Variable(self.take()[1][1:]))
            if not projection:
                raise SparqlSyntaxError(self.peek()[2], "expected a projection")
        self.keyword("WHERE")
        self.expect("punct", "{")
        patterns = []
        while self.peek()[:2] != ("punct", "}"):
            patterns.append(self.pattern())
            if self.peek()[:2] == ("punct", "."):
                self.take()
            elif self.peek()[:2] != ("punct", "}"):
                raise SparqlSyntaxError(self.peek()[2], "expected '.' or '}'")
        close = self.expect("punct", "}")
        self.expect("eof")
        if not patterns:
            raise SparqlSyntaxError(close[2], "empty group pattern")
        query = SelectQuery(tuple(projection), tuple(patterns), dict(self.prefixes))
        bound = query.variables()
        if star:
            return replace(query, projection=tuple(bound))
        for v in projection:
            if v not in bound:
                raise UnboundProjection(v.name)
        return query

    def pattern(self) -> TriplePattern:
        s_pos = self.peek()[2]
        s = self.term()
        if isinstance(s, Term) and not s.is_iri:
            raise SparqlSyntaxError(s_pos, "literal in subject position")
        kind, value, pos = self.peek()
        if kind == "word" and value == "a":
            self.take()
            p: PatternTerm = IRI(RDF_TYPE)
        else:
            p = self.term()
        if isinstance(p, Variable):
            raise VariablePredicateUnsupported(f"variable predicate {p} at offset {pos}")
        if not p.is_iri:
            raise SparqlSyntaxError(pos, "literal in predicate position")
        o = self.term()
        return TriplePattern(s, p, o)

    def term(self) -> PatternTerm:
        kind, value, pos = self.take()
        if kind == "var":
            return Variable(value[1:])
        if kind == "iri":
            if len(value) == 2:
                raise SparqlSyntaxError(pos, "empty IRI")
            return IRI(value[1:-1])
        if kind == "string":
            return Literal(unescape_literal(value[1:-1]))
        if kind == "pname":
            prefix, local = value.split(":", 1)
            if prefix in self.prefixes:
                base = self.prefixes[prefix]
            elif prefix in STANDARD_PREFIXES:
                base = STANDARD_PREFIXES[prefix]
            elif prefix == "":
                base = ""
            else:
                raise UnknownPrefix(prefix)
            if not base + local:
                raise SparqlSyntaxError(pos, "empty IRI")
            return IRI(base + local)
        raise SparqlSyntaxError(pos, f"unexpected {value or 'end of input'!r}")


def parse_query(text: str) -> SelectQuery:
    return _Parser(text).parse()


def _format_term(t: PatternTerm) -> str:
    if isinstance(t, Variable):
        return str(t)
    return t.n3()


def format_query(q: SelectQuery) -> str:
    lines = [f"PREFIX {name}: <{iri}>" for name, iri in q.prefixes.items()]
    lines.append("SELECT " + " ".join(str(v) for v in q.projection) + " WHERE {")
    for tp in q.patterns:
        lines.append(f"  {_format_term(tp.subject)} {_format_term(tp.predicate)} {_format_term(tp.object)} .")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- SQL text ------------------------------------------------------------------

def _quote(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def _in_or_eq(column: str, values: Sequence[str]) -> str:
    if len(values) == 1:
        return f"{column} = {_quote(values[0])}"
    return f"{column} IN (" + ", ".join(_quote(v) for v in values) + ")"


@dataclass
class _Source:
    relation: str
    # each condition renders itself given a column qualifier such as "pa."
    conditions: list[Callable[[str], str]]


def _cond(column: str, values: Sequence[str]) -> Callable[[str], str]:
    return lambda q: _in_or_eq(q + column, values)


def _nest_union(selects: list[str]) -> str:
    if len(selects) == 1:
        return selects[0]
    return f"{selects[0]} UNION ({_nest_union(selects[1:])})"


def _pattern_sources(i, tp, property_expansion, class_expansion, d) -> list[_Source]:
    from .storage import LayoutKind

    if d.kind is LayoutKind.TRIPLE_TABLE:
        raise UnsupportedLayout("SQL emission is defined for vertical partitioning and roStore only")
    common = []
    if isinstance(tp.subject, Term):
        common.append(_cond("subject", [tp.subject.lexical]))
    if isinstance(tp.subject, Variable) and tp.subject == tp.object:
        common.append(lambda q: f"{q}subject = {q}object")

    if tp.is_type:
        relation = d.relation_for(RDF_TYPE)[0]
        conds = list(common)
        if isinstance(tp.object, Term):
            classes = list(class_expansion.get(i, (tp.object.lexical,)))
            conds.append(_cond("object", classes))
        return [_Source(relation, conds)]

    if isinstance(tp.object, Term):
        common.append(_cond("object", [tp.object.lexical]))
    props = list(property_expansion.get(i, (tp.predicate.lexical,)))
    grouped: dict[str, list[str]] = {}
    for p in props:
        grouped.setdefault(d.relation_for(p)[0], []).append(p)
    sources = []
    for relation, members in grouped.items():
        conds = list(common)
        if d.relations[relation] == 3 and not set(d.members[relation]) <= set(members):
            conds.insert(0, _cond("property", members))
        sources.append(_Source(relation, conds))
    return sources


def emit_sql(
    q: SelectQuery,
    property_expansion: Mapping[int, Sequence[str]],
    class_expansion: Mapping[int, Sequence[str]],
    d,
) -> str:
    """Render a rewritten query as SQL over the relations of layout ``d``.

    Property expansions spanning several relations become right-nested
    UNIONs; subsets of a merged relation become conditions on its property
    column; class expansions become IN lists on the ``type`` relation.
    """
    sources = [
        _pattern_sources(i, tp, property_expansion, class_expansion, d) for i, tp in enumerate(q.patterns)
    ]

    def render_select(columns: str, src: _Source, qualifier: str = "") -> str:
        text = f"SELECT {columns} FROM {src.relation}"
        if src.conditions:
            text += " WHERE " + " AND ".join(c(qualifier) for c in src.conditions)
        return text

    if len(q.patterns) == 1:
        tp = q.patterns[0]
        columns = ", ".join("subject" if tp.subject == v else "object" for v in q.projection)
        return _nest_union([render_select(columns, src) for src in sources[0]]) + ";"

    aliases: list[str] = []
    from_items: list[str] = []
    used: dict[str, int] = {}
    for i, srcs in enumerate(sources):
        if len(srcs) == 1:
            rel = srcs[0].relation
            used[rel] = used.get(rel, 0) + 1
            alias = rel if used[rel] == 1 else f"{rel}_{used[rel]}"
            from_items.append(rel if alias == rel else f"{rel} AS {alias}")
        else:
            alias = f"t{i}"
            union = _nest_union([render_select("subject, object", src) for src in srcs])
            from_items.append(f"({union}) AS {alias}")
        aliases.append(alias)

    first: dict[Variable, str] = {}
    joins: list[str] = []
    for i, tp in enumerate(q.patterns):
        for col, term in (("subject", tp.subject), ("object", tp.object)):
            if not isinstance(term, Variable):
                continue
            ref = f"{aliases[i]}.{col}"
            if term not in first:
                first[term] = ref
            elif not first[term].startswith(aliases[i] + "."):
                joins.append(f"{ref} = {first[term]}")

    filters = []
    for i, srcs in enumerate(sources):
        if len(srcs) == 1:
            filters.extend(c(aliases[i] + ".") for c in srcs[0].conditions)

    columns = ", ".join(first[v] for v in q.projection)
    text = f"SELECT {columns} FROM {', '.join(from_items)}"
    conditions = joins + filters
    if conditions:
        text += " WHERE " + " AND ".join(conditions)
    return text + ";"
