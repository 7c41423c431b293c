"""RDF terms, triples, datasets and the N-Triples subset used for ingestion.

Only IRIs and plain literals are supported. Blank nodes, datatypes and
language tags are rejected by the parser.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"

RDF_TYPE = RDF + "type"
SUBCLASS_OF = RDFS + "subClassOf"
SUBPROPERTY_OF = RDFS + "subPropertyOf"
DOMAIN = RDFS + "domain"
RANGE = RDFS + "range"
DISJOINT_WITH = OWL + "disjointWith"

STANDARD_PREFIXES = {"rdf": RDF, "rdfs": RDFS, "owl": OWL, "xsd": XSD}


class TermKind(enum.Enum):
    IRI = "iri"
    LITERAL = "literal"


_BAD_IRI_CHARS = re.compile(r"[\s<>]")


@dataclass(frozen=True)
class Term:
    kind: TermKind
    lexical: str

    def __post_init__(self):
        if self.kind is TermKind.IRI:
            if not self.lexical or _BAD_IRI_CHARS.search(self.lexical):
                raise ValueError(f"invalid IRI: {self.lexical!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind is TermKind.IRI

    def n3(self) -> str:
        if self.kind is TermKind.IRI:
            return f"<{self.lexical}>"
        return f'"{escape_literal(self.lexical)}"'

    def __str__(self) -> str:
        return self.n3()

    # TermKind is an Enum and does not order; sort on (lexical, kind name)
    def sort_key(self) -> tuple[str, str]:
        return (self.lexical, self.kind.value)


def IRI(lexical: str) -> Term:
    return Term(TermKind.IRI, lexical)


def Literal(lexical: str) -> Term:
    return Term(TermKind.LITERAL, lexical)


@dataclass(frozen=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if not self.subject.is_iri:
            raise ValueError("triple subject must be an IRI")
        if not self.predicate.is_iri:
            raise ValueError("triple predicate must be an IRI")

    @classmethod
    def of(cls, s: str, p: str, o: str | Term) -> "Triple":
        """Build a triple from IRI strings; a string object is read as an IRI."""
        obj = o if isinstance(o, Term) else IRI(o)
        return cls(IRI(s), IRI(p), obj)

    def sort_key(self):
        return (self.subject.sort_key(), self.predicate.sort_key(), self.object.sort_key())

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


class Dataset:
    """A set of triples. Adding a duplicate is a no-op."""

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: set[Triple] = set(triples)

    def add(self, triple: Triple) -> None:
        self._triples.add(triple)

    def update(self, triples: Iterable[Triple]) -> None:
        self._triples.update(triples)

    def discard(self, triple: Triple) -> None:
        self._triples.discard(triple)

    def __contains__(self, triple) -> bool:
        return triple in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __len__(self) -> int:
        return len(self._triples)

    def __eq__(self, other) -> bool:
        if isinstance(other, Dataset):
            return self._triples == other._triples
        return NotImplemented

    def __repr__(self) -> str:
        return f"Dataset({len(self)} triples)"

    def sorted(self) -> list[Triple]:
        return sorted(self._triples, key=Triple.sort_key)

    def predicates(self) -> set[str]:
        return {t.predicate.lexical for t in self._triples}

    def copy(self) -> "Dataset":
        return Dataset(self._triples)


class MalformedLine(ValueError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", '"': '"', "\\": "\\"}
_ESCAPE_OUT = {v: "\\" + k for k, v in _ESCAPES.items()}

_IRI_TOKEN = r"<([^\s<>]+)>"
_LITERAL_TOKEN = r'"((?:[^"\\\n\r]|\\[tnr"\\])*)"'
_LINE = re.compile(
    rf"^\s*{_IRI_TOKEN}\s+{_IRI_TOKEN}\s+(?:{_IRI_TOKEN}|{_LITERAL_TOKEN})\s*\.\s*$"
)


def escape_literal(text: str) -> str:
    return "".join(_ESCAPE_OUT.get(ch, ch) for ch in text)


def unescape_literal(text: str) -> str:
    return re.sub(r"\\([tnr\"\\])", lambda m: _ESCAPES[m.group(1)], text)


def _diagnose(line: str) -> str:
    stripped = line.strip()
    if not stripped.endswith("."):
        return "missing terminating '.'"
    if stripped.startswith("_:") or " _:" in stripped:
        return "blank nodes are not supported"
    if re.search(r'"\s*(\^\^|@)', stripped):
        return "typed or language-tagged literals are not supported"
    if stripped.startswith('"'):
        return "subject must be an IRI"
    return "expected '<s> <p> <o> .' or '<s> <p> \"o\" .'"


def parse_ntriples(text: str) -> Dataset:
    data = Dataset()
    # split on LF only: str.splitlines also breaks on characters that may
    # legally appear inside literals
    for number, line in enumerate(text.split("\n"), start=1):
        line = line.removesuffix("\r")
        if not line.strip() or line.startswith("#"):
            continue
        m = _LINE.match(line)
        if m is None:
            raise MalformedLine(number, _diagnose(line))
        s, p, o_iri, o_lit = m.groups()
        obj = IRI(o_iri) if o_iri is not None else Literal(unescape_literal(o_lit))
        data.add(Triple(IRI(s), IRI(p), obj))
    return data


def serialize_ntriples(data: Dataset) -> str:
    return "".join(t.n3() + "\n" for t in data.sorted())


class TermDictionary:
    """Dense bijection between terms and integer ids, assigned from 0."""

    def __init__(self):
        self._forward: dict[Term, int] = {}
        self._reverse: list[Term] = []

    def intern(self, term: Term) -> int:
        tid = self._forward.get(term)
        if tid is None:
            tid = len(self._reverse)
            self._forward[term] = tid
            self._reverse.append(term)
        return tid

    def encode(self, term: Term) -> int | None:
        return self._forward.get(term)

    def decode(self, tid: int) -> Term:
        return self._reverse[tid]

    def __len__(self) -> int:
        return len(self._reverse)

    def __contains__(self, term) -> bool:
        return term in self._forward

    def items(self) -> Iterator[tuple[int, Term]]:
        return enumerate(self._reverse)


def intern_dataset(data: Dataset) -> tuple[list[tuple[int, int, int]], TermDictionary]:
    """Encode every triple; terms get ids in sorted-triple order, so the result
    depends only on the dataset contents."""
    dictionary = TermDictionary()
    encoded = [
        (dictionary.intern(t.subject), dictionary.intern(t.predicate), dictionary.intern(t.object))
        for t in data.sorted()
    ]
    return encoded, dictionary


def local_name(iri: str) -> str:
    for sep in ("#", "/", ":"):
        if sep in iri:
            tail = iri.rsplit(sep, 1)[1]
            if tail:
                return tail
    return iri
