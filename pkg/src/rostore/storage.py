"""Physical layouts for triples and the relations that hold them.

Three layouts are supported: a single triple table, one two-column relation
per predicate (vertical partitioning), and the roStore layout where every
predicate under a top-property shares one three-column relation.

Relations are kept sorted on their clustering key: (subject, object) for
two-column relations and (property, subject, object) for three-column ones.
Row orientation stores a row-major table plus secondary access paths sorted
by subject and by object. Column orientation stores one array per column and
has no secondary paths, so scans that cannot use the clustering key read the
whole relation.
"""

from __future__ import annotations

import enum
import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Literal as Lit

import numpy as np

from .ontology import CanonicalMap, Ontology, ensure_canonical, subsumption_closure, top_assignment, top_properties
from .rdf import (
    RDF_TYPE,
    Dataset,
    Term,
    TermDictionary,
    TermKind,
    Triple,
    escape_literal,
    intern_dataset,
    local_name,
    unescape_literal,
)

TYPE_RELATION = "type"
TRIPLE_RELATION = "triples"

MAGIC = b"ROST"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHQ")

Position = Lit["subject", "object"]


class LayoutKind(enum.Enum):
    TRIPLE_TABLE = "triple"
    VERTICAL_PARTITION = "vp"
    RO_STORE = "ro"


class Orientation(enum.Enum):
    ROW = "row"
    COLUMN = "column"


class StorageError(Exception):
    pass


class UnknownPredicate(StorageError):
    def __init__(self, predicate: str):
        super().__init__(f"no relation for predicate {predicate}")
        self.predicate = predicate


class NoSuchRelation(StorageError):
    pass


class FilterOnTwoColumnRelation(StorageError):
    pass


@dataclass
class LayoutDescriptor:
    kind: LayoutKind
    relation_of: dict[str, tuple[str, int]]
    relations: dict[str, int]
    canonical: CanonicalMap
    # relation name -> canonical predicates stored in it
    members: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def relation_for(self, predicate: str) -> tuple[str, int]:
        entry = self.relation_of.get(predicate) or self.relation_of.get(self.canonical.resolve(predicate))
        if entry is None:
            raise UnknownPredicate(predicate)
        return entry


def _relation_name(iri: str, taken: set[str]) -> str:
    base = re.sub(r"\W", "_", local_name(iri)) or "p"
    if base[0].isdigit():
        base = "p_" + base
    name, n = base, 2
    while name in taken:
        name = f"{base}_{n}"
        n += 1
    taken.add(name)
    return name


def build_layout(o: Ontology, data_predicates: Iterable[str], kind: LayoutKind) -> LayoutDescriptor:
    o = ensure_canonical(o)
    cmap = o.canonical
    originals = set(data_predicates) | set(cmap) | o.properties()
    # rdf:type gets a relation like any other predicate: when the data uses it
    # or the ontology has classes a query could test for
    typed = RDF_TYPE in originals or bool(o.classes())
    originals.discard(RDF_TYPE)
    preds = sorted({o.resolve(p) for p in originals})

    relations: dict[str, int] = {}
    members: dict[str, tuple[str, ...]] = {}
    home: dict[str, str] = {}

    if kind is LayoutKind.TRIPLE_TABLE:
        relations[TRIPLE_RELATION] = 3
        members[TRIPLE_RELATION] = tuple(sorted([*preds, RDF_TYPE]))
        home = {p: TRIPLE_RELATION for p in preds}
        home[RDF_TYPE] = TRIPLE_RELATION
    else:
        taken = {TYPE_RELATION}
        if typed:
            relations[TYPE_RELATION] = 2
            members[TYPE_RELATION] = (RDF_TYPE,)
            home[RDF_TYPE] = TYPE_RELATION
        if kind is LayoutKind.VERTICAL_PARTITION:
            for p in preds:
                name = _relation_name(p, taken)
                relations[name] = 2
                members[name] = (p,)
                home[p] = name
        else:
            assigned = top_assignment(o, preds)
            for top in sorted(top_properties(o, preds)):
                name = _relation_name(top, taken)
                closure = subsumption_closure(o, "property", top, "sub")
                relations[name] = 3 if len(closure) > 1 else 2
                members[name] = tuple(p for p in preds if assigned[p] == top)
                for p in members[name]:
                    home[p] = name

    relation_of = {p: (home[p], relations[home[p]]) for p in [*preds, RDF_TYPE] if p in home}
    for p in originals:
        relation_of.setdefault(p, relation_of[o.resolve(p)])
    return LayoutDescriptor(kind, relation_of, relations, cmap, members)


class Relation:
    """A sorted set of id tuples; physical columns are subject, object[, property]."""

    def __init__(self, name: str, arity: int, rows: Iterable[tuple[int, ...]], orientation: Orientation):
        self.name = name
        self.arity = arity
        self.orientation = orientation
        data = np.array(sorted(set(rows)), dtype=np.int64).reshape(-1, arity)
        if arity == 3:
            order = np.lexsort((data[:, 1], data[:, 0], data[:, 2]))
        else:
            order = np.lexsort((data[:, 1], data[:, 0]))
        data = data[order]
        self._init_storage(data)

    @classmethod
    def from_sorted(cls, name: str, arity: int, data: np.ndarray, orientation: Orientation) -> "Relation":
        rel = cls.__new__(cls)
        rel.name, rel.arity, rel.orientation = name, arity, orientation
        rel._init_storage(data)
        return rel

    def _init_storage(self, data: np.ndarray) -> None:
        self._n = len(data)
        if self.orientation is Orientation.ROW:
            self.table = np.ascontiguousarray(data)
            self.columns = None
            s, o = data[:, 0], data[:, 1]
            if self.arity == 2:
                self.by_object = np.lexsort((s, o))
                self.by_subject = None
            else:
                p = data[:, 2]
                self.by_subject = np.lexsort((p, o, s))
                self.by_object = np.lexsort((p, s, o))
        else:
            self.table = None
            self.columns = [np.ascontiguousarray(data[:, i]) for i in range(self.arity)]
            self.by_subject = self.by_object = None

    def column(self, i: int) -> np.ndarray:
        return self.table[:, i] if self.table is not None else self.columns[i]

    def __len__(self) -> int:
        return self._n

    def gather(self, positions: np.ndarray) -> list[tuple[int, ...]]:
        if self.table is not None:
            return list(map(tuple, self.table[positions].tolist()))
        return list(zip(*(c[positions].tolist() for c in self.columns)))

    @property
    def rows(self) -> set[tuple[int, ...]]:
        return set(self.gather(np.arange(self._n)))

    def to_array(self) -> np.ndarray:
        if self.table is not None:
            return self.table
        return np.stack(self.columns, axis=1) if self._n else np.zeros((0, self.arity), dtype=np.int64)


@dataclass
class StoreInstance:
    descriptor: LayoutDescriptor
    orientation: Orientation
    relations: dict[str, Relation]
    dictionary: TermDictionary
    touched_rows: int = 0
    scans: int = 0

    def relation_predicate(self, name: str) -> str:
        members = self.descriptor.members[name]
        if self.descriptor.relations[name] != 2 or len(members) != 1:
            raise ValueError(f"relation {name} does not hold a single predicate")
        return members[0]

    def decoded_triples(self) -> Dataset:
        """Every stored tuple as a triple, restoring the predicate."""
        decode = self.dictionary.decode
        out = Dataset()
        for name, rel in self.relations.items():
            if rel.arity == 3:
                for s, o, p in rel.rows:
                    out.add(Triple(decode(s), decode(p), decode(o)))
            elif len(self.descriptor.members[name]) == 1:
                pred = Term(TermKind.IRI, self.relation_predicate(name))
                for s, o in rel.rows:
                    out.add(Triple(decode(s), pred, decode(o)))
        return out

    def reset_counters(self) -> None:
        self.touched_rows = 0
        self.scans = 0


def canonicalize_dataset(data: Dataset, cmap: CanonicalMap) -> Dataset:
    out = Dataset()
    for t in data:
        p = cmap.resolve(t.predicate.lexical)
        if p != t.predicate.lexical:
            t = Triple(t.subject, Term(TermKind.IRI, p), t.object)
        out.add(t)
    return out


def load_store(data: Dataset, d: LayoutDescriptor, orientation: Orientation) -> StoreInstance:
    for p in sorted(data.predicates()):
        d.relation_for(p)
    canon = canonicalize_dataset(data, d.canonical)
    encoded, dictionary = intern_dataset(canon)
    buckets: dict[str, list[tuple[int, ...]]] = {name: [] for name in d.relations}
    decode = dictionary.decode
    route: dict[int, tuple[str, int]] = {}
    for s, p, o in encoded:
        if p not in route:
            route[p] = d.relation_for(decode(p).lexical)
        name, arity = route[p]
        buckets[name].append((s, o, p) if arity == 3 else (s, o))
    relations = {
        name: Relation(name, d.relations[name], rows, orientation) for name, rows in buckets.items()
    }
    return StoreInstance(d, orientation, relations, dictionary)


class ScanCursor:
    """Rows selected by one scan, plus the number of stored rows it had to read."""

    def __init__(self, relation: Relation, positions: np.ndarray, touched: int):
        self.relation = relation
        self.positions = positions
        self.touched = touched

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.gather())

    def gather(self) -> list[tuple[int, ...]]:
        return self.relation.gather(self.positions)

    def __len__(self) -> int:
        return len(self.positions)


def _eq_range(sorted_values: np.ndarray, value: int, lo: int = 0, hi: int | None = None) -> tuple[int, int]:
    hi = len(sorted_values) if hi is None else hi
    window = sorted_values[lo:hi]
    return lo + int(np.searchsorted(window, value, "left")), lo + int(np.searchsorted(window, value, "right"))


def _index_ranges(perm: np.ndarray, keys: np.ndarray, values: Iterable[int]) -> np.ndarray:
    sorted_keys = keys[perm]
    pieces = []
    for v in values:
        lo, hi = _eq_range(sorted_keys, v)
        pieces.append(perm[lo:hi])
    return np.concatenate(pieces) if pieces else np.zeros(0, dtype=np.int64)


def _resolve_ids(store: StoreInstance, terms: Iterable[Term | str]) -> list[int]:
    ids = set()
    for t in terms:
        term = t if isinstance(t, Term) else Term(TermKind.IRI, t)
        tid = store.dictionary.encode(term)
        if tid is not None:
            ids.add(tid)
    return sorted(ids)


def scan_relation(
    store: StoreInstance,
    relation: str,
    property_filter: Iterable[str] | None = None,
    bound: tuple[Position, int] | None = None,
    object_in: Iterable[Term | str] | None = None,
) -> ScanCursor:
    """Select rows from one relation using the cheapest available access path.

    ``bound`` fixes one column to a term id. ``object_in`` restricts the object
    column to a set of terms. The cursor's ``touched`` count is the number of
    stored rows the access path had to read.
    """
    rel = store.relations.get(relation)
    if rel is None:
        raise NoSuchRelation(relation)
    if property_filter is not None and rel.arity != 3:
        raise FilterOnTwoColumnRelation(relation)

    n = len(rel)
    row = rel.orientation is Orientation.ROW
    s_col, o_col = rel.column(0), rel.column(1)
    bound_pos, bound_id = bound if bound is not None else (None, None)
    obj_ids = _resolve_ids(store, object_in) if object_in is not None else None

    if property_filter is not None:
        pieces, touched = [], 0
        p_col = rel.column(2)
        for pid in _resolve_ids(store, property_filter):
            lo, hi = _eq_range(p_col, pid)
            if bound_pos == "subject":
                lo, hi = _eq_range(s_col, bound_id, lo, hi)
            touched += hi - lo
            pieces.append(np.arange(lo, hi))
        idx = np.concatenate(pieces) if pieces else np.zeros(0, dtype=np.int64)
        if bound_pos == "object":
            idx = idx[o_col[idx] == bound_id]
    elif rel.arity == 2 and bound_pos == "subject":
        lo, hi = _eq_range(s_col, bound_id)
        idx, touched = np.arange(lo, hi), hi - lo
    elif bound_pos == "subject" and row:
        idx = _index_ranges(rel.by_subject, s_col, [bound_id])
        touched = len(idx)
    elif bound_pos == "object" and row:
        idx = _index_ranges(rel.by_object, o_col, [bound_id])
        touched = len(idx)
    elif bound_pos is None and obj_ids is not None and row:
        idx = _index_ranges(rel.by_object, o_col, obj_ids)
        touched = len(idx)
        obj_ids = None
    else:
        touched = n
        mask = np.ones(n, dtype=bool)
        if bound_pos == "subject":
            mask &= s_col == bound_id
        elif bound_pos == "object":
            mask &= o_col == bound_id
        idx = np.nonzero(mask)[0]

    if obj_ids is not None:
        idx = idx[np.isin(o_col[idx], obj_ids)]
    store.touched_rows += touched
    store.scans += 1
    return ScanCursor(rel, idx, touched)


def scan_order(
    arity: int,
    orientation: Orientation,
    n_properties: int | None,
    bound_pos: Position | None,
    n_object_in: int | None,
) -> Position | None:
    """The column a scan's output is guaranteed to be ascending on, if any.

    Mirrors the access paths chosen by scan_relation; used by the planner to
    decide where merge joins are admissible.
    """
    row = orientation is Orientation.ROW
    if arity == 3 and n_properties is not None:
        if n_properties != 1:
            return None
        return "object" if bound_pos == "subject" else "subject"
    if arity == 2:
        if bound_pos == "subject":
            return "object"
        if bound_pos == "object":
            return "subject"
        if n_object_in is not None and row:
            return "subject" if n_object_in == 1 else None
        return "subject"
    # three columns, no property filter
    if not row:
        return None
    if bound_pos == "subject":
        return "object"
    if bound_pos == "object":
        return "subject"
    if n_object_in is not None:
        return "subject" if n_object_in == 1 else None
    return None


# -- persistence -------------------------------------------------------------

def _file_for(name: str) -> str:
    return f"rel_{name}.bin"


def save_store(store: StoreInstance, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    d = store.descriptor
    with open(path / "dictionary.tsv", "w", encoding="utf-8") as fh:
        for tid, term in store.dictionary.items():
            fh.write(f"{tid}\t{escape_literal(term.lexical)}\t{term.kind.value}\n")
    for name, rel in store.relations.items():
        data = rel.to_array().astype("<u8")
        payload = data.tobytes(order="C" if store.orientation is Orientation.ROW else "F")
        with open(path / _file_for(name), "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, rel.arity, len(rel)))
            fh.write(payload)
    manifest = {
        "format": "rostore",
        "version": FORMAT_VERSION,
        "kind": d.kind.value,
        "orientation": store.orientation.value,
        "relations": [
            {"name": name, "arity": d.relations[name], "rows": len(store.relations[name]),
             "file": _file_for(name), "members": list(d.members[name])}
            for name in sorted(d.relations)
        ],
        "relation_of": {p: d.relation_of[p][0] for p in sorted(d.relation_of)},
        "canonical": dict(sorted(d.canonical.items())),
    }
    (path / "layout.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def open_store(path: str | Path) -> StoreInstance:
    path = Path(path)
    manifest_path = path / "layout.json"
    if not manifest_path.is_file():
        raise StorageError(f"{manifest_path}: store manifest not found")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    kind = LayoutKind(manifest["kind"])
    orientation = Orientation(manifest["orientation"])

    dictionary = TermDictionary()
    with open(path / "dictionary.tsv", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            tid, lexical, kind_text = line.rstrip("\n").split("\t")
            got = dictionary.intern(Term(TermKind(kind_text), unescape_literal(lexical)))
            if got != int(tid):
                raise StorageError(f"{path / 'dictionary.tsv'}:{line_no}: ids are not dense")

    relations_arity = {r["name"]: r["arity"] for r in manifest["relations"]}
    members = {r["name"]: tuple(r["members"]) for r in manifest["relations"]}
    relation_of = {p: (name, relations_arity[name]) for p, name in manifest["relation_of"].items()}
    descriptor = LayoutDescriptor(kind, relation_of, relations_arity, CanonicalMap(manifest["canonical"]), members)

    relations = {}
    for entry in manifest["relations"]:
        file = path / entry["file"]
        raw = file.read_bytes()
        magic, version, arity, count = _HEADER.unpack_from(raw)
        if magic != MAGIC or version != FORMAT_VERSION or arity != entry["arity"]:
            raise StorageError(f"{file}: bad relation header")
        flat = np.frombuffer(raw, dtype="<u8", offset=_HEADER.size, count=count * arity).astype(np.int64)
        if orientation is Orientation.ROW:
            data = flat.reshape(count, arity)
        else:
            data = flat.reshape(arity, count).T
        relations[entry["name"]] = Relation.from_sorted(entry["name"], arity, data, orientation)
    return StoreInstance(descriptor, orientation, relations, dictionary)
