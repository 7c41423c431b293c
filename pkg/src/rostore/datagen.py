"""Deterministic LUBM-like data generator.

Every entity draws from its own random stream, seeded from (seed, university,
department, stream tag). Adding universities therefore leaves existing
departments with the same members, courses and publications; only the
university a degree was granted by is drawn over the current university count.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .rdf import RDF_TYPE, Dataset, IRI, Literal, Triple, parse_ntriples

UB = "http://swat.cse.lehigh.edu/onto/univ-bench.owl#"

DEFAULT_SEED = 1

# stream tags
_DEPT_COUNT, _DEPT_SHAPE, _FACULTY, _STAFF, _COURSES, _UNDERGRAD, _GRAD = range(7)

PROFESSOR_KINDS = ("FullProfessor", "AssociateProfessor", "AssistantProfessor")
FACULTY_KINDS = PROFESSOR_KINDS + ("Lecturer",)
STAFF_KINDS = ("ClericalStaff", "SystemsStaff")
PUBLICATION_KINDS = ("JournalArticle", "ConferencePaper", "TechnicalReport", "Book")


@dataclass(frozen=True)
class GenConfig:
    universities: int = 1
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.universities < 1:
            raise ValueError("universities must be >= 1")


def bundled_ontology_text() -> str:
    return resources.files("rostore").joinpath("data/univ-bench.nt").read_text(encoding="utf-8")


def bundled_ontology() -> Dataset:
    return parse_ntriples(bundled_ontology_text())


def university_iri(u: int) -> str:
    return f"http://www.University{u}.edu"


def department_iri(u: int, d: int) -> str:
    return f"http://www.Department{d}.University{u}.edu"


class _Emitter:
    def __init__(self):
        self.data = Dataset()

    def rel(self, s: str, p: str, o: str) -> None:
        self.data.add(Triple(IRI(s), IRI(UB + p), IRI(o)))

    def typed(self, s: str, cls: str) -> None:
        self.data.add(Triple(IRI(s), IRI(RDF_TYPE), IRI(UB + cls)))

    def lit(self, s: str, p: str, value: str) -> None:
        self.data.add(Triple(IRI(s), IRI(UB + p), Literal(value)))

    def person(self, iri: str, cls: str, label: str, dept_no: int, univ_no: int) -> None:
        self.typed(iri, cls)
        self.lit(iri, "name", label)
        self.lit(iri, "emailAddress", f"{label}@Department{dept_no}.University{univ_no}.edu")
        self.lit(iri, "telephone", f"xxx-xxx-{dept_no:02d}{univ_no:02d}")


class _Generator:
    def __init__(self, config: GenConfig):
        self.config = config
        self.seed = config.seed % 2**64
        self.out = _Emitter()

    def stream(self, *key: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, *key])

    def some_university(self, rng: np.random.Generator) -> str:
        # exactly one draw whatever the bound, so the stream stays aligned
        # when the university count changes
        return university_iri(int(rng.random() * self.config.universities))

    def run(self) -> Dataset:
        for u in range(self.config.universities):
            self.university(u)
        return self.out.data

    def university(self, u: int) -> None:
        out = self.out
        univ = university_iri(u)
        out.typed(univ, "University")
        out.lit(univ, "name", f"University{u}")
        n_depts = int(self.stream(u, _DEPT_COUNT).integers(3, 8))
        for d in range(n_depts):
            self.department(u, d)

    def department(self, u: int, d: int) -> None:
        out = self.out
        dept = department_iri(u, d)
        out.typed(dept, "Department")
        out.lit(dept, "name", f"Department{d}")
        out.rel(dept, "subOrganizationOf", university_iri(u))

        shape = self.stream(u, d, _DEPT_SHAPE)
        n_faculty = int(shape.integers(7, 15))
        n_staff = int(shape.integers(2, 5))
        n_undergrad = int(shape.integers(10, 21))
        n_grad = int(shape.integers(5, 11))
        n_courses = int(shape.integers(6, 11))
        n_grad_courses = int(shape.integers(2, 5))

        faculty, professors = self.faculty(u, d, dept, n_faculty)
        self.staff(u, d, dept, n_staff)
        courses, grad_courses, teacher_of = self.courses(u, d, dept, n_courses, n_grad_courses, faculty, professors)
        self.undergraduates(u, d, dept, n_undergrad, courses)
        self.graduates(u, d, dept, n_grad, grad_courses, teacher_of, [p for p, _ in professors])

    def faculty(self, u, d, dept, n_faculty):
        """The head (FullProfessor0) plus ``n_faculty`` members who work for the
        department; every faculty kind is represented at least once."""
        out = self.out
        rng = self.stream(u, d, _FACULTY)
        kinds = list(FACULTY_KINDS) + [FACULTY_KINDS[int(k)] for k in rng.integers(0, 4, n_faculty - 4)]
        counters = {k: 0 for k in FACULTY_KINDS}
        counters["FullProfessor"] = 1
        head = f"{dept}/FullProfessor0"
        members = [(head, "FullProfessor")]
        for kind in kinds:
            members.append((f"{dept}/{kind}{counters[kind]}", kind))
            counters[kind] += 1

        for iri, kind in members:
            out.person(iri, kind, iri.rsplit("/", 1)[1], d, u)
            if iri == head:
                out.rel(iri, "headOf", dept)
            else:
                out.rel(iri, "worksFor", dept)
            out.rel(iri, "undergraduateDegreeFrom", self.some_university(rng))
            out.rel(iri, "mastersDegreeFrom", self.some_university(rng))
            if kind != "Lecturer":
                out.rel(iri, "doctoralDegreeFrom", self.some_university(rng))
            for k in range(int(rng.integers(1, 6))):
                pub = f"{iri}/Publication{k}"
                out.typed(pub, PUBLICATION_KINDS[int(rng.integers(len(PUBLICATION_KINDS)))])
                out.lit(pub, "name", f"Publication{k}")
                out.rel(pub, "publicationAuthor", iri)
        professors = [m for m in members if m[1] != "Lecturer"]
        return members, professors

    def staff(self, u, d, dept, n_staff):
        rng = self.stream(u, d, _STAFF)
        for k in range(n_staff):
            iri = f"{dept}/AdministrativeStaff{k}"
            self.out.person(iri, STAFF_KINDS[int(rng.integers(2))], f"AdministrativeStaff{k}", d, u)
            self.out.rel(iri, "worksFor", dept)

    def courses(self, u, d, dept, n_courses, n_grad_courses, faculty, professors):
        out = self.out
        rng = self.stream(u, d, _COURSES)

        def teaching_order(people):
            # the "...0" member of each kind teaches first, so queries naming
            # e.g. AssociateProfessor0 always have work to do
            firsts = [p for p in people if p[0].endswith(f"/{p[1]}0")]
            rest = [p for p in people if p not in firsts]
            return firsts + [rest[int(i)] for i in rng.permutation(len(rest))]

        teacher_of: dict[str, str] = {}
        courses = []
        teachers = teaching_order(faculty)
        for k in range(n_courses):
            course = f"{dept}/Course{k}"
            courses.append(course)
            teacher_of[course] = teachers[k % len(teachers)][0]
        grad_courses = []
        grad_teachers = teaching_order(professors)
        for k in range(n_grad_courses):
            course = f"{dept}/GraduateCourse{k}"
            grad_courses.append(course)
            teacher_of[course] = grad_teachers[k % len(grad_teachers)][0]
        for course in courses + grad_courses:
            out.typed(course, "GraduateCourse" if "/GraduateCourse" in course else "Course")
            out.lit(course, "name", course.rsplit("/", 1)[1])
            out.rel(teacher_of[course], "teacherOf", course)
        return courses, grad_courses, teacher_of

    def undergraduates(self, u, d, dept, n, courses):
        rng = self.stream(u, d, _UNDERGRAD)
        for k in range(n):
            iri = f"{dept}/UndergraduateStudent{k}"
            self.out.person(iri, "UndergraduateStudent", f"UndergraduateStudent{k}", d, u)
            self.out.rel(iri, "memberOf", dept)
            for c in rng.choice(len(courses), int(rng.integers(1, 5)), replace=False):
                self.out.rel(iri, "takesCourse", courses[int(c)])

    def graduates(self, u, d, dept, n, grad_courses, teacher_of, professors):
        rng = self.stream(u, d, _GRAD)
        for k in range(n):
            iri = f"{dept}/GraduateStudent{k}"
            self.out.person(iri, "GraduateStudent", f"GraduateStudent{k}", d, u)
            self.out.rel(iri, "memberOf", dept)
            taken = [grad_courses[int(c)] for c in
                     rng.choice(len(grad_courses), int(rng.integers(1, min(4, len(grad_courses)) + 1)), replace=False)]
            for course in taken:
                self.out.rel(iri, "takesCourse", course)
            if rng.random() < 0.5:
                advisor = teacher_of[taken[int(rng.integers(len(taken)))]]
            else:
                advisor = professors[int(rng.integers(len(professors)))]
            self.out.rel(iri, "advisor", advisor)
            self.out.rel(iri, "undergraduateDegreeFrom", self.some_university(rng))


def generate(config: GenConfig) -> Dataset:
    return _Generator(config).run()
