"""RDF storage layouts (triple table, vertical partitioning, roStore) with
ontology-driven query rewriting."""

__version__ = "0.1.0"
