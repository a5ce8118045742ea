"""Inductive theorem proving with language-model lemma conjectures."""

__version__ = "0.1.0"
