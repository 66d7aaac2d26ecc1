"""Embeddings of finite inertia groups into symplectic groups over O_K."""

__version__ = "0.1.0"
