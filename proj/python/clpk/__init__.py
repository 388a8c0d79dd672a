"""Python bindings for the clpk constraint logic programming engine."""

from ._clpk import Engine, PrologError

__all__ = ["Engine", "PrologError"]
