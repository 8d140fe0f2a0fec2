"""Reactive execution of temporal-logic mobile manipulation missions in 2D."""

__version__ = "0.1.0"
