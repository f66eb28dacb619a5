"""Invariant differential forms, gauge equations and explicit instanton
families on cohomogeneity-one spaces with special holonomy."""

from .catalog import instantiate, list_families
from .checks import verify_family

__all__ = ["instantiate", "list_families", "verify_family"]
__version__ = "0.1.0"
