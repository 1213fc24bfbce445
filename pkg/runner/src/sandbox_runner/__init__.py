"""JSON-over-stdio runner that executes one Python program in an isolated process."""
from .runner import run

__all__ = ["run"]
