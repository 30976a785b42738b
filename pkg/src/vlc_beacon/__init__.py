from .cli import entry_point

__all__ = ["entry_point"]
