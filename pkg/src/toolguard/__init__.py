"""toolguard: compile policy documents into executable tool guards."""

__version__ = "0.1.0"
