"""Figure regeneration from scrambling-diagnostic CSV curves."""

__version__ = "0.1.0"
