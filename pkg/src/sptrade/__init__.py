"""Energy-efficient small-cell resource allocation with spectrum-power trading."""

__version__ = "0.1.0"
