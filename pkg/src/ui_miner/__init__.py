"""Mining, filtering, storing and validating mobile UI screens."""

__version__ = "0.1.0"
