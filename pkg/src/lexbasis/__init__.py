"""Low-dimensional explicit semantic word vectors from rule-filtered context words."""

__version__ = "0.1.0"
