"""Voice anonymization and evaluation for code-switched speech corpora."""

__version__ = "0.1.0"
