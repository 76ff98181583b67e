"""Classical simulation of quantum statistical query (QSQ) learning."""

__version__ = "0.1.0"
