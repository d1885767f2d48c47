"""co2monitor - sequential monitoring of the global carbon budget imbalance."""

__version__ = "0.1.0"
