"""pgce: corpus screening, constraint construction, guided generation, and evaluation."""

__version__ = "0.1.0"
