"""weavesim: plain-weave composite unit-cell simulator and sensitivity toolkit."""

__version__ = "0.1.0"
