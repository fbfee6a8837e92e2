"""Unidirectional payment channels with monotone on-chain accumulators."""

__version__ = "0.1.0"
