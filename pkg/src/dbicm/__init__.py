"""Delayed bit-interleaved coded modulation: capacity, delay search, LDPC design and simulation."""

__version__ = "0.1.0"
