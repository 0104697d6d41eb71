"""Quantum polar stabilizer codes for the bit-flip channel."""
