"""Truncated Fock-space simulator for entangled coherent states of two
condensates generated through Kerr-type probe/condensate dynamics."""

__version__ = "0.1.0"
