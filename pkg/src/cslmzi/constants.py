"""Shared physical constants, strict SI."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Reduced Planck constant and the atomic mass unit (CODATA 2018)."""

    hbar: float = 1.054571817e-34  # J s
    m0: float = 1.66053906660e-27  # kg, one atomic mass unit


#: Single shared instance; every module computes with these values.
CONSTANTS = PhysicalConstants()
