"""Run configuration with experiment defaults and provenance export.

Defaults match the reference experiment: 87 nucleons at 1.44e-25 kg, an
11 mm/s arm velocity difference, g = 9.812 m/s^2, and a 1 um initial packet
width.  A JSON file named by the CSLMZI_CONFIG environment variable (or an
explicit path) overrides any field; CLI flags override both.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .core import AtomSpecies, InterferometerConfig

__all__ = ["ENV_CONFIG", "RunConfig"]

ENV_CONFIG = "CSLMZI_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    nucleon_count: int = 87
    mass: float = 1.44e-25  # kg
    v1: float = 0.0  # m/s
    v2: float = 11e-3  # m/s
    gravity: float = 9.812  # m/s^2
    sigma: float = 1e-6  # m, initial packet width
    seed: int = 1
    output_format: str = "csv"

    def __post_init__(self):
        if self.output_format not in ("csv", "json"):
            raise ValueError(
                f"output_format must be 'csv' or 'json', got {self.output_format!r}"
            )

    @property
    def species(self) -> AtomSpecies:
        return AtomSpecies(nucleon_count=self.nucleon_count, mass=self.mass)

    def geometry(self, t_sep: float, chirp_rate: float = 0.0) -> InterferometerConfig:
        return InterferometerConfig.for_species(
            self.species, t_sep, self.v1, self.v2, chirp_rate, self.gravity
        )

    def header_items(self) -> dict:
        """Fully resolved values for provenance headers."""
        return {
            "nucleon_count": self.nucleon_count,
            "mass_kg": self.mass,
            "v1_m_s": self.v1,
            "v2_m_s": self.v2,
            "g_m_s2": self.gravity,
            "sigma_m": self.sigma,
            "seed": self.seed,
        }

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> "RunConfig":
        """Defaults, overridden by the JSON config file if one is named."""
        if path is None:
            path = os.environ.get(ENV_CONFIG)
        if not path:
            return cls()
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{exc.lineno}: invalid config JSON: {exc.msg}") from None
        if not isinstance(payload, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(
                f"{path}: unknown config field(s): {', '.join(sorted(unknown))}"
            )
        return replace(cls(), **payload)
