"""Demand profiles: 24-hour daily shapes scaled onto nominal bus loads.

Profiles are stored as hourly fractions of the nominal load and
linearly interpolated to the simulation increment, wrapping midnight.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class LoadProfileSet:
    shapes: dict[str, tuple[float, ...]]

    def __post_init__(self):
        for name, values in self.shapes.items():
            if len(values) != 24:
                raise ValueError(f"profile {name!r} needs 24 hourly values")
            if any(v < 0 for v in values):
                raise ValueError(f"profile {name!r} has negative values")

    def fraction(self, profile: str, t_hours: float) -> float:
        """Interpolated fraction of nominal load at absolute time t."""
        if profile == "flat":
            return 1.0
        shape = self.shapes.get(profile)
        if shape is None:
            raise KeyError(f"unknown load profile {profile!r}")
        hod = t_hours % 24.0
        i = int(hod)
        frac = hod - i
        lo = shape[i % 24]
        hi = shape[(i + 1) % 24]
        return lo + (hi - lo) * frac


DEFAULT_SHAPES: dict[str, tuple[float, ...]] = {
    # synthetic daily shapes, user-replaceable through the network file
    "household": (0.42, 0.38, 0.36, 0.35, 0.36, 0.40, 0.52, 0.65, 0.62, 0.55,
                  0.52, 0.52, 0.53, 0.52, 0.54, 0.60, 0.72, 0.88, 1.00, 0.98,
                  0.92, 0.80, 0.62, 0.48),
    "office": (0.18, 0.16, 0.15, 0.15, 0.16, 0.22, 0.45, 0.75, 0.95, 1.00,
               1.00, 0.98, 0.95, 0.96, 0.94, 0.88, 0.70, 0.45, 0.30, 0.25,
               0.22, 0.20, 0.19, 0.18),
    "industry": (0.55, 0.52, 0.52, 0.53, 0.58, 0.70, 0.88, 0.98, 1.00, 1.00,
                 0.99, 0.97, 0.96, 0.97, 0.98, 0.95, 0.85, 0.72, 0.65, 0.62,
                 0.60, 0.58, 0.56, 0.55),
    "trade": (0.25, 0.22, 0.20, 0.20, 0.22, 0.30, 0.50, 0.72, 0.90, 1.00,
              1.00, 0.98, 0.96, 0.97, 0.95, 0.92, 0.85, 0.75, 0.60, 0.45,
              0.35, 0.30, 0.28, 0.26),
    "farm": (0.50, 0.48, 0.47, 0.47, 0.50, 0.62, 0.80, 0.92, 0.85, 0.75,
             0.70, 0.68, 0.70, 0.68, 0.70, 0.75, 0.85, 1.00, 0.95, 0.80,
             0.68, 0.60, 0.55, 0.52),
}
