"""Random sampling used by the simulator.

All randomness flows through seeded substreams so that a simulation is
reproducible for a given seed regardless of execution order or worker
count.  Substreams are derived from a root seed plus a path of labels
(iteration index, component id, purpose), so different components and
different Monte Carlo iterations never share a sample sequence.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

HOURS_PER_YEAR = 8760.0

_REJECTION_BATCH = 256
_MAX_REJECTION_ROUNDS = 10_000


def _label_to_int(label: int | str) -> int:
    """Map a stream label to a stable non-negative integer.

    String labels are hashed with SHA-256 so the mapping does not depend
    on the process (Python's builtin hash is salted per process).
    """
    if isinstance(label, bool):
        raise TypeError("bool is not a valid stream label")
    if isinstance(label, int):
        if label < 0:
            raise ValueError(f"stream labels must be non-negative, got {label}")
        return label
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class RandomStream:
    """A point in the seeded substream tree.

    Identical (seed, path) pairs always yield identical sample sequences.
    ``child`` extends the path; ``generator`` materialises a numpy
    Generator positioned at the start of this substream.
    """

    seed: int
    path: tuple[int, ...] = field(default=())

    def child(self, *labels: int | str) -> "RandomStream":
        extra = tuple(_label_to_int(lbl) for lbl in labels)
        return RandomStream(self.seed, self.path + extra)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence((self.seed,) + self.path)
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class TruncatedNormalSpec:
    """Normal distribution renormalised to [lower, upper] hours."""

    loc: float
    scale: float
    lower: float = 0.0
    upper: float = 2.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if not self.lower < self.upper:
            raise ValueError(
                f"lower bound must be below upper bound, got [{self.lower}, {self.upper}]"
            )

    def cdf(self, x: float) -> float:
        """Analytic CDF of the truncated distribution (0 below, 1 above support)."""
        if x <= self.lower:
            return 0.0
        if x >= self.upper:
            return 1.0
        z = _normal_cdf((x - self.loc) / self.scale)
        lo = _normal_cdf((self.lower - self.loc) / self.scale)
        hi = _normal_cdf((self.upper - self.loc) / self.scale)
        return (z - lo) / (hi - lo)


def _normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class EvAvailabilityModel:
    """Availability of home-connected EVs.

    ``charging_profile`` holds 24 hourly fractions of EVs plugged in;
    ``daily_charge_frequency`` is the probability an EV charges at home
    on a given day (default 0.61 from aggregating survey charging
    frequencies).
    """

    ev_share: float = 0.46
    charging_profile: tuple[float, ...] = ()
    daily_charge_frequency: float = 0.61

    def __post_init__(self):
        if not 0.0 <= self.ev_share <= 1.0:
            raise ValueError(f"ev_share must be in [0, 1], got {self.ev_share}")
        if not 0.0 <= self.daily_charge_frequency <= 1.0:
            raise ValueError("daily_charge_frequency must be in [0, 1]")
        if len(self.charging_profile) != 24:
            raise ValueError("charging_profile needs exactly 24 hourly values")
        if any(not 0.0 <= c <= 1.0 for c in self.charging_profile):
            raise ValueError("charging_profile values must be in [0, 1]")

    def plugged_in_fraction(self, hour_of_day: float) -> float:
        return self.charging_profile[int(hour_of_day) % 24]

    def availability(self, hour_of_day: float) -> float:
        """Probability that a given EV is home-connected at this hour."""
        return self.plugged_in_fraction(hour_of_day) * self.daily_charge_frequency


@dataclass(frozen=True)
class SocSpec:
    """Uniform state-of-charge draw bounds, as fractions of capacity."""

    soc_min: float = 0.1
    soc_max: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.soc_min < self.soc_max <= 1.0:
            raise ValueError(
                f"need 0 <= soc_min < soc_max <= 1, got [{self.soc_min}, {self.soc_max}]"
            )


def sample_truncated_normal(spec: TruncatedNormalSpec, rng: np.random.Generator) -> float:
    """Draw one repair time from the truncated normal.

    Rejection sampling from the parent normal keeps the sampler
    independent of the analytic CDF used to verify it.
    """
    for _ in range(_MAX_REJECTION_ROUNDS):
        batch = rng.normal(spec.loc, spec.scale, size=_REJECTION_BATCH)
        inside = batch[(batch >= spec.lower) & (batch <= spec.upper)]
        if inside.size:
            return float(inside[0])
    raise RuntimeError(
        f"rejection sampling found no mass in [{spec.lower}, {spec.upper}] "
        f"for loc={spec.loc}, scale={spec.scale}"
    )


def line_failure_probability(failure_rate_per_year_km: float, length_km: float, dt_hours: float) -> float:
    """Per-increment Bernoulli failure probability.

    First-order thinning of a homogeneous Poisson process with annual
    rate ``failure_rate * length``: p = lambda * L * dt / 8760.
    """
    if dt_hours <= 0:
        raise ValueError("dt must be positive")
    return failure_rate_per_year_km * length_km * dt_hours / HOURS_PER_YEAR


def sample_line_failure(
    failure_rate_per_year_km: float,
    length_km: float,
    dt_hours: float,
    rng: np.random.Generator,
) -> bool:
    """Bernoulli draw: does this operational line fail in this increment?"""
    p = line_failure_probability(failure_rate_per_year_km, length_km, dt_hours)
    return bool(rng.random() < p)


def sample_failure_increments(
    failure_rate_per_year_km: float,
    length_km: float,
    dt_hours: float,
    n_increments: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Indices of increments where the per-increment Bernoulli fires.

    Consumes the stream exactly like ``n_increments`` sequential
    ``sample_line_failure`` calls, so the vectorised and per-increment
    paths produce identical failure candidates for the same substream.
    """
    p = line_failure_probability(failure_rate_per_year_km, length_km, dt_hours)
    if p <= 0.0:
        return np.empty(0, dtype=np.int64)
    u = rng.random(n_increments)
    return np.flatnonzero(u < p)


def expected_available_evs(
    hour_of_day: float, model: EvAvailabilityModel, n_customers: float
) -> float:
    """Expected number of home-connected EVs: n * share * C(t) * D."""
    return (
        n_customers
        * model.ev_share
        * model.plugged_in_fraction(hour_of_day)
        * model.daily_charge_frequency
    )


def sample_ev_count(
    max_fleet: int, hour_of_day: float, model: EvAvailabilityModel, rng: np.random.Generator
) -> int:
    """Binomial draw of connected EVs out of a park's maximum fleet."""
    if max_fleet < 0:
        raise ValueError("max_fleet must be >= 0")
    p = model.availability(hour_of_day)
    return int(rng.binomial(max_fleet, p))


def sample_soc(spec: SocSpec, capacity_kwh: float, rng: np.random.Generator) -> float:
    """Uniform stored-energy draw in [soc_min, soc_max] * capacity, kWh."""
    return float(rng.uniform(spec.soc_min * capacity_kwh, spec.soc_max * capacity_kwh))
