"""Network definition files: a versioned YAML schema plus the embedded
33-bus dataset.

A file bundles the grid topology, switchgear, sources, reliability data
(failure rates, repair-time models), demand profiles and the EV
availability model.  ``NetworkDataset.build_network`` materialises a
live ``PowerNetwork`` for one simulation case, deriving each EV park's
maximum fleet from the household count and the case's EV share.
"""

from __future__ import annotations

import hashlib
import importlib.resources
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .agents import Battery, EvPark
from .network import Bus, Generator, Line, PowerNetwork, Switch, validate_radial
from .profiles import LoadProfileSet
from .stochastic import EvAvailabilityModel, SocSpec, TruncatedNormalSpec

SCHEMA = "gridrel-network/1"
EMBEDDED_DATASET = "ieee33"


class NetworkFileError(Exception):
    """A schema violation, reported with the offending field path."""


def _require(mapping: dict, key: str, context: str) -> Any:
    if key not in mapping:
        raise NetworkFileError(f"{context}: missing required field {key!r}")
    return mapping[key]


@dataclass
class BatterySpec:
    bus: int
    capacity_mwh: float
    inverter_mw: float
    efficiency: float = 0.95
    soc_min: float = 0.1


@dataclass
class EvParkDefaults:
    buses: tuple[int, ...] = ()
    capacity_kwh: float = 70.0
    charging_kw: float = 3.6
    soc_min: float = 0.1
    soc_max: float = 1.0


@dataclass
class NetworkDataset:
    """Everything a simulation needs, before case parameters are applied."""

    name: str
    s_base_mva: float
    v_base_kv: float
    buses: list[Bus]
    lines: list[Line]
    switches: list[Switch]
    generators: list[Generator]
    battery_specs: list[BatterySpec]
    ev_defaults: EvParkDefaults
    availability: EvAvailabilityModel
    repair_models: dict[str, TruncatedNormalSpec]
    profiles: LoadProfileSet
    sha256: str = ""
    source: str = ""

    def repair_model(self, name: str) -> TruncatedNormalSpec:
        try:
            return self.repair_models[name]
        except KeyError:
            raise NetworkFileError(f"line references unknown repair model {name!r}") from None

    def build_network(
        self,
        ev_share: Optional[float] = None,
        charging_kw: Optional[float] = None,
        v2g: bool = False,
        with_batteries: bool = False,
    ) -> PowerNetwork:
        """A live network for one case.

        EV park fleet caps are ``round(households * ev_share)`` per host
        bus; batteries are attached only when the case asks for them.
        """
        share = self.availability.ev_share if ev_share is None else ev_share
        chg = self.ev_defaults.charging_kw if charging_kw is None else charging_kw
        parks: dict[int, EvPark] = {}
        bus_by_id = {b.id: b for b in self.buses}
        for bus_id in self.ev_defaults.buses:
            households = bus_by_id[bus_id].households
            parks[bus_id] = EvPark(
                bus=bus_id,
                max_fleet=int(round(households * share)),
                ev_capacity_kwh=self.ev_defaults.capacity_kwh,
                charging_kw=chg,
                v2g_enabled=v2g,
                soc=SocSpec(self.ev_defaults.soc_min, self.ev_defaults.soc_max),
            )
        batteries: dict[int, Battery] = {}
        if with_batteries:
            if not self.battery_specs:
                raise NetworkFileError(
                    "case requires batteries but the dataset defines none"
                )
            for spec in self.battery_specs:
                batteries[spec.bus] = Battery(
                    capacity_mwh=spec.capacity_mwh,
                    inverter_mw=spec.inverter_mw,
                    efficiency=spec.efficiency,
                    soc_min=spec.soc_min,
                )
        return PowerNetwork(
            buses=[replace(b) for b in self.buses],
            lines=[replace(l) for l in self.lines],
            switches=[replace(s) for s in self.switches],
            generators=[replace(g) for g in self.generators],
            batteries=batteries,
            ev_parks=parks,
            name=self.name,
            s_base_mva=self.s_base_mva,
            v_base_kv=self.v_base_kv,
        )

    def availability_for(self, ev_share: Optional[float]) -> EvAvailabilityModel:
        if ev_share is None:
            return self.availability
        return EvAvailabilityModel(
            ev_share=ev_share,
            charging_profile=self.availability.charging_profile,
            daily_charge_frequency=self.availability.daily_charge_frequency,
        )


def parse_network_data(raw: dict, source: str = "<memory>") -> NetworkDataset:
    if not isinstance(raw, dict):
        raise NetworkFileError(f"{source}: top level must be a mapping")
    schema = raw.get("schema")
    if schema != SCHEMA:
        raise NetworkFileError(
            f"{source}: unsupported schema {schema!r} (expected {SCHEMA!r})"
        )
    base = _require(raw, "base", source)

    buses = []
    for i, entry in enumerate(_require(raw, "buses", source)):
        ctx = f"{source}: buses[{i}]"
        try:
            buses.append(
                Bus(
                    id=int(_require(entry, "id", ctx)),
                    name=entry.get("name", ""),
                    system=entry.get("system", "ds1"),
                    customers=int(entry.get("customers", 0)),
                    households=int(entry.get("households", 0)),
                    load_mw=float(entry.get("load_mw", 0.0)),
                    load_mvar=float(entry.get("load_mvar", 0.0)),
                    profile=entry.get("profile", "flat"),
                    shed_cost=float(entry.get("shed_cost", 1.0)),
                    coords=tuple(entry["coords"]) if "coords" in entry else None,
                )
            )
        except (ValueError, TypeError) as exc:
            raise NetworkFileError(f"{ctx}: {exc}") from exc

    lines = []
    for i, entry in enumerate(_require(raw, "lines", source)):
        ctx = f"{source}: lines[{i}]"
        try:
            lines.append(
                Line(
                    id=str(_require(entry, "id", ctx)),
                    from_bus=int(_require(entry, "from", ctx)),
                    to_bus=int(_require(entry, "to", ctx)),
                    length_km=float(entry.get("length_km", 1.0)),
                    r_ohm=float(entry.get("r_ohm", 0.0)),
                    x_ohm=float(entry.get("x_ohm", 0.0)),
                    capacity_mw=float(entry.get("capacity_mw", 10.0)),
                    failure_rate_per_year_km=float(entry.get("failure_rate_per_year_km", 0.0)),
                    repair_model=entry.get("repair_model", "default"),
                )
            )
        except (ValueError, TypeError) as exc:
            raise NetworkFileError(f"{ctx}: {exc}") from exc

    switches = []
    for i, entry in enumerate(raw.get("switches", [])):
        ctx = f"{source}: switches[{i}]"
        try:
            switches.append(
                Switch(
                    id=str(_require(entry, "id", ctx)),
                    kind=_require(entry, "kind", ctx),
                    line_id=str(_require(entry, "line", ctx)),
                    end=_require(entry, "end", ctx),
                    normally_open=bool(entry.get("normally_open", False)),
                )
            )
        except (ValueError, TypeError) as exc:
            raise NetworkFileError(f"{ctx}: {exc}") from exc

    generators = []
    for i, entry in enumerate(raw.get("generators", [])):
        ctx = f"{source}: generators[{i}]"
        generators.append(
            Generator(
                id=str(entry.get("id", f"gen{i}")),
                bus=int(_require(entry, "bus", ctx)),
                p_min_mw=float(entry.get("p_min_mw", 0.0)),
                p_max_mw=float(_require(entry, "p_max_mw", ctx)),
                is_slack=bool(entry.get("slack", False)),
            )
        )

    battery_specs = []
    for i, entry in enumerate(raw.get("batteries", [])):
        ctx = f"{source}: batteries[{i}]"
        battery_specs.append(
            BatterySpec(
                bus=int(_require(entry, "bus", ctx)),
                capacity_mwh=float(_require(entry, "capacity_mwh", ctx)),
                inverter_mw=float(_require(entry, "inverter_mw", ctx)),
                efficiency=float(entry.get("efficiency", 0.95)),
                soc_min=float(entry.get("soc_min", 0.1)),
            )
        )

    parks_raw = raw.get("ev_parks", {})
    ev_defaults = EvParkDefaults(
        buses=tuple(int(b) for b in parks_raw.get("buses", [])),
        capacity_kwh=float(parks_raw.get("capacity_kwh", 70.0)),
        charging_kw=float(parks_raw.get("charging_kw", 3.6)),
        soc_min=float(parks_raw.get("soc_min", 0.1)),
        soc_max=float(parks_raw.get("soc_max", 1.0)),
    )

    avail_raw = raw.get("availability")
    try:
        if avail_raw is None:
            if ev_defaults.buses:
                raise NetworkFileError(
                    f"{source}: ev_parks present but no availability block"
                )
            availability = EvAvailabilityModel(
                ev_share=0.0, charging_profile=(0.0,) * 24, daily_charge_frequency=0.0
            )
        else:
            availability = EvAvailabilityModel(
                ev_share=float(avail_raw.get("ev_share", 0.46)),
                charging_profile=tuple(
                    float(v)
                    for v in _require(avail_raw, "charging_profile", f"{source}: availability")
                ),
                daily_charge_frequency=float(avail_raw.get("daily_charge_frequency", 0.61)),
            )
    except ValueError as exc:
        raise NetworkFileError(f"{source}: availability: {exc}") from exc

    repair_models = {}
    for name, entry in raw.get("repair_models", {}).items():
        ctx = f"{source}: repair_models[{name}]"
        try:
            repair_models[name] = TruncatedNormalSpec(
                loc=float(_require(entry, "loc_h", ctx)),
                scale=float(_require(entry, "scale_h", ctx)),
                lower=float(entry.get("lower_h", 0.0)),
                upper=float(entry.get("upper_h", 2.0)),
            )
        except ValueError as exc:
            raise NetworkFileError(f"{ctx}: {exc}") from exc

    profiles_raw = raw.get("profiles", {})
    try:
        profiles = LoadProfileSet(
            shapes={name: tuple(float(v) for v in vals) for name, vals in profiles_raw.items()}
        )
    except ValueError as exc:
        raise NetworkFileError(f"{source}: profiles: {exc}") from exc

    dataset = NetworkDataset(
        name=raw.get("name", "network"),
        s_base_mva=float(base.get("s_base_mva", 10.0)),
        v_base_kv=float(base.get("v_base_kv", 12.66)),
        buses=buses,
        lines=lines,
        switches=switches,
        generators=generators,
        battery_specs=battery_specs,
        ev_defaults=ev_defaults,
        availability=availability,
        repair_models=repair_models,
        profiles=profiles,
        source=source,
    )
    _cross_validate(dataset)
    return dataset


def _cross_validate(dataset: NetworkDataset) -> None:
    bus_ids = {b.id for b in dataset.buses}
    for park_bus in dataset.ev_defaults.buses:
        if park_bus not in bus_ids:
            raise NetworkFileError(f"ev_parks: unknown bus {park_bus}")
    seen_battery = set()
    for spec in dataset.battery_specs:
        if spec.bus not in bus_ids:
            raise NetworkFileError(f"batteries: unknown bus {spec.bus}")
        if spec.bus in seen_battery:
            raise NetworkFileError(f"batteries: bus {spec.bus} has more than one battery")
        seen_battery.add(spec.bus)
    for line in dataset.lines:
        if line.failure_rate_per_year_km > 0:
            dataset.repair_model(line.repair_model)
    for bus in dataset.buses:
        if bus.load_mw > 0 and bus.profile != "flat" and bus.profile not in dataset.profiles.shapes:
            raise NetworkFileError(f"bus {bus.id}: unknown load profile {bus.profile!r}")

    net = dataset.build_network()
    violation = validate_radial(net)
    if not violation.ok:
        raise NetworkFileError(f"network is not radial: {violation.describe()}")


def load_network_file(path: str | Path) -> NetworkDataset:
    path = Path(path)
    if not path.exists():
        raise NetworkFileError(f"network file not found: {path}")
    text = path.read_text(encoding="utf-8")
    return _parse_text(text, str(path))


def load_embedded(name: str = EMBEDDED_DATASET) -> NetworkDataset:
    """The dataset shipped inside the package (33-bus feeder)."""
    resource = importlib.resources.files("gridrel.data").joinpath(f"{name}.yaml")
    text = resource.read_text(encoding="utf-8")
    return _parse_text(text, f"embedded:{name}")


def _parse_text(text: str, source: str) -> NetworkDataset:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise NetworkFileError(f"{source}: YAML parse error: {exc}") from exc
    dataset = parse_network_data(raw, source)
    dataset.sha256 = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return dataset
