"""Power-system case model: domain types, per-unit handling and case file I/O.

A case lives on disk as a directory of CSV tables (one per appendix-style
table) plus a JSON manifest holding the scalar data.  Quantities in the files
are physical (MW, MVar, p.u. impedances); conversion to per-unit happens at
load time and everything downstream works on a 100 MVA-style base.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class CaseError(ValueError):
    """Raised when a case file violates the schema or a model invariant."""


BUS_KINDS = ("load", "generator", "wind", "plain")


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str
    load_fraction: float = 0.0
    shunt_conductance: float = 0.0  # p.u. on system base

    def __post_init__(self):
        if self.kind not in BUS_KINDS:
            raise CaseError(f"bus {self.id}: unknown kind {self.kind!r}")
        if self.load_fraction < 0:
            raise CaseError(f"bus {self.id}: load_fraction must be >= 0")


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    r: float  # p.u.
    x: float  # p.u.
    b: float  # total charging susceptance, p.u.
    capacity_mw: float

    def __post_init__(self):
        if self.x <= 0:
            raise CaseError(f"line {self.id}: x must be > 0")
        if self.capacity_mw <= 0:
            raise CaseError(f"line {self.id}: capacity_mw must be > 0")
        if self.from_bus == self.to_bus:
            raise CaseError(f"line {self.id}: from_bus == to_bus")


@dataclass(frozen=True)
class ThermalUnit:
    name: str
    bus: int
    p_max: float  # MW
    p_min: float  # MW
    q_max: float  # MVar
    q_min: float  # MVar
    ramp_up: float  # MW/h
    ramp_down: float  # MW/h
    startup_ramp: float  # MW/h
    shutdown_ramp: float  # MW/h
    min_on: int  # h
    min_off: int  # h
    initial_state: int  # signed hours; > 0 means already on that long
    fuel_a: float  # MBTU
    fuel_b: float  # MBTU/MWh
    fuel_c: float  # MBTU/MW^2 h
    startup_fuel: float  # MBTU
    shutdown_fuel: float  # MBTU
    fuel_price: float  # $/MBTU

    def __post_init__(self):
        if self.p_min > self.p_max:
            raise CaseError(f"unit {self.name}: p_min > p_max")
        if self.q_min > self.q_max:
            raise CaseError(f"unit {self.name}: q_min > q_max")
        for fld in ("ramp_up", "ramp_down", "startup_ramp", "shutdown_ramp"):
            if getattr(self, fld) <= 0:
                raise CaseError(f"unit {self.name}: {fld} must be > 0")
        if self.fuel_c < 0:
            raise CaseError(f"unit {self.name}: fuel_c must be >= 0")
        if self.initial_state == 0:
            raise CaseError(f"unit {self.name}: initial_state must be nonzero")

    @property
    def initially_on(self) -> bool:
        return self.initial_state > 0

    @property
    def startup_cost(self) -> float:
        return self.startup_fuel * self.fuel_price

    @property
    def shutdown_cost(self) -> float:
        return self.shutdown_fuel * self.fuel_price


@dataclass(frozen=True)
class WindFarm:
    bus: int
    capacity_mw: float
    power_factor: float
    hourly_forecast: tuple  # MW, one entry per hour

    def __post_init__(self):
        if not 0 < self.power_factor <= 1:
            raise CaseError(f"wind farm at bus {self.bus}: power_factor not in (0, 1]")
        for h, p in enumerate(self.hourly_forecast):
            if p < 0 or p > self.capacity_mw:
                raise CaseError(
                    f"wind farm at bus {self.bus}: hourly_forecast[{h}] outside "
                    f"[0, capacity]"
                )

    @property
    def tan_phi(self) -> float:
        return math.tan(math.acos(self.power_factor))


@dataclass(frozen=True)
class UpfcDevice:
    series_line: int  # line id
    shunt_bus: int
    t_sh_max: float  # MVA
    t_se_max: float  # MVA
    p_dc_max: float  # MW
    delta_p: float  # MW
    delta_q_se: float  # MVar
    delta_q_sh: float  # MVar

    def __post_init__(self):
        for fld in ("t_sh_max", "t_se_max", "p_dc_max",
                    "delta_p", "delta_q_se", "delta_q_sh"):
            if getattr(self, fld) <= 0:
                raise CaseError(f"UPFC on line {self.series_line}: {fld} must be > 0")


@dataclass
class NetworkCase:
    buses: list[Bus]
    lines: list[Line]
    units: list[ThermalUnit]
    wind_farms: list[WindFarm]
    upfc_devices: list[UpfcDevice]
    p_load: np.ndarray  # MW, shape (n_bus, horizon)
    q_load: np.ndarray  # MVar, shape (n_bus, horizon)
    reserve_fraction: float
    price_curtailment: float  # $/MWh
    price_shedding: float  # $/MWh
    v_min: float
    v_max: float
    mva_base: float
    horizon: int
    reference_bus: int
    source_load_table: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self._validate()

    # -- derived structure ------------------------------------------------

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def gen_buses(self) -> list[int]:
        return [u.bus for u in self.units]

    @property
    def wind_buses(self) -> list[int]:
        return [w.bus for w in self.wind_farms]

    @property
    def load_buses(self) -> list[int]:
        return [b.id for b in self.buses if b.load_fraction > 0]

    def line_by_id(self, line_id: int) -> Line:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise CaseError(f"no line with id {line_id}")

    def ybus(self) -> np.ndarray:
        """Complex bus admittance matrix (p.u.), pi-model with line charging."""
        n = self.n_bus
        y = np.zeros((n, n), dtype=complex)
        for ln in self.lines:
            i, j = ln.from_bus - 1, ln.to_bus - 1
            ys = 1.0 / complex(ln.r, ln.x)
            y[i, i] += ys + 1j * ln.b / 2
            y[j, j] += ys + 1j * ln.b / 2
            y[i, j] -= ys
            y[j, i] -= ys
        for b in self.buses:
            y[b.id - 1, b.id - 1] += b.shunt_conductance
        return y

    def reserve_mw(self) -> np.ndarray:
        """Hourly spinning reserve requirement R_t in MW."""
        return self.reserve_fraction * self.p_load.sum(axis=0)

    # -- validation --------------------------------------------------------

    def _validate(self):
        ids = [b.id for b in self.buses]
        if sorted(ids) != list(range(1, len(ids) + 1)):
            raise CaseError("bus ids must be unique and contiguous from 1")
        if self.reference_bus not in ids:
            raise CaseError("reference_bus is not a bus id")
        for ln in self.lines:
            if ln.from_bus not in ids or ln.to_bus not in ids:
                raise CaseError(f"line {ln.id}: endpoint is not a bus id")
        line_ids = [ln.id for ln in self.lines]
        if len(set(line_ids)) != len(line_ids):
            raise CaseError("duplicate line ids")
        unit_names = [u.name for u in self.units]
        if len(set(unit_names)) != len(unit_names):
            raise CaseError("duplicate unit names")
        for u in self.units:
            if u.bus not in ids:
                raise CaseError(f"unit {u.name}: bus is not a bus id")
        for w in self.wind_farms:
            if w.bus not in ids:
                raise CaseError(f"wind farm bus {w.bus} is not a bus id")
            if len(w.hourly_forecast) != self.horizon:
                raise CaseError(f"wind farm at bus {w.bus}: forecast length != horizon")
        for dev in self.upfc_devices:
            ln = self.line_by_id(dev.series_line)
            if dev.shunt_bus not in (ln.from_bus, ln.to_bus):
                raise CaseError(
                    f"UPFC shunt_bus {dev.shunt_bus} is not an endpoint of "
                    f"line {dev.series_line}"
                )
        if self.p_load.shape != (self.n_bus, self.horizon):
            raise CaseError("p_load has the wrong shape")
        if self.q_load.shape != (self.n_bus, self.horizon):
            raise CaseError("q_load has the wrong shape")
        if not 0 < self.v_min < self.v_max:
            raise CaseError("voltage limits must satisfy 0 < v_min < v_max")
        if self.mva_base <= 0:
            raise CaseError("mva_base must be > 0")


# -- cost primitives --------------------------------------------------------


def fuel_cost(unit: ThermalUnit, p_mw: float, tol: float = 1e-6) -> float:
    """Hourly fuel cost in $ for output ``p_mw``; zero when the unit is off."""
    if p_mw == 0:
        return 0.0
    if p_mw < unit.p_min - tol or p_mw > unit.p_max + tol:
        raise ValueError(
            f"unit {unit.name}: output {p_mw} MW outside [{unit.p_min}, {unit.p_max}]"
        )
    return unit.fuel_price * (unit.fuel_a + unit.fuel_b * p_mw + unit.fuel_c * p_mw**2)


def transition_cost(unit: ThermalUnit, u_prev: int, u_now: int) -> float:
    """Cost in $ of the on/off transition between two consecutive hours."""
    if u_prev not in (0, 1) or u_now not in (0, 1):
        raise ValueError("commitment bits must be 0 or 1")
    if u_now > u_prev:
        return unit.startup_cost
    if u_now < u_prev:
        return unit.shutdown_cost
    return 0.0


def schedule_uc_cost(units: list[ThermalUnit], u: np.ndarray) -> float:
    """Total startup/shutdown cost of a commitment schedule.

    ``u`` has shape (n_units, horizon); the hour-0 predecessor is the unit's
    initial state.  Serves as the transition-counting oracle for solver
    results.
    """
    u = np.asarray(u)
    total = 0.0
    for g, unit in enumerate(units):
        prev = 1 if unit.initially_on else 0
        for t in range(u.shape[1]):
            total += transition_cost(unit, prev, int(u[g, t]))
            prev = int(u[g, t])
    return total


def wind_reactive(p_wind_mw: float, power_factor: float) -> float:
    """Reactive demand in MVar of a wind farm held at constant power factor."""
    if not 0 < power_factor <= 1:
        raise ValueError("power_factor must be in (0, 1]")
    return p_wind_mw * math.tan(math.acos(power_factor))


# -- case file I/O -----------------------------------------------------------


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise CaseError(f"{path.name}: empty table")
    return rows


def _num(row: dict, field_name: str, path: Path) -> float:
    try:
        return float(row[field_name])
    except KeyError:
        raise CaseError(f"{path.name}: missing column {field_name!r}") from None
    except ValueError:
        raise CaseError(f"{path.name}: non-numeric value in {field_name!r}") from None


def load_case(path) -> NetworkCase:
    """Load a case directory into a validated :class:`NetworkCase`."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise CaseError(f"no manifest.json under {root}")
    with open(manifest_path) as f:
        manifest = json.load(f)
    for key in ("mva_base", "reserve_fraction", "v_min", "v_max", "horizon",
                "reference_bus", "files"):
        if key not in manifest:
            raise CaseError(f"manifest.json: missing key {key!r}")
    files = {k: root / v for k, v in manifest["files"].items()}
    horizon = int(manifest["horizon"])

    p = files["buses"]
    buses = [
        Bus(
            id=int(_num(r, "bus", p)),
            kind=r.get("kind", "plain"),
            load_fraction=_num(r, "load_fraction", p),
            shunt_conductance=_num(r, "shunt_conductance", p),
        )
        for r in _read_csv(p)
    ]

    p = files["lines"]
    lines = [
        Line(
            id=int(_num(r, "line", p)),
            from_bus=int(_num(r, "from_bus", p)),
            to_bus=int(_num(r, "to_bus", p)),
            r=_num(r, "r", p),
            x=_num(r, "x", p),
            b=_num(r, "b", p),
            capacity_mw=_num(r, "capacity_mw", p),
        )
        for r in _read_csv(p)
    ]

    p = files["load"]
    load_rows = _read_csv(p)
    if len(load_rows) != horizon:
        raise CaseError(f"{p.name}: expected {horizon} hourly rows")
    load_table = np.array(
        [[_num(r, "hour", p), _num(r, "p_load_mw", p),
          _num(r, "q_load_mvar", p), _num(r, "p_wind_mw", p)] for r in load_rows]
    )

    p = files["units"]
    units = [
        ThermalUnit(
            name=r["unit"],
            bus=int(_num(r, "bus", p)),
            p_max=_num(r, "p_max", p),
            p_min=_num(r, "p_min", p),
            q_max=_num(r, "q_max", p),
            q_min=_num(r, "q_min", p),
            ramp_up=_num(r, "ramp_up", p),
            ramp_down=_num(r, "ramp_down", p),
            startup_ramp=_num(r, "startup_ramp", p),
            shutdown_ramp=_num(r, "shutdown_ramp", p),
            min_on=int(_num(r, "min_on", p)),
            min_off=abs(int(_num(r, "min_off", p))),
            initial_state=int(_num(r, "initial_state", p)),
            fuel_a=_num(r, "fuel_a", p),
            fuel_b=_num(r, "fuel_b", p),
            fuel_c=_num(r, "fuel_c", p),
            startup_fuel=_num(r, "startup_fuel", p),
            shutdown_fuel=_num(r, "shutdown_fuel", p),
            fuel_price=_num(r, "fuel_price", p),
        )
        for r in _read_csv(p)
    ]

    p = files["wind"]
    wind_farms = [
        WindFarm(
            bus=int(_num(r, "bus", p)),
            capacity_mw=_num(r, "capacity_mw", p),
            power_factor=_num(r, "power_factor", p),
            hourly_forecast=tuple(load_table[:, 3]),
        )
        for r in _read_csv(p)
    ]

    p = files["upfc"]
    upfc_rows = _read_csv(p)
    line_lookup = {(ln.from_bus, ln.to_bus): ln.id for ln in lines}
    upfc_devices = []
    for r in upfc_rows:
        key = (int(_num(r, "series_from", p)), int(_num(r, "series_to", p)))
        if key not in line_lookup:
            raise CaseError(f"{p.name}: no line {key[0]}-{key[1]} in the case")
        upfc_devices.append(
            UpfcDevice(
                series_line=line_lookup[key],
                shunt_bus=int(_num(r, "shunt_bus", p)),
                t_sh_max=_num(r, "t_sh_max", p),
                t_se_max=_num(r, "t_se_max", p),
                p_dc_max=_num(r, "p_dc_max", p),
                delta_p=_num(r, "delta_p", p),
                delta_q_se=_num(r, "delta_q_se", p),
                delta_q_sh=_num(r, "delta_q_sh", p),
            )
        )

    p = files["prices_limits"]
    prices = _read_csv(p)[0]
    fractions = np.array([b.load_fraction for b in buses])
    if fractions.sum() > 0 and abs(fractions.sum() - 1.0) > 1e-9:
        raise CaseError("buses.csv: load_fraction column must sum to 1")
    p_load = np.outer(fractions, load_table[:, 1])
    q_load = np.outer(fractions, load_table[:, 2])

    return NetworkCase(
        buses=buses,
        lines=lines,
        units=units,
        wind_farms=wind_farms,
        upfc_devices=upfc_devices,
        p_load=p_load,
        q_load=q_load,
        reserve_fraction=float(manifest["reserve_fraction"]),
        price_curtailment=_num(prices, "price_curtailment", p),
        price_shedding=_num(prices, "price_shedding", p),
        v_min=float(manifest["v_min"]),
        v_max=float(manifest["v_max"]),
        mva_base=float(manifest["mva_base"]),
        horizon=horizon,
        reference_bus=int(manifest["reference_bus"]),
        source_load_table=load_table,
    )


def save_case(case: NetworkCase, path) -> None:
    """Write a case back out in the same directory-of-CSVs format."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "mva_base": case.mva_base,
        "reserve_fraction": case.reserve_fraction,
        "v_min": case.v_min,
        "v_max": case.v_max,
        "horizon": case.horizon,
        "reference_bus": case.reference_bus,
        "files": {
            "buses": "buses.csv",
            "lines": "lines.csv",
            "units": "units.csv",
            "wind": "wind.csv",
            "upfc": "upfc.csv",
            "load": "load.csv",
            "prices_limits": "prices_limits.csv",
        },
    }
    with open(root / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)

    def write(name, header, rows):
        with open(root / name, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            w.writerows(rows)

    write("buses.csv", ["bus", "kind", "load_fraction", "shunt_conductance"],
          [[b.id, b.kind, repr(b.load_fraction), repr(b.shunt_conductance)]
           for b in case.buses])
    write("lines.csv", ["line", "from_bus", "to_bus", "r", "x", "b", "capacity_mw"],
          [[ln.id, ln.from_bus, ln.to_bus, repr(ln.r), repr(ln.x), repr(ln.b),
            repr(ln.capacity_mw)] for ln in case.lines])
    write("units.csv",
          ["unit", "bus", "p_max", "p_min", "q_max", "q_min", "initial_state",
           "min_on", "min_off", "ramp_up", "ramp_down", "startup_ramp",
           "shutdown_ramp", "fuel_a", "fuel_b", "fuel_c", "startup_fuel",
           "shutdown_fuel", "fuel_price"],
          [[u.name, u.bus, repr(u.p_max), repr(u.p_min), repr(u.q_max),
            repr(u.q_min), u.initial_state, u.min_on, u.min_off,
            repr(u.ramp_up), repr(u.ramp_down), repr(u.startup_ramp),
            repr(u.shutdown_ramp), repr(u.fuel_a), repr(u.fuel_b),
            repr(u.fuel_c), repr(u.startup_fuel), repr(u.shutdown_fuel),
            repr(u.fuel_price)] for u in case.units])
    write("wind.csv", ["bus", "capacity_mw", "power_factor"],
          [[w.bus, repr(w.capacity_mw), repr(w.power_factor)]
           for w in case.wind_farms])
    line_by_id = {ln.id: ln for ln in case.lines}
    write("upfc.csv",
          ["series_from", "series_to", "shunt_bus", "t_sh_max", "t_se_max",
           "p_dc_max", "delta_p", "delta_q_se", "delta_q_sh"],
          [[line_by_id[d.series_line].from_bus, line_by_id[d.series_line].to_bus,
            d.shunt_bus, repr(d.t_sh_max), repr(d.t_se_max), repr(d.p_dc_max),
            repr(d.delta_p), repr(d.delta_q_se), repr(d.delta_q_sh)]
           for d in case.upfc_devices])
    write("prices_limits.csv", ["price_curtailment", "price_shedding"],
          [[repr(case.price_curtailment), repr(case.price_shedding)]])
    table = case.source_load_table
    if table is None:
        hours = np.arange(1, case.horizon + 1)
        table = np.column_stack([
            hours, case.p_load.sum(axis=0), case.q_load.sum(axis=0),
            np.sum([w.hourly_forecast for w in case.wind_farms], axis=0),
        ])
    write("load.csv", ["hour", "p_load_mw", "q_load_mvar", "p_wind_mw"],
          [[int(r[0]), repr(float(r[1])), repr(float(r[2])),
            repr(float(r[3]))] for r in table])


def bundled_case_path() -> Path:
    """Path of the 6-bus case shipped with the package."""
    return Path(__file__).parent / "data" / "case6"


def load_bundled_case() -> NetworkCase:
    return load_case(bundled_case_path())
