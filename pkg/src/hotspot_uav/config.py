"""INI-style sweep configuration: parsing, unit conversion, manifests.

Example::

    [environment]
    beta = 300 /km2
    delta = 0.5
    kappa = 20 m

    [radio]
    alpha_los = 2.1
    alpha_nlos = 4
    m_los = 3
    m_nlos = 1
    tx_power = 0.1 W
    noise = 1e-9 W
    beamwidth = 150 deg
    threshold = 0 dB

    [deployment]
    height = 100 m
    density = 5 /km2
    hotspot_radius = 100 m

    [sweep]
    axis = height
    values = 40:200:20 m
    engines = analytic, montecarlo
    strategies = hotspot
    output = height_sweep.csv

    [simulation]
    n_trials = 20000
    seed = 1

Numbers without a unit take the default unit of their field (m, /km2, deg,
W, dB). Unknown sections or keys are rejected.
"""

import configparser
import enum
import math
import re
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigParseError, ValidationError
from .montecarlo import SimulationOptions
from .quadrature import QuadratureSpec
from .urban import RADIO_DEFAULT, URBAN_DEFAULT, Deployment, RadioConfig, Strategy, UrbanEnvironment


class SweepAxis(enum.Enum):
    HEIGHT = "height"
    HOTSPOT_RADIUS = "hotspot_radius"
    DENSITY = "density"
    BEAMWIDTH = "beamwidth"
    THRESHOLD = "threshold"


class Engine(enum.Enum):
    ANALYTIC = "analytic"
    MONTECARLO = "montecarlo"


ANALYTIC_STRATEGIES = (Strategy.HOTSPOT, Strategy.PPP)

# unit -> (to internal, from internal); the first entry of each table is the
# default for bare numbers
_LENGTH = {"m": (lambda x: x, lambda x: x), "km": (lambda x: 1e3 * x, lambda x: x / 1e3)}
_DENSITY = {
    "/km2": (lambda x: x / 1e6, lambda x: x * 1e6),
    "/m2": (lambda x: x, lambda x: x),
}
_ANGLE = {"deg": (math.radians, math.degrees), "rad": (lambda x: x, lambda x: x)}
_POWER = {
    "W": (lambda x: x, lambda x: x),
    "mW": (lambda x: x / 1e3, lambda x: 1e3 * x),
    "dBm": (lambda x: 10.0 ** ((x - 30.0) / 10.0), lambda x: 10.0 * math.log10(x) + 30.0),
}
_RATIO = {
    "dB": (lambda x: 10.0 ** (x / 10.0), lambda x: 10.0 * math.log10(x)),
    "linear": (lambda x: x, lambda x: x),
}
_ALIASES = {"/km^2": "/km2", "/m^2": "/m2", "degrees": "deg", "db": "dB", "w": "W", "mw": "mW",
            "dbm": "dBm", "lin": "linear", "meters": "m"}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")

_AXIS_UNITS = {
    SweepAxis.HEIGHT: _LENGTH,
    SweepAxis.HOTSPOT_RADIUS: _LENGTH,
    SweepAxis.DENSITY: _DENSITY,
    SweepAxis.BEAMWIDTH: _ANGLE,
    SweepAxis.THRESHOLD: _RATIO,
}


@dataclass(frozen=True)
class SweepConfig:
    env: UrbanEnvironment = URBAN_DEFAULT
    radio: RadioConfig = RADIO_DEFAULT
    deployment: Deployment = field(default_factory=lambda: Deployment(100.0, 5e-6, 100.0))
    axis: SweepAxis = SweepAxis.HEIGHT
    values: tuple = (100.0,)  # internal units
    engines: tuple = (Engine.ANALYTIC,)
    strategies: tuple = (Strategy.HOTSPOT,)
    n_trials: int = 20000
    seed: int = 1
    output: str = "sweep.csv"
    workers: int = 1
    sim: SimulationOptions = SimulationOptions()
    quad: QuadratureSpec = QuadratureSpec()

    def __post_init__(self):
        if not self.values:
            raise ValidationError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(self.values[:-1], self.values[1:])):
            raise ValidationError("sweep values must be strictly increasing")
        if not self.engines:
            raise ValidationError("engines must be non-empty")
        if not self.strategies:
            raise ValidationError("strategies must be non-empty")
        if len(set(self.engines)) != len(self.engines) or len(set(self.strategies)) != len(self.strategies):
            raise ValidationError("engines and strategies must not repeat")
        if Engine.ANALYTIC in self.engines:
            bad = [s.value for s in self.strategies if s not in ANALYTIC_STRATEGIES]
            if bad:
                raise ValidationError(
                    f"analytic engine only supports strategies hotspot and ppp (got {', '.join(bad)})")
        if isinstance(self.n_trials, bool) or int(self.n_trials) != self.n_trials or self.n_trials < 100:
            raise ValidationError("n_trials must be an integer >= 100")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        # the axis values themselves must make valid parameter records
        for v in self.values:
            self.cell(v, self.strategies[0])

    def cell(self, value, strategy):
        """(env, radio, deployment) with the swept parameter set to ``value``."""
        radio, dep = self.radio, replace(self.deployment, strategy=strategy)
        if self.axis is SweepAxis.HEIGHT:
            dep = replace(dep, height_m=value)
        elif self.axis is SweepAxis.HOTSPOT_RADIUS:
            dep = replace(dep, hotspot_radius_m=value)
        elif self.axis is SweepAxis.DENSITY:
            dep = replace(dep, density_per_m2=value)
        elif self.axis is SweepAxis.BEAMWIDTH:
            radio = replace(radio, beamwidth_rad=value)
        else:
            radio = replace(radio, threshold_linear=value)
        return self.env, radio, dep

    def display_value(self, value):
        """Axis value in its configuration unit (m, /km2, deg, dB)."""
        table = _AXIS_UNITS[self.axis]
        return next(iter(table.values()))[1](value)


# ---------------------------------------------------------------------------
# field converters


def _with_unit(table, what):
    def conv(text):
        m = _NUMBER.match(text)
        if not m:
            raise ValueError(f"expected a number with optional unit for {what}, got {text!r}")
        unit = m.group(2)
        unit = _ALIASES.get(unit, unit)
        if not unit:
            unit = next(iter(table))
        if unit not in table:
            raise ValueError(f"unknown unit {m.group(2)!r} for {what}; use one of {', '.join(table)}")
        return table[unit][0](float(m.group(1)))
    return conv


def _float(text):
    return float(text)


def _int(text):
    try:
        return int(text)
    except ValueError:
        pass
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _enum_list(cls):
    def conv(text):
        items = [t.strip().lower() for t in text.split(",") if t.strip()]
        try:
            return tuple(cls(t) for t in items)
        except ValueError:
            valid = ", ".join(e.value for e in cls)
            raise ValueError(f"expected a comma-separated subset of {{{valid}}}, got {text!r}") from None
    return conv


def _axis_values(text, axis):
    table = _AXIS_UNITS[axis]
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        m = _NUMBER.match(parts[-1]) if len(parts) == 3 else None
        if not m:
            raise ValueError(f"range must read start:stop:step [unit], got {text!r}")
        start, stop, step = float(parts[0]), float(parts[1]), float(m.group(1))
        unit = m.group(2)
        if step <= 0 or stop < start:
            raise ValueError("range needs step > 0 and stop >= start")
        n = int(round((stop - start) / step))
        if abs(start + n * step - stop) > 1e-9 * max(1.0, abs(stop)):
            raise ValueError("range stop must be reachable from start in whole steps")
        raw = [f"{start + k * step!r} {unit}" for k in range(n + 1)]
    else:
        raw = [t.strip() for t in text.split(",") if t.strip()]
        # a unit on the last item applies to unit-less items
        last = _NUMBER.match(raw[-1]) if raw else None
        unit = last.group(2) if last else ""
        raw = [r if _NUMBER.match(r) and _NUMBER.match(r).group(2) else f"{r} {unit}" for r in raw]
    conv = _with_unit(table, axis.value)
    return tuple(conv(r) for r in raw)


_SCHEMA = {
    "environment": {
        "beta": _with_unit(_DENSITY, "beta"),
        "delta": _float,
        "kappa": _with_unit(_LENGTH, "kappa"),
    },
    "radio": {
        "alpha_los": _float,
        "alpha_nlos": _float,
        "m_los": _int,
        "m_nlos": _int,
        "tx_power": _with_unit(_POWER, "tx_power"),
        "noise": _with_unit(_POWER, "noise"),
        "beamwidth": _with_unit(_ANGLE, "beamwidth"),
        "threshold": _with_unit(_RATIO, "threshold"),
    },
    "deployment": {
        "height": _with_unit(_LENGTH, "height"),
        "density": _with_unit(_DENSITY, "density"),
        "hotspot_radius": _with_unit(_LENGTH, "hotspot_radius"),
    },
    "sweep": {
        "axis": lambda t: SweepAxis(t.strip().lower()),
        "values": None,  # depends on the axis, converted last
        "engines": _enum_list(Engine),
        "strategies": _enum_list(Strategy),
        "output": str.strip,
    },
    "simulation": {
        "n_trials": _int,
        "seed": _int,
        "workers": _int,
        "window_scale": lambda t: None if t.strip().lower() == "auto" else float(t),
        "users_per_hotspot": _int,
    },
    "quadrature": {
        "abs_tol": _float,
        "rel_tol": _float,
        "max_subdivisions": _int,
    },
    "run": {
        "version": str.strip,
    },
}


def _key_lines(text):
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    out = {}
    section = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            out.setdefault((section, None), i)
            continue
        m = re.match(r"^([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), i)
    return out


def _read(text, overrides):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   default_section="__defaults__")
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigParseError("key/value pair before any [section] header", line=e.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigParseError(str(e).split(":")[0].strip(), line=e.lineno,
                               field=getattr(e, "option", None) or e.section) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigParseError("malformed line (expected key = value)", line=lineno) from None
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if not key:
            raise ConfigParseError("override must be written section.key=value", field=dotted)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, str(value))
    return cp


def parse_config(text, overrides=None):
    """Parse configuration text into a validated :class:`SweepConfig`.

    ``overrides`` maps ``"section.key"`` to value strings (same syntax as
    the file) and wins over the file. Raises :class:`ConfigParseError` for
    malformed text, unknown sections/keys or bad values, and
    :class:`ValidationError` naming the violated invariant otherwise.
    """
    lines = _key_lines(text)
    cp = _read(text, overrides)
    raw = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigParseError(f"unknown section [{section}]",
                                   line=lines.get((section, None)), field=section)
        for key, value in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigParseError(f"unknown key {key!r} in [{section}]",
                                       line=lines.get((section, key)), field=f"{section}.{key}")
            conv = _SCHEMA[section][key]
            if conv is None:
                continue
            try:
                raw[section, key] = conv(value)
            except ValueError as e:
                raise ConfigParseError(str(e), line=lines.get((section, key)),
                                       field=f"{section}.{key}") from None

    def get(section, key, default):
        return raw.get((section, key), default)

    env = UrbanEnvironment(
        beta=get("environment", "beta", URBAN_DEFAULT.beta),
        delta=get("environment", "delta", URBAN_DEFAULT.delta),
        kappa=get("environment", "kappa", URBAN_DEFAULT.kappa),
    )
    r = RADIO_DEFAULT
    radio = RadioConfig(
        alpha_los=get("radio", "alpha_los", r.alpha_los),
        alpha_nlos=get("radio", "alpha_nlos", r.alpha_nlos),
        m_los=get("radio", "m_los", r.m_los),
        m_nlos=get("radio", "m_nlos", r.m_nlos),
        tx_power_w=get("radio", "tx_power", r.tx_power_w),
        noise_w=get("radio", "noise", r.noise_w),
        beamwidth_rad=get("radio", "beamwidth", r.beamwidth_rad),
        threshold_linear=get("radio", "threshold", r.threshold_linear),
    )
    d = SweepConfig().deployment
    strategies = get("sweep", "strategies", (Strategy.HOTSPOT,))
    dep = Deployment(
        height_m=get("deployment", "height", d.height_m),
        density_per_m2=get("deployment", "density", d.density_per_m2),
        hotspot_radius_m=get("deployment", "hotspot_radius", d.hotspot_radius_m),
        strategy=strategies[0] if strategies else Strategy.HOTSPOT,
    )
    axis = get("sweep", "axis", SweepAxis.HEIGHT)
    if cp.has_option("sweep", "values"):
        try:
            values = _axis_values(cp.get("sweep", "values"), axis)
        except ValueError as e:
            raise ConfigParseError(str(e), line=lines.get(("sweep", "values")),
                                   field="sweep.values") from None
    else:
        values = (_base_value(axis, env, radio, dep),)

    sim = SimulationOptions(
        window_scale=get("simulation", "window_scale", SimulationOptions.window_scale),
        users_per_hotspot=get("simulation", "users_per_hotspot", SimulationOptions.users_per_hotspot),
    )
    q = QuadratureSpec()
    quad = QuadratureSpec(
        abs_tol=get("quadrature", "abs_tol", q.abs_tol),
        rel_tol=get("quadrature", "rel_tol", q.rel_tol),
        max_subdivisions=get("quadrature", "max_subdivisions", q.max_subdivisions),
    )
    base = SweepConfig()
    return SweepConfig(
        env=env, radio=radio, deployment=dep, axis=axis, values=values,
        engines=get("sweep", "engines", base.engines),
        strategies=strategies,
        n_trials=get("simulation", "n_trials", base.n_trials),
        seed=get("simulation", "seed", base.seed),
        output=get("sweep", "output", base.output),
        workers=get("simulation", "workers", base.workers),
        sim=sim, quad=quad,
    )


def _base_value(axis, env, radio, dep):
    return {
        SweepAxis.HEIGHT: dep.height_m,
        SweepAxis.HOTSPOT_RADIUS: dep.hotspot_radius_m,
        SweepAxis.DENSITY: dep.density_per_m2,
        SweepAxis.BEAMWIDTH: radio.beamwidth_rad,
        SweepAxis.THRESHOLD: radio.threshold_linear,
    }[axis]


def base_value(cfg):
    """Value of the swept parameter in the base records (internal units)."""
    return _base_value(cfg.axis, cfg.env, cfg.radio, cfg.deployment)


def load_config(path, overrides=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def format_manifest(cfg, version):
    """Fully resolved configuration in internal units.

    Every float is written with ``repr`` and an identity unit, so
    ``parse_config(format_manifest(cfg, v)) == cfg``.
    """
    axis_unit = {SweepAxis.DENSITY: "/m2", SweepAxis.BEAMWIDTH: "rad",
                 SweepAxis.THRESHOLD: "linear"}.get(cfg.axis, "m")
    e, r, d = cfg.env, cfg.radio, cfg.deployment
    sections = {
        "run": {"version": version},
        "environment": {"beta": f"{e.beta!r} /m2", "delta": repr(e.delta), "kappa": f"{e.kappa!r} m"},
        "radio": {
            "alpha_los": repr(r.alpha_los), "alpha_nlos": repr(r.alpha_nlos),
            "m_los": str(r.m_los), "m_nlos": str(r.m_nlos),
            "tx_power": f"{r.tx_power_w!r} W", "noise": f"{r.noise_w!r} W",
            "beamwidth": f"{r.beamwidth_rad!r} rad", "threshold": f"{r.threshold_linear!r} linear",
        },
        "deployment": {
            "height": f"{d.height_m!r} m", "density": f"{d.density_per_m2!r} /m2",
            "hotspot_radius": f"{d.hotspot_radius_m!r} m",
        },
        "sweep": {
            "axis": cfg.axis.value,
            "values": ", ".join(f"{v!r} {axis_unit}" for v in cfg.values),
            "engines": ", ".join(x.value for x in cfg.engines),
            "strategies": ", ".join(x.value for x in cfg.strategies),
            "output": cfg.output,
        },
        "simulation": {
            "n_trials": str(cfg.n_trials), "seed": str(cfg.seed), "workers": str(cfg.workers),
            "window_scale": "auto" if cfg.sim.window_scale is None else repr(cfg.sim.window_scale),
            "users_per_hotspot": str(cfg.sim.users_per_hotspot),
        },
        "quadrature": {f.name: repr(getattr(cfg.quad, f.name)) for f in fields(cfg.quad)},
    }
    out = []
    for name, kv in sections.items():
        out.append(f"[{name}]")
        out.extend(f"{k} = {v}" for k, v in kv.items())
        out.append("")
    return "\n".join(out)
