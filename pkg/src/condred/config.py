"""Study configuration: scenario catalog, file parsing, serialization.

The on-disk format is flat-section TOML — sections ``[grid]``,
``[phase]``, ``[amplitude]``, ``[sweep]``, ``[output]`` plus a top-level
``scenario`` key.  A scenario names a bundle of defaults (phase kind,
amplitude kind, final time); explicit keys override it.  Every field has
a documented default, an empty file is a valid config, and
parse -> serialize -> parse is a fixed point.
"""

import dataclasses
import re
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .eikonal import PHASE_CATALOG
from .errors import ConfigError
from .fields import GridSpec, polarized_gaussian, two_mode
from .hermite import build_basis

QUAD_PER_MODE = 3        # quadrature nodes per transverse mode

AMPLITUDE_KINDS = ("polarized_gaussian", "two_mode")

PHASE_PARAM_KEYS = {
    "zero": (),
    "linear": ("b",),
    "quadratic": ("c",),
    "gaussian_bump": ("a", "w"),
}

AMPLITUDE_PARAM_KEYS = {
    "polarized_gaussian": ("width",),
    "two_mode": ("w0", "w2"),
}


@dataclass
class StudyConfig:
    """Everything a study run needs, with usable defaults throughout."""

    scenario: str = "polarized_baseline"
    # [grid]
    nx: int = 256
    half_width: float = 12.0
    num_modes: int = 32
    # [phase]
    phase_kind: str = "zero"
    phase_params: dict = field(default_factory=dict)
    # [amplitude]
    amplitude_kind: str = "polarized_gaussian"
    amplitude_params: dict = field(default_factory=dict)
    # [sweep]
    eps_values: tuple = (0.5, 0.4, 0.3, 0.22)
    alpha_values: tuple = (0.4, 0.28, 0.2, 0.14)
    eps_fixed: float = 0.35
    alpha_fixed: float = 0.2
    t_final: float = 0.5
    dt_safety: float = 1.0
    # [output]
    out_dir: str = "out"
    formats: tuple = ("csv", "json", "svg")


SCENARIOS = {
    "polarized_baseline": {},
    "two_mode": {"amplitude_kind": "two_mode"},
    "tilted": {"phase_kind": "linear", "phase_params": {"b": 0.5}},
    "focusing_phase": {"phase_kind": "quadratic",
                       "phase_params": {"c": -0.3},
                       "t_final": 0.35},
}


def scenario_config(name):
    """The default StudyConfig for a named scenario."""
    if name not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    overrides = {k: dict(v) if isinstance(v, dict) else v
                 for k, v in SCENARIOS[name].items()}
    return StudyConfig(scenario=name, **overrides)


def make_grid(cfg):
    return GridSpec(nx=cfg.nx, half_width=cfg.half_width,
                    num_modes=cfg.num_modes,
                    num_quad=QUAD_PER_MODE * cfg.num_modes)


def make_basis(cfg):
    return build_basis(num_modes=cfg.num_modes,
                       num_quad=QUAD_PER_MODE * cfg.num_modes)


def make_phase(cfg):
    if cfg.phase_kind not in PHASE_CATALOG:
        raise ConfigError(
            f"unknown phase kind {cfg.phase_kind!r}; "
            f"choose from {sorted(PHASE_CATALOG)}")
    allowed = PHASE_PARAM_KEYS[cfg.phase_kind]
    for key in cfg.phase_params:
        if key not in allowed:
            raise ConfigError(
                f"phase kind {cfg.phase_kind!r} takes no parameter {key!r}")
    return PHASE_CATALOG[cfg.phase_kind](**cfg.phase_params)


def make_amplitude(cfg):
    if cfg.amplitude_kind not in AMPLITUDE_KINDS:
        raise ConfigError(
            f"unknown amplitude kind {cfg.amplitude_kind!r}; "
            f"choose from {sorted(AMPLITUDE_KINDS)}")
    allowed = AMPLITUDE_PARAM_KEYS[cfg.amplitude_kind]
    for key in cfg.amplitude_params:
        if key not in allowed:
            raise ConfigError(
                f"amplitude kind {cfg.amplitude_kind!r} takes no "
                f"parameter {key!r}")
    maker = {"polarized_gaussian": polarized_gaussian, "two_mode": two_mode}
    return maker[cfg.amplitude_kind](**cfg.amplitude_params)


def validate_config(cfg):
    """Cross-field checks; returns cfg so calls can be chained."""
    make_grid(cfg)          # nx power of two, positive half_width, ...
    make_phase(cfg)
    make_amplitude(cfg)
    if not cfg.eps_values or any(not 0 < e <= 1 for e in cfg.eps_values):
        raise ConfigError(f"eps_values must lie in (0, 1], got {cfg.eps_values}")
    if not cfg.alpha_values or any(not 0 < a <= 1 for a in cfg.alpha_values):
        raise ConfigError(
            f"alpha_values must lie in (0, 1], got {cfg.alpha_values}")
    if not 0 < cfg.eps_fixed <= 1:
        raise ConfigError(f"eps_fixed must lie in (0, 1], got {cfg.eps_fixed}")
    if not 0 < cfg.alpha_fixed <= 1:
        raise ConfigError(
            f"alpha_fixed must lie in (0, 1], got {cfg.alpha_fixed}")
    if cfg.t_final <= 0:
        raise ConfigError(f"t_final must be positive, got {cfg.t_final}")
    if not 0 < cfg.dt_safety <= 1:
        raise ConfigError(f"dt_safety must be in (0, 1], got {cfg.dt_safety}")
    for fmt in cfg.formats:
        if fmt not in ("csv", "json", "svg"):
            raise ConfigError(f"unknown output format {fmt!r}")
    return cfg


_SECTION_KEYS = {
    "grid": ("nx", "half_width", "num_modes"),
    "sweep": ("eps_values", "alpha_values", "eps_fixed", "alpha_fixed",
              "t_final", "dt_safety"),
    "output": ("directory", "formats"),
}

_INT_KEYS = ("nx", "num_modes")
_FLOAT_KEYS = ("half_width", "eps_fixed", "alpha_fixed", "t_final",
               "dt_safety", "b", "c", "a", "w", "width", "w0", "w2")
_LIST_KEYS = ("eps_values", "alpha_values", "formats")


def _key_line(text, key):
    """Line number of the first assignment to `key`, for error messages."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        if re.match(rf"\s*{re.escape(key)}\s*=", line):
            return lineno
    return None


def _reject_unknown(text, section, table, allowed):
    for key in table:
        if key not in allowed:
            line = _key_line(text, key)
            at = f" (line {line})" if line else ""
            raise ConfigError(
                f"unknown key {key!r} in [{section}]{at}; "
                f"allowed: {sorted(allowed)}")


def _coerce(section, key, value):
    where = f"[{section}] {key}"
    if key in _INT_KEYS:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if key in _LIST_KEYS:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{where} must be a non-empty list, got {value!r}")
        if key == "formats":
            if not all(isinstance(v, str) for v in value):
                raise ConfigError(f"{where} must be a list of strings")
            return tuple(value)
        if any(isinstance(v, bool) or not isinstance(v, (int, float))
               for v in value):
            raise ConfigError(f"{where} must be a list of numbers")
        return tuple(float(v) for v in value)
    if not isinstance(value, str):
        raise ConfigError(f"{where} must be a string, got {value!r}")
    return value


def parse_config(text):
    """Parse config text into a validated StudyConfig."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    top = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    sections = {k: v for k, v in doc.items() if isinstance(v, dict)}
    _reject_unknown(text, "top level", top, ("scenario",))
    for name in sections:
        if name not in ("grid", "phase", "amplitude", "sweep", "output"):
            raise ConfigError(f"unknown section [{name}]")

    scenario = top.get("scenario", "polarized_baseline")
    if not isinstance(scenario, str):
        raise ConfigError(f"scenario must be a string, got {scenario!r}")
    cfg = scenario_config(scenario)

    for section in ("grid", "sweep"):
        table = sections.get(section, {})
        _reject_unknown(text, section, table, _SECTION_KEYS[section])
        for key, value in table.items():
            setattr(cfg, key, _coerce(section, key, value))

    for section, kinds in (("phase", PHASE_PARAM_KEYS),
                           ("amplitude", AMPLITUDE_PARAM_KEYS)):
        table = dict(sections.get(section, {}))
        if not table:
            continue
        kind = table.pop("kind", getattr(cfg, f"{section}_kind"))
        kind = _coerce(section, "kind", kind)
        if kind not in kinds:
            raise ConfigError(
                f"unknown {section} kind {kind!r}; choose from {sorted(kinds)}")
        _reject_unknown(text, section, table, kinds[kind])
        params = {k: _coerce(section, k, v) for k, v in table.items()}
        if kind != getattr(cfg, f"{section}_kind"):
            setattr(cfg, f"{section}_params", {})
        setattr(cfg, f"{section}_kind", kind)
        merged = dict(getattr(cfg, f"{section}_params"))
        merged.update(params)
        setattr(cfg, f"{section}_params", merged)

    table = sections.get("output", {})
    _reject_unknown(text, "output", table, _SECTION_KEYS["output"])
    if "directory" in table:
        cfg.out_dir = _coerce("output", "directory", table["directory"])
    if "formats" in table:
        cfg.formats = _coerce("output", "formats", table["formats"])

    return validate_config(cfg)


def load_config(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config file {path} is not UTF-8: {exc}") from None
    return parse_config(text)


def _toml_value(value):
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return repr(float(value))


def serialize_config(cfg):
    """Canonical text form: parse(serialize(cfg)) reproduces cfg exactly."""
    lines = [f"scenario = {_toml_value(cfg.scenario)}", ""]
    lines += ["[grid]",
              f"nx = {_toml_value(cfg.nx)}",
              f"half_width = {_toml_value(cfg.half_width)}",
              f"num_modes = {_toml_value(cfg.num_modes)}", ""]
    lines += ["[phase]", f"kind = {_toml_value(cfg.phase_kind)}"]
    lines += [f"{k} = {_toml_value(cfg.phase_params[k])}"
              for k in sorted(cfg.phase_params)]
    lines += ["", "[amplitude]", f"kind = {_toml_value(cfg.amplitude_kind)}"]
    lines += [f"{k} = {_toml_value(cfg.amplitude_params[k])}"
              for k in sorted(cfg.amplitude_params)]
    lines += ["", "[sweep]",
              f"eps_values = {_toml_value(cfg.eps_values)}",
              f"alpha_values = {_toml_value(cfg.alpha_values)}",
              f"eps_fixed = {_toml_value(cfg.eps_fixed)}",
              f"alpha_fixed = {_toml_value(cfg.alpha_fixed)}",
              f"t_final = {_toml_value(cfg.t_final)}",
              f"dt_safety = {_toml_value(cfg.dt_safety)}", ""]
    lines += ["[output]",
              f"directory = {_toml_value(cfg.out_dir)}",
              f"formats = {_toml_value(cfg.formats)}", ""]
    return "\n".join(lines)


def config_as_dict(cfg):
    return dataclasses.asdict(cfg)
