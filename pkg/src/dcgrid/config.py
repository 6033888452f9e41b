"""Run configuration files.

The format is INI-style (sections of ``key = value`` lines, ``#`` comments).
Unit suffixes are part of every key name, lists are comma separated, and
unknown sections or keys are rejected with the offending line number.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .model import ControlParams, EssParams, MicrogridParams
from .simulator import ClassifyControls, SimControls
from .sweep import DEFAULT_C_RANGE, DEFAULT_RESOLUTION

# key -> (kind, required); kinds: float, floats, bool
SCHEMA: dict[str, dict[str, tuple[str, bool]]] = {
    "grid": {
        "s_base_watt": ("float", False),
        "v_nom_volt": ("float", False),
        "r_b_pu": ("floats", True),
        "l_b_henry": ("floats", True),
        "c_farad": ("float", True),
        "k_p_pu": ("float", True),
        "k_i_pu": ("float", True),
        "d_pu": ("float", True),
        "tau_seconds": ("float", True),
    },
    "operating_point": {
        "p_load_pu": ("float", True),
        "p_fc_pu": ("floats", False),
        "e_b_pu": ("floats", True),
        "v0_pu": ("float", False),
        "i0_pu": ("float", False),
    },
    "simulate": {
        "t_end_seconds": ("float", False),
        "max_t_end_seconds": ("float", False),
        "perturbation_pu": ("float", False),
        "rtol": ("float", False),
        "atol": ("float", False),
        "max_step_seconds": ("float", False),
        "sample_dt_seconds": ("float", False),
        "decay_factor": ("float", False),
        "growth_factor": ("float", False),
    },
    "step_load": {
        "delta_p_pu": ("float", False),
        "t_step_seconds": ("float", False),
        "t_end_seconds": ("float", False),
    },
    "sweep": {
        "c_min_farad": ("float", False),
        "c_max_farad": ("float", False),
        "c_resolution_farad": ("float", False),
        "rmax_c_step_farad": ("float", False),
        "l_values_henry": ("floats", False),
        "d_values_pu": ("floats", False),
        "tau_candidates_seconds": ("floats", False),
        "bisect": ("bool", False),
    },
}


@dataclass(frozen=True)
class SimSettings:
    t_end: float = 40.0
    perturbation: float = 1e-2
    rtol: float = 1e-7
    atol: float = 1e-9
    max_step: float | None = None
    sample_dt: float = 1e-3
    decay_factor: float = 1e-3
    growth_factor: float = 10.0
    max_t_end: float = 640.0

    def sim_controls(self) -> SimControls:
        return SimControls(rtol=self.rtol, atol=self.atol, max_step=self.max_step,
                           sample_dt=self.sample_dt)

    def classify_controls(self) -> ClassifyControls:
        return ClassifyControls(perturbation=self.perturbation, t_end=self.t_end,
                                decay_factor=self.decay_factor,
                                growth_factor=self.growth_factor,
                                sim=self.sim_controls(),
                                max_t_end=max(self.max_t_end, self.t_end))


@dataclass(frozen=True)
class StepSettings:
    delta_p: float = 0.0
    t_step: float = 0.1
    t_end: float = 20.0


@dataclass(frozen=True)
class SweepSettings:
    c_min: float = DEFAULT_C_RANGE[0]
    c_max: float = DEFAULT_C_RANGE[1]
    c_resolution: float = DEFAULT_RESOLUTION
    rmax_c_step: float | None = None
    l_values: tuple[float, ...] = (0.1e-3, 0.2e-3, 0.5e-3, 1e-3, 2e-3, 5e-3)
    d_values: tuple[float, ...] = (0.1, 0.2, 0.5)
    tau_candidates: tuple[float, ...] = (0.1e-3, 0.3e-3, 0.5e-3, 0.7e-3, 0.9e-3, 1e-3)
    bisect: bool = False


@dataclass(frozen=True)
class RunConfig:
    params: MicrogridParams
    simulate: SimSettings = field(default_factory=SimSettings)
    step_load: StepSettings = field(default_factory=StepSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    source: str = "<memory>"


def _line_of(text: str, section: str, key: str | None = None) -> int:
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section:
            k = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            if k == key:
                return lineno
    return 0


def _convert(kind: str, raw: str, where: str):
    try:
        if kind == "float":
            return float(raw)
        if kind == "floats":
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if not items:
                raise ValueError("empty list")
            return tuple(float(s) for s in items)
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise AssertionError(kind)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    values: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}:{_line_of(text, section)}: unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            where = f"{source}:{_line_of(text, section, key)}: [{section}] {key}"
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where}: unknown key")
            values[section][key] = _convert(SCHEMA[section][key][0], raw, where)
    for section, keys in SCHEMA.items():
        for key, (_, required) in keys.items():
            if required and key not in values.get(section, {}):
                raise ConfigError(f"{source}: missing required key [{section}] {key}")

    try:
        return _build(values, source)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, source=str(path))


def _broadcast(name: str, vals: tuple[float, ...], n: int) -> tuple[float, ...]:
    if len(vals) == 1:
        return vals * n
    if len(vals) != n:
        raise ValueError(f"{name} has {len(vals)} entries but e_b_pu defines {n} ESSs")
    return vals


def _build(v: dict[str, dict[str, object]], source: str) -> RunConfig:
    grid = v["grid"]
    op = v["operating_point"]
    e_b = op["e_b_pu"]
    n = len(e_b)
    r_b = _broadcast("r_b_pu", grid["r_b_pu"], n)
    l_b = _broadcast("l_b_henry", grid["l_b_henry"], n)
    params = MicrogridParams(
        ess=tuple(EssParams(e, r, l) for e, r, l in zip(e_b, r_b, l_b)),
        control=ControlParams(
            k_p=grid["k_p_pu"], k_i=grid["k_i_pu"], droop=grid["d_pu"],
            v_0=op.get("v0_pu", 1.0), i_0=op.get("i0_pu", 0.0),
            tau=grid["tau_seconds"]),
        p_fc=op.get("p_fc_pu", ()),
        p_load=op["p_load_pu"],
        c=grid["c_farad"],
        s_base=grid.get("s_base_watt", 1e6),
        v_nom=grid.get("v_nom_volt", 750.0),
    )

    s = v.get("simulate", {})
    sim_defaults = SimSettings()
    sim = SimSettings(
        t_end=s.get("t_end_seconds", sim_defaults.t_end),
        perturbation=s.get("perturbation_pu", sim_defaults.perturbation),
        rtol=s.get("rtol", sim_defaults.rtol),
        atol=s.get("atol", sim_defaults.atol),
        max_step=s.get("max_step_seconds"),
        sample_dt=s.get("sample_dt_seconds", sim_defaults.sample_dt),
        decay_factor=s.get("decay_factor", sim_defaults.decay_factor),
        growth_factor=s.get("growth_factor", sim_defaults.growth_factor),
        max_t_end=s.get("max_t_end_seconds", sim_defaults.max_t_end),
    )
    if not (sim.t_end > 0 and sim.rtol > 0 and sim.atol > 0 and sim.sample_dt > 0):
        raise ValueError("[simulate] horizon, tolerances and sample step must be positive")
    if sim.max_step is not None and not sim.max_step > 0:
        raise ValueError("[simulate] max_step_seconds must be positive")

    st = v.get("step_load", {})
    step_defaults = StepSettings()
    step = StepSettings(
        delta_p=st.get("delta_p_pu", step_defaults.delta_p),
        t_step=st.get("t_step_seconds", step_defaults.t_step),
        t_end=st.get("t_end_seconds", step_defaults.t_end),
    )
    if not 0 <= step.t_step < step.t_end:
        raise ValueError("[step_load] need 0 <= t_step_seconds < t_end_seconds")

    sw = v.get("sweep", {})
    sweep_defaults = SweepSettings()
    sweep = SweepSettings(
        c_min=sw.get("c_min_farad", sweep_defaults.c_min),
        c_max=sw.get("c_max_farad", sweep_defaults.c_max),
        c_resolution=sw.get("c_resolution_farad", sweep_defaults.c_resolution),
        rmax_c_step=sw.get("rmax_c_step_farad"),
        l_values=sw.get("l_values_henry", sweep_defaults.l_values),
        d_values=sw.get("d_values_pu", sweep_defaults.d_values),
        tau_candidates=sw.get("tau_candidates_seconds", sweep_defaults.tau_candidates),
        bisect=sw.get("bisect", sweep_defaults.bisect),
    )
    if not 0 < sweep.c_min <= sweep.c_max or not sweep.c_resolution > 0:
        raise ValueError("[sweep] need 0 < c_min_farad <= c_max_farad and c_resolution_farad > 0")
    if any(not t > 0 for t in sweep.l_values + sweep.d_values + sweep.tau_candidates):
        raise ValueError("[sweep] list entries must be positive")
    return RunConfig(params=params, simulate=sim, step_load=step, sweep=sweep, source=source)


def _f(x: float) -> str:
    return repr(float(x))


def _fl(xs) -> str:
    return ", ".join(_f(x) for x in xs)


def dump_config(cfg: RunConfig) -> str:
    """Canonical text form; loading it back gives an equal configuration."""
    p = cfg.params
    c = p.control
    lines = [
        "[grid]",
        f"s_base_watt = {_f(p.s_base)}",
        f"v_nom_volt = {_f(p.v_nom)}",
        f"r_b_pu = {_fl(e.r_b for e in p.ess)}",
        f"l_b_henry = {_fl(e.l_b for e in p.ess)}",
        f"c_farad = {_f(p.c)}",
        f"k_p_pu = {_f(c.k_p)}",
        f"k_i_pu = {_f(c.k_i)}",
        f"d_pu = {_f(c.droop)}",
        f"tau_seconds = {_f(c.tau)}",
        "",
        "[operating_point]",
        f"p_load_pu = {_f(p.p_load)}",
    ]
    if p.p_fc:
        lines.append(f"p_fc_pu = {_fl(p.p_fc)}")
    lines += [
        f"e_b_pu = {_fl(e.e_b for e in p.ess)}",
        f"v0_pu = {_f(c.v_0)}",
        f"i0_pu = {_f(c.i_0)}",
        "",
        "[simulate]",
        f"t_end_seconds = {_f(cfg.simulate.t_end)}",
        f"perturbation_pu = {_f(cfg.simulate.perturbation)}",
        f"rtol = {_f(cfg.simulate.rtol)}",
        f"atol = {_f(cfg.simulate.atol)}",
    ]
    if cfg.simulate.max_step is not None:
        lines.append(f"max_step_seconds = {_f(cfg.simulate.max_step)}")
    lines += [
        f"sample_dt_seconds = {_f(cfg.simulate.sample_dt)}",
        f"decay_factor = {_f(cfg.simulate.decay_factor)}",
        f"growth_factor = {_f(cfg.simulate.growth_factor)}",
        f"max_t_end_seconds = {_f(cfg.simulate.max_t_end)}",
        "",
        "[step_load]",
        f"delta_p_pu = {_f(cfg.step_load.delta_p)}",
        f"t_step_seconds = {_f(cfg.step_load.t_step)}",
        f"t_end_seconds = {_f(cfg.step_load.t_end)}",
        "",
        "[sweep]",
        f"c_min_farad = {_f(cfg.sweep.c_min)}",
        f"c_max_farad = {_f(cfg.sweep.c_max)}",
        f"c_resolution_farad = {_f(cfg.sweep.c_resolution)}",
    ]
    if cfg.sweep.rmax_c_step is not None:
        lines.append(f"rmax_c_step_farad = {_f(cfg.sweep.rmax_c_step)}")
    lines += [
        f"l_values_henry = {_fl(cfg.sweep.l_values)}",
        f"d_values_pu = {_fl(cfg.sweep.d_values)}",
        f"tau_candidates_seconds = {_fl(cfg.sweep.tau_candidates)}",
        f"bisect = {'true' if cfg.sweep.bisect else 'false'}",
    ]
    return "\n".join(lines) + "\n"
