"""Line-oriented run configuration: `key = value` entries under [section]
headers, with `#` comments.  Unknown keys and sections are hard errors,
reported with line numbers.  serialize() round-trips losslessly (floats
printed with 17 significant digits)."""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields

from .errors import InputError
from .grid import GridSpec

EXPERIMENTS = ("verify", "decay", "absorb", "kicks", "diag", "probe")


@dataclass(frozen=True)
class SimBlock:
    nu: float = 1.0
    dt_max: float = 0.01
    cfl: float = 0.4
    t_end: float = 1.0
    forcing_mode: str = "zero"

    def validate(self):
        if self.nu <= 0:
            raise InputError("sim.nu must be positive")
        if not (0.0 < self.cfl <= 1.0):
            raise InputError("sim.cfl must lie in (0, 1]")
        if self.dt_max <= 0:
            raise InputError("sim.dt_max must be positive")
        if self.t_end < 0:
            raise InputError("sim.t_end must be nonnegative")
        if self.forcing_mode not in ("zero", "constant"):
            raise InputError("sim.forcing_mode must be 'zero' or 'constant'")


@dataclass(frozen=True)
class KickBlock:
    T: float = 0.0          # 0 means: measure T_V(4R, R) before running
    R: float = 0.25
    n_modes: int = 2
    seed: int = 0
    N: int = 300
    burn_in: int = 50

    def validate(self):
        if self.T < 0:
            raise InputError("kick.T must be nonnegative (0 = auto-measure)")
        if self.R < 0:
            raise InputError("kick.R must be nonnegative")
        if not (0 <= self.burn_in < self.N):
            raise InputError("kick.burn_in must satisfy 0 <= burn_in < N")
        if self.n_modes < 1:
            raise InputError("kick.n_modes must be >= 1")


@dataclass(frozen=True)
class ExperimentBlock:
    R: float = 1.0
    eps: float = 1e-3
    n_ic: int = 5
    n_chains: int = 10
    f_H2: float = 0.1
    window_frac: float = 0.3
    eta: float = 0.05
    deltas: tuple[float, ...] = (1e-2, 1e-3, 1e-4, 1e-5)
    probe_t: float = 0.5
    input: str = ""

    def validate(self):
        if self.R < 0 or self.eps <= 0 or self.eta <= 0:
            raise InputError("experiment.R must be >= 0; eps, eta must be > 0")
        if self.n_ic < 1 or self.n_chains < 1:
            raise InputError("experiment.n_ic and n_chains must be >= 1")
        if not (0.0 < self.window_frac <= 1.0):
            raise InputError("experiment.window_frac must lie in (0, 1]")
        if any(d <= 0 for d in self.deltas):
            raise InputError("experiment.deltas must be positive")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    grid: GridSpec
    sim: SimBlock
    kick: KickBlock
    exp: ExperimentBlock
    output_dir: str = "pe3d_out"
    record_every: int = 1

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise InputError(f"experiment must be one of {EXPERIMENTS}")
        if self.record_every < 1:
            raise InputError("record_every must be >= 1")
        self.sim.validate()
        self.kick.validate()
        self.exp.validate()


def _parse_floats(s: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in s.split(","))
    except ValueError as e:
        raise InputError(str(e))


_TOP_SCHEMA = {
    "experiment": str,
    "output_dir": str,
    "record_every": int,
}
_SECTION_SCHEMA = {
    "grid": {"L1": float, "L2": float, "h": float,
             "n1": int, "n2": int, "nz": int},
    "sim": {"nu": float, "dt_max": float, "cfl": float, "t_end": float,
            "forcing_mode": str},
    "kick": {"T": float, "R": float, "n_modes": int, "seed": int,
             "N": int, "burn_in": int},
    "experiment": {"R": float, "eps": float, "n_ic": int, "n_chains": int,
                   "f_H2": float, "window_frac": float, "eta": float,
                   "deltas": _parse_floats, "probe_t": float, "input": str},
}


def parse_config(text: str) -> RunConfig:
    top: dict = {}
    sections: dict[str, dict] = {name: {} for name in _SECTION_SCHEMA}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTION_SCHEMA:
                raise InputError(f"line {lineno}: unknown section [{name}]")
            current = name
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        schema = _TOP_SCHEMA if current is None else _SECTION_SCHEMA[current]
        where = "top level" if current is None else f"section [{current}]"
        if key in (top if current is None else sections[current]):
            raise InputError(f"line {lineno}: duplicate key {key!r} in {where}")
        if key not in schema:
            raise InputError(f"line {lineno}: unknown key {key!r} in {where}")
        conv = schema[key]
        try:
            parsed = conv(value)
        except (ValueError, InputError):
            raise InputError(
                f"line {lineno}: cannot parse {key!r} value {value!r} as {getattr(conv, '__name__', 'value')}")
        (top if current is None else sections[current])[key] = parsed

    if "experiment" not in top:
        raise InputError("missing required top-level key 'experiment'")
    try:
        cfg = RunConfig(
            experiment=top["experiment"],
            output_dir=top.get("output_dir", "pe3d_out"),
            record_every=top.get("record_every", 1),
            grid=GridSpec(**sections["grid"]),
            sim=SimBlock(**sections["sim"]),
            kick=KickBlock(**sections["kick"]),
            exp=ExperimentBlock(**sections["experiment"]),
        )
        cfg.validate()
    except InputError:
        raise
    return cfg


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, tuple):
        return ",".join(f"{x:.17g}" for x in v)
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    lines = [f"experiment = {cfg.experiment}",
             f"output_dir = {cfg.output_dir}",
             f"record_every = {cfg.record_every}", ""]
    for section, obj in (("grid", cfg.grid), ("sim", cfg.sim),
                         ("kick", cfg.kick), ("experiment", cfg.exp)):
        lines.append(f"[{section}]")
        for f in dc_fields(obj):
            lines.append(f"{f.name} = {_fmt(getattr(obj, f.name))}")
        lines.append("")
    return "\n".join(lines)
