"""Flat ``key = value`` experiment configuration.

One key per line, ``#`` starts a comment, blank lines are ignored.  Every key
is optional; unknown keys are an error.  Lists are comma separated.

Keys (defaults in parentheses):

solver      s (0.25) kappa (1.0) n (128) t_end (1.0) cfl (0.4) dt_max (0.05) dealias (true)
modulus     modulus (search | explicit), delta gamma r alpha (explicit only; r and
            alpha default to the regime midpoints when omitted)
constants   A (1.0) C_diss (1.0) C_prime (1.0); kappa is shared with the solver
initial     init_kind (random) init_modes (3) init_amplitude (0.01)
            init_grad_target (none) seed (0)
output      cadence (0.1, time between samples) snapshot_every (10, in samples)
search      search_budget (24)
kernel      kernel_s (0.25,0.4,0.5) kernel_h (1.0,3.7) kernel_variant (printed)
            kernel_n (32)
scan        scan_delta (0.1,0.05,0.025,0.0125) scan_gamma_fraction (0.25,0.5,1.0)
            scan_per_decade (8)
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .initial import InitialDataSpec
from .modulus import CertificateConstants, KnvModulus, default_exponents
from .solver import SolverConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OutputSpec:
    cadence: float = 0.1
    snapshot_every: int = 10

    def __post_init__(self):
        if not self.cadence > 0:
            raise ConfigError("cadence must be positive")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be non-negative")


@dataclass(frozen=True)
class KernelCheckSpec:
    s_values: tuple[float, ...] = (0.25, 0.4, 0.5)
    h_values: tuple[float, ...] = (1.0, 3.7)
    variant: str = "printed"
    n: int = 32


@dataclass(frozen=True)
class ScanSpec:
    deltas: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    gamma_fractions: tuple[float, ...] = (0.25, 0.5, 1.0)
    per_decade: int = 8


@dataclass(frozen=True)
class ExperimentConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    modulus: KnvModulus | None = None  # None: find one by search
    constants: CertificateConstants = field(default_factory=CertificateConstants)
    initial: InitialDataSpec = field(default_factory=lambda: InitialDataSpec(amplitude=0.01))
    output: OutputSpec = field(default_factory=OutputSpec)
    search_budget: int = 24
    kernel: KernelCheckSpec = field(default_factory=KernelCheckSpec)
    scan: ScanSpec = field(default_factory=ScanSpec)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, initial=dataclasses.replace(self.initial, seed=seed))


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def _opt_float(text: str):
    return None if text.strip().lower() == "none" else float(text)


# key -> (section, attribute, parser)
_KEYS = {
    "s": ("solver", "s", float),
    "kappa": ("solver", "kappa", float),
    "n": ("solver", "n", int),
    "t_end": ("solver", "t_end", float),
    "cfl": ("solver", "cfl", float),
    "dt_max": ("solver", "dt_max", float),
    "dealias": ("solver", "dealias", _bool),
    "A": ("constants", "A", float),
    "C_diss": ("constants", "C_diss", float),
    "C_prime": ("constants", "C_prime", float),
    "init_kind": ("initial", "kind", str),
    "init_modes": ("initial", "modes", int),
    "init_amplitude": ("initial", "amplitude", float),
    "init_grad_target": ("initial", "grad_target", _opt_float),
    "seed": ("initial", "seed", int),
    "cadence": ("output", "cadence", float),
    "snapshot_every": ("output", "snapshot_every", int),
    "search_budget": (None, "search_budget", int),
    "kernel_s": ("kernel", "s_values", _floats),
    "kernel_h": ("kernel", "h_values", _floats),
    "kernel_variant": ("kernel", "variant", str),
    "kernel_n": ("kernel", "n", int),
    "scan_delta": ("scan", "deltas", _floats),
    "scan_gamma_fraction": ("scan", "gamma_fractions", _floats),
    "scan_per_decade": ("scan", "per_decade", int),
}
_MODULUS_KEYS = ("delta", "gamma", "r", "alpha")


def parse_config(text: str) -> ExperimentConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS and key not in _MODULUS_KEYS and key != "modulus":
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    sections: dict[str | None, dict] = {k: {} for k in
                                        ("solver", "constants", "initial", "output", "kernel", "scan", None)}
    try:
        for key, value in raw.items():
            if key in _KEYS:
                sec, attr, conv = _KEYS[key]
                sections[sec][attr] = conv(value)
        sections["constants"]["kappa"] = sections["solver"].get("kappa", 1.0)
        sections["initial"].setdefault("amplitude", 0.01)
        solver = SolverConfig(**sections["solver"])
        mode = raw.get("modulus", "search")
        if mode not in ("search", "explicit"):
            raise ConfigError(f"modulus must be 'search' or 'explicit', got {mode!r}")
        modulus = None
        if mode == "explicit":
            r0, a0 = default_exponents(solver.s)
            if "delta" not in raw or "gamma" not in raw:
                raise ConfigError("explicit modulus needs delta and gamma")
            modulus = KnvModulus(float(raw["delta"]), float(raw["gamma"]),
                                 float(raw.get("r", r0)), float(raw.get("alpha", a0)), solver.s)
        elif any(k in raw for k in _MODULUS_KEYS):
            raise ConfigError("delta/gamma/r/alpha require modulus = explicit")
        return ExperimentConfig(
            solver=solver,
            modulus=modulus,
            constants=CertificateConstants(**sections["constants"]),
            initial=InitialDataSpec(**sections["initial"]),
            output=OutputSpec(**sections["output"]),
            kernel=KernelCheckSpec(**sections["kernel"]),
            scan=ScanSpec(**sections["scan"]),
            **sections[None],
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, (sec, attr, _) in _KEYS.items():
        obj = cfg if sec is None else getattr(cfg, sec)
        lines.append(f"{key} = {_fmt(getattr(obj, attr))}")
    if cfg.modulus is None:
        lines.append("modulus = search")
    else:
        lines.append("modulus = explicit")
        for k in _MODULUS_KEYS:
            lines.append(f"{k} = {_fmt(float(getattr(cfg.modulus, k)))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

