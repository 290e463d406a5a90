"""Run configuration: bracketed-section key-value text files.

The format is deliberately the plainest thing that round-trips through a
diff: `[section]` headers, one `key = value` per line.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, asdict

from .errors import ConfigError
from .grid import BoundarySpec, Grid
from .model_full import BOLTZMANN, CONSTANT, PhysParams


@dataclass
class RunConfig:
    # [grid]
    nx: int = 32
    ny: int = 1
    nz: int = 33
    Lx: float = 1.0
    Ly: float = 1.0
    Lz: float = 1.0
    # [physics]
    mu: float = 0.1
    lam: float = 0.0
    c2: float = 1.0
    alpha: float = 1.0
    pressure: str = "linear"
    background: str = "constant:1.0"
    charge_sign: str = "-"
    # [bc]
    psi_lo: str = "dirichlet"
    psi_hi: str = "dirichlet"
    # [model]
    formulation: str = "full"      # full | reduced | both
    bipolar: bool = False
    # [time]
    t_end: float = 5.0
    cfl_advective: float = 0.4
    cfl_diffusive: float = 0.25
    dt_max: float = 1.0
    # [init]
    amplitude: float = 1e-2
    seed: int = 0
    profile: str = "mode"          # mode | bump
    kx: int = 1
    ky: int = 0
    # [output]
    diag_every: int = 10
    snapshot_every: int = 0
    out_dir: str = "out"
    # [poisson]
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    mean_tol: float = 1e-5

    def __post_init__(self):
        if self.formulation not in ("full", "reduced", "both"):
            raise ConfigError(f"formulation must be full|reduced|both, got {self.formulation!r}")
        if self.profile not in ("mode", "bump"):
            raise ConfigError(f"profile must be mode|bump, got {self.profile!r}")
        for name in ("t_end", "cfl_advective", "cfl_diffusive", "dt_max", "Lx", "Ly", "Lz"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.amplitude < 0:
            raise ConfigError("amplitude must be nonnegative")

    def grid(self) -> Grid:
        try:
            return Grid(self.nx, self.ny, self.nz, self.Lx, self.Ly, self.Lz)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def bc(self) -> BoundarySpec:
        try:
            return BoundarySpec(self.psi_lo, self.psi_hi)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def phys(self, charge_sign: str | None = None) -> PhysParams:
        bg = self.background
        if bg == "boltzmann":
            mode, rho_bar = BOLTZMANN, 1.0
        elif bg.startswith("constant"):
            mode = CONSTANT
            rho_bar = float(bg.split(":", 1)[1]) if ":" in bg else 1.0
        else:
            raise ConfigError(f"unknown background {bg!r}")
        try:
            return PhysParams(self.mu, self.lam, self.c2, self.alpha,
                              self.pressure, mode, rho_bar,
                              charge_sign or self.charge_sign)
        except ValueError as e:
            raise ConfigError(str(e)) from e


_SECTION_KEYS = {
    "grid": ["nx", "ny", "nz", "Lx", "Ly", "Lz"],
    "physics": ["mu", "lam", "c2", "alpha", "pressure", "background", "charge_sign"],
    "bc": ["psi_lo", "psi_hi"],
    "model": ["formulation", "bipolar"],
    "time": ["t_end", "cfl_advective", "cfl_diffusive", "dt_max"],
    "init": ["amplitude", "seed", "profile", "kx", "ky"],
    "output": ["diag_every", "snapshot_every", "out_dir"],
    "poisson": ["newton_tol", "newton_max_iter", "mean_tol"],
}

_ALIASES = {"lambda": "lam"}


def load_config(path: str) -> RunConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    kwargs = {}
    defaults = RunConfig()
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            key = _ALIASES.get(key, key)
            # configparser lowercases keys; recover the canonical spelling
            canon = {k.lower(): k for k in _SECTION_KEYS[section]}
            if key.lower() not in canon:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            name = canon[key.lower()]
            kind = type(getattr(defaults, name))
            try:
                if kind is bool:
                    kwargs[name] = raw.strip().lower() in ("1", "true", "yes", "on")
                else:
                    kwargs[name] = kind(raw)
            except ValueError as e:
                raise ConfigError(f"bad value for {name}: {raw!r}") from e
    return RunConfig(**kwargs)


def dump_config(cfg: RunConfig) -> str:
    vals = asdict(cfg)
    lines = []
    for section, keys in _SECTION_KEYS.items():
        lines.append(f"[{section}]")
        for k in keys:
            key = "lambda" if k == "lam" else k
            lines.append(f"{key} = {vals[k]}")
        lines.append("")
    return "\n".join(lines)
