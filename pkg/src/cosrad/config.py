"""Run configuration: an INI file with a single ``[run]`` section of ``key = value`` lines."""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields

from .errors import ConfigError

SUBCOMMANDS = ("gen-graph", "walk", "percolate", "cospectral", "two-three", "walk-growth", "scan-exponents")
SECTION = "run"


@dataclass
class RunConfig:
    subcommand: str = ""
    family: str = "free(2)"
    subgroup: str = "trivial"
    hold: float = 0.0
    weights: str = ""
    R: int = 8
    n_max: int = 10
    steps: int = 4
    start: str = ""
    samples: int = 100
    seed: int | None = None
    p: float = 0.5
    p_grid: str = "0:1:0.1"
    target: str = "identity"
    mode: str = "quenched"
    method: str = "auto"
    refine_steps: int = 0
    refine_target: str = "ram"
    dist_grid: str = ""
    relation: str = "demo"
    kernel_mode: str = "endpoint"
    k_max: int = 30
    graph: str = ""
    spectral: bool = False
    out: str = "out"
    workers: int = 1
    strict: bool = False
    max_vertices: int = 50_000_000

    def to_ini(self, include_out: bool = True) -> str:
        lines = [f"[{SECTION}]"]
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or (f.name == "out" and not include_out):
                continue
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of every setting except the output directory."""
        return hashlib.sha256(self.to_ini(include_out=False).encode("utf-8")).hexdigest()

    @property
    def stochastic(self) -> bool:
        sc = self.subcommand
        return (sc in ("percolate", "scan-exponents")
                or (sc == "cospectral" and self.mode == "annealed")
                or (sc == "walk" and self.method == "monte-carlo"))

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}", f"[{SECTION}] subcommand")
        if self.stochastic and self.seed is None:
            raise ConfigError("a seed is required for stochastic subcommands", f"[{SECTION}] seed")
        for name in ("R", "n_max", "steps", "samples", "k_max", "workers", "max_vertices", "refine_steps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative", f"[{SECTION}] {name}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]", f"[{SECTION}] p")
        if not 0.0 <= self.hold <= 1.0:
            raise ConfigError("hold must lie in [0, 1]", f"[{SECTION}] hold")
        if self.mode not in ("quenched", "annealed"):
            raise ConfigError("mode must be quenched or annealed", f"[{SECTION}] mode")
        try:
            parse_grid(self.p_grid)
        except ValueError as exc:
            raise ConfigError(str(exc), f"[{SECTION}] p_grid") from None
        return self


def _convert(f, raw: str, location: str):
    kind = f.type if isinstance(f.type, str) else f.type.__name__
    try:
        if kind.startswith("int"):
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
    except ValueError as exc:
        raise ConfigError(f"bad value for {f.name}: {exc}", location) from None
    return raw


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", f"{source}:{lineno}") from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], source) from None
    extra = [s for s in cp.sections() if s != SECTION]
    if extra:
        raise ConfigError(f"unknown section [{extra[0]}]", source)
    known = {f.name: f for f in fields(RunConfig)}
    values = {}
    if cp.has_section(SECTION):
        for key, raw in cp.items(SECTION):
            loc = f"{source} [{SECTION}] {key}"
            if key not in known:
                raise ConfigError(f"unknown key {key!r}", loc)
            values[key] = _convert(known[key], raw, loc)
    return RunConfig(**values)


def parse_overrides(items) -> dict:
    """Converted values for ``key=value`` strings; later items win."""
    known = {f.name: f for f in fields(RunConfig)}
    out = {}
    for item in items:
        key, raw = (x.strip() for x in item.split("=", 1))
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", f"override {item!r}")
        out[key] = _convert(known[key], raw, f"override {item!r}")
    return out


def read_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path))


def parse_grid(spec: str) -> list[float]:
    """``"a:b:step"`` (inclusive) or a comma-separated list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError("range grids look like start:stop:step")
        a, b, h = (float(x) for x in parts)
        if h <= 0 or b < a:
            raise ValueError("range grid needs step > 0 and stop >= start")
        n = int(round((b - a) / h))
        grid = [round(a + i * h, 12) for i in range(n + 1)]
        if grid[-1] < b - 1e-12:
            grid.append(b)
        return grid
    out = [float(x) for x in spec.split(",") if x.strip()]
    if not out:
        raise ValueError("empty grid")
    return out
