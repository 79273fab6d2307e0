"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored. Lists are comma separated.
Recognised keys::

    experiment        approx-mse | exact-completion | ordering-compare | lagrange
    output            path of the summary CSV (required)
    raw               true/false; also write <output stem>.raw.csv
    name              label used in the config_id column

    # cluster experiments
    assignment        regular-graph | cyclic
    m, degree         workers (= chunks) and load/replication factor
    graph_seed        first seed tried for the regular graph
    ramanujan_search  true: advance graph_seed until lambda_2 < 2 sqrt(degree-1)
    ordering          optimal | random   (random = best q_max of random_k draws)
    random_k          draws for the random ordering
    ells              compression factors, e.g. 1,2,3
    n_failures        failed workers per trial, or auto (= degree - ell)
    rate              exponential service rate per chunk
    times             trigger times T for the approximate experiment
    trials            trials per cell
    seed              master seed
    fixed_r           true: one R per ell for the whole experiment
    normalize         none | ell   (divide proposed residuals by ell in the summary)

    # lagrange
    degrees           polynomial degrees, e.g. 20,25,30
    precisions        decimal places kept, or full, e.g. 3,6,9,12,full
    trials, seed      as above
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import InvalidParameterError
from .simulator import SimConfig

KINDS = ("approx-mse", "exact-completion", "ordering-compare", "lagrange")


class ConfigError(InvalidParameterError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    output: str
    raw: bool = False
    name: str = ""
    sim: SimConfig | None = None
    normalize: str = "none"
    degrees: tuple[int, ...] = (20, 25, 30)
    precisions: tuple[int | None, ...] = (3, 6, 9, 12, None)
    trials: int = 100
    seed: int = 0

    def with_overrides(self, seed: int | None = None, raw: bool | None = None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed, sim=replace(cfg.sim, seed=seed) if cfg.sim else None)
        if raw:
            cfg = replace(cfg, raw=True)
        return cfg

    @property
    def raw_output(self) -> str:
        stem = self.output[:-4] if self.output.endswith(".csv") else self.output
        return stem + ".raw.csv"


_SIM_KEYS = {f.name for f in fields(SimConfig)}
_COMMON_KEYS = {"experiment", "output", "raw", "name"}
_SIM_ONLY = _SIM_KEYS | {"normalize"}
_LAGRANGE_ONLY = {"degrees", "precisions", "trials", "seed"}


def _parse_bool(v: str) -> bool:
    low = v.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true/false, got {v!r}")


def _parse_ints(v: str) -> tuple[int, ...]:
    return tuple(int(t) for t in v.split(",") if t.strip())


def _parse_floats(v: str) -> tuple[float, ...]:
    return tuple(float(t) for t in v.split(",") if t.strip())


def _parse_precisions(v: str) -> tuple[int | None, ...]:
    return tuple(None if t.strip().lower() == "full" else int(t) for t in v.split(",") if t.strip())


def _parse_failures(v: str) -> int | None:
    return None if v.lower() == "auto" else int(v)


_SIM_PARSERS = {
    "assignment": str, "m": int, "degree": int, "graph_seed": int,
    "ramanujan_search": _parse_bool, "ordering": str, "random_k": int,
    "ells": _parse_ints, "n_failures": _parse_failures, "rate": float,
    "times": _parse_floats, "trials": int, "seed": int, "fixed_r": _parse_bool,
}


def parse_config(text: str) -> ExperimentConfig:
    entries: dict[str, tuple[int, str]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {n}: expected 'key = value'")
        if key in entries:
            raise ConfigError(f"line {n}: duplicate key {key!r} (first set on line {entries[key][0]})")
        entries[key] = (n, value)

    def line_of(key):
        return entries[key][0] if key in entries else 0

    for key in ("experiment", "output"):
        if key not in entries:
            raise ConfigError(f"missing required key {key!r}")
    kind = entries["experiment"][1]
    if kind not in KINDS:
        raise ConfigError(f"line {line_of('experiment')}: unknown experiment {kind!r}")
    allowed = _COMMON_KEYS | (_LAGRANGE_ONLY if kind == "lagrange" else _SIM_ONLY)
    for key, (n, _) in entries.items():
        if key not in allowed:
            raise ConfigError(f"line {n}: key {key!r} not valid for experiment {kind!r}")

    def get(key, parser, default=None):
        if key not in entries:
            return default
        n, value = entries[key]
        try:
            return parser(value)
        except ValueError as exc:
            raise ConfigError(f"line {n}: bad value for {key!r}: {exc}") from None

    common = dict(experiment=kind, output=entries["output"][1],
                  raw=get("raw", _parse_bool, False), name=get("name", str, ""))
    if kind == "lagrange":
        try:
            return ExperimentConfig(**common,
                                    degrees=get("degrees", _parse_ints, (20, 25, 30)),
                                    precisions=get("precisions", _parse_precisions, (3, 6, 9, 12, None)),
                                    trials=get("trials", int, 100), seed=get("seed", int, 0))
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from None

    kwargs = {k: get(k, p) for k, p in _SIM_PARSERS.items() if k in entries}
    if kind == "exact-completion" and "n_failures" not in entries:
        kwargs["n_failures"] = None
    try:
        sim = SimConfig(**kwargs)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None
    normalize = get("normalize", str, "none")
    if normalize not in ("none", "ell"):
        raise ConfigError(f"line {line_of('normalize')}: normalize must be none or ell")
    return ExperimentConfig(**common, sim=sim, normalize=normalize,
                            trials=sim.trials, seed=sim.seed)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if v is None:
        return "full"
    return str(v)


def format_config(cfg: ExperimentConfig) -> str:
    lines = [f"experiment = {cfg.experiment}", f"output = {cfg.output}", f"raw = {_fmt(cfg.raw)}"]
    if cfg.name:
        lines.append(f"name = {cfg.name}")
    if cfg.sim is None:
        lines += [f"degrees = {_fmt(cfg.degrees)}", f"precisions = {_fmt(cfg.precisions)}",
                  f"trials = {cfg.trials}", f"seed = {cfg.seed}"]
    else:
        for f in fields(SimConfig):
            v = getattr(cfg.sim, f.name)
            text = "auto" if f.name == "n_failures" and v is None else _fmt(v)
            lines.append(f"{f.name} = {text}")
        lines.append(f"normalize = {cfg.normalize}")
    return "\n".join(lines) + "\n"
