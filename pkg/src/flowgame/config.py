"""Plain-text run configuration.

One ``key = value`` pair per line, ``#`` starts a comment. Game parameters
use the field names of :class:`GameParams`; a few dotted aliases are
accepted (``ad.strategy``, ``ta.fingerprint``, ``detector.variant``). Corpus
and density settings live under ``traces.*`` and ``density.*``::

    n = 20
    A_C = 0.25
    ad.strategy = optimal
    traces.scenario = a
    traces.seed = 0
    # traces.ipd = ssh_ipds.txt     (measured traces replace the scenario)
    density.dy_bandwidth = auto
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidInputError
from .harness import (Corpus, GameParams, fit_densities, scenario_density,
                      synthetic_corpus)
from .traffic import read_delay_trace, read_ipd_trace

ALIASES = {
    "ad.strategy": "ad_strategy",
    "ad.sigma": "sigma",
    "ad.P_A": "P_A",
    "ad.A_C": "A_C",
    "ta.fingerprint": "fingerprint",
    "ta.W_C": "W_C",
    "detector.variant": "detector_variant",
    "detector.denominator": "denominator",
    "detector.aggregate": "aggregate",
    "detector.belief_mode": "belief_mode",
}


@dataclass(frozen=True)
class TraceConfig:
    scenario: str = "a"
    seed: int = 0
    ipd: str | None = None
    path1: str | None = None
    path2: str | None = None


@dataclass(frozen=True)
class DensityConfig:
    seed: int = 0
    flows: int = 400
    max_centers: int = 4000
    dy_bandwidth: float | str | None = None  # None means the scenario default
    dd_bandwidth: float | str = "auto"
    dy_floor: float | None = None  # None means the scenario default


@dataclass(frozen=True)
class RunConfig:
    params: GameParams = field(default_factory=GameParams)
    traces: TraceConfig = field(default_factory=TraceConfig)
    density: DensityConfig = field(default_factory=DensityConfig)

    def items(self):
        """Every setting as (key, value) in a stable order."""
        out = [(f.name, getattr(self.params, f.name))
               for f in dataclasses.fields(GameParams)]
        out += [(f"traces.{f.name}", getattr(self.traces, f.name))
                for f in dataclasses.fields(TraceConfig)]
        out += [(f"density.{f.name}", getattr(self.density, f.name))
                for f in dataclasses.fields(DensityConfig)]
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {_format(v)}\n" for k, v in self.items())

    def with_params(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, params=self.params.replace(**changes))

    def load_corpus(self) -> Corpus:
        tc = self.traces
        given = [tc.ipd, tc.path1, tc.path2]
        if any(given) and not all(given):
            raise InvalidInputError("traces.ipd, traces.path1 and traces.path2 go together")
        if all(given):
            return Corpus.from_traces(read_ipd_trace(tc.ipd),
                                      read_delay_trace(tc.path1),
                                      read_delay_trace(tc.path2))
        return synthetic_corpus(tc.scenario, tc.seed)

    def fit(self, corpus: Corpus):
        dc = self.density
        tc = self.traces
        # scenario defaults only apply to the synthetic corpus they describe
        measured = all([tc.ipd, tc.path1, tc.path2])
        defaults = {} if measured else scenario_density(tc.scenario)
        extra = {"dy_bandwidth": dc.dy_bandwidth, "dy_floor": dc.dy_floor}
        kwargs = {**defaults, **{k: v for k, v in extra.items() if v is not None}}
        return fit_densities(corpus, n=self.params.n, seed=dc.seed, flows=dc.flows,
                             max_centers=dc.max_centers,
                             dd_bandwidth=dc.dd_bandwidth, **kwargs)


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(raw: str, annotation: str, key: str):
    text = raw.strip()
    optional = "None" in annotation
    if optional and text.lower() in ("none", ""):
        return None
    try:
        if annotation.startswith("bool"):
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if annotation.startswith("int"):
            return int(text)
        if annotation.startswith("float | str"):
            return text if text == "auto" else float(text)
        if annotation.startswith("float"):
            return float(text)
    except ValueError:
        raise InvalidInputError(f"bad value for {key}: {raw!r}") from None
    return text


def _fields(cls):
    return {f.name: f.type for f in dataclasses.fields(cls)}


def parse_config(text: str, base_dir=None) -> RunConfig:
    """Parse config text; relative trace paths are taken from ``base_dir``."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise InvalidInputError(f"malformed config: {exc}") from None
    groups = {"params": {}, "traces": {}, "density": {}}
    targets = {"params": _fields(GameParams), "traces": _fields(TraceConfig),
               "density": _fields(DensityConfig)}
    for key, raw in parser["run"].items():
        name = ALIASES.get(key, key)
        if name.startswith("traces."):
            group, name = "traces", name[len("traces."):]
        elif name.startswith("density."):
            group, name = "density", name[len("density."):]
        else:
            group = "params"
        if name not in targets[group]:
            raise InvalidInputError(f"unknown config key {key!r}")
        groups[group][name] = _coerce(raw, str(targets[group][name]), key)
    if base_dir is not None:
        for key in ("ipd", "path1", "path2"):
            value = groups["traces"].get(key)
            if value is not None and not Path(value).is_absolute():
                groups["traces"][key] = str(Path(base_dir) / value)
    try:
        return RunConfig(GameParams(**groups["params"]), TraceConfig(**groups["traces"]),
                         DensityConfig(**groups["density"]))
    except TypeError as exc:
        raise InvalidInputError(str(exc)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), path.parent)
