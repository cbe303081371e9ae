"""Scenario files: TOML schema, strict validation, canonical dump and hashing."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .errors import ConfigError, ParameterError
from .firms import AttachmentConfig
from .macro import LifeCycleParams, MarketSizeParams
from .market import MarketParams

REQUIRED = object()

# physics keys carry REQUIRED; numerical knobs and neutral extensions carry defaults
SCHEMA: dict[str, dict[str, tuple[type | tuple, Any]]] = {
    "market": {
        "market_potential": ((int, float), REQUIRED),
        "upper_share": ((int, float), REQUIRED),
        "mean_income": ((int, float), REQUIRED),
        "natural_price": ((int, float), REQUIRED),
        "demand_width": ((int, float), REQUIRED),
        "repurchase_rate": ((int, float), REQUIRED),
        "epsilon": ((int, float), REQUIRED),
        "multiple_purchase_rate": ((int, float), 0.0),
        "replacement_fraction": ((int, float), 0.0),
        "product_lifetime": ((int, float), math.inf),
        "alpha_mean": ((int, float), 1.0),
    },
    "micro": {
        "dt": ((int, float), 0.1),
        "restoring_strength": ((int, float), 0.0),
        "y_floor": ((int, float), 1e-9),
        "record_every": (int, 10),
        "coupling": (str, "direct"),
        "size_exponent": ((int, float), 0.0),
        "size_ref": ((int, float), 1.0),
        "check_step": (bool, True),
    },
    "micro.price_noise": {
        "kind": (str, "white"),
        "amplitude": ((int, float), REQUIRED),
        "corr_exponent": ((int, float), None),
    },
    "micro.fitness_noise": {
        "kind": (str, "white"),
        "amplitude": ((int, float), REQUIRED),
        "corr_exponent": ((int, float), None),
    },
    "initial": {
        "n_products": (int, 10),
        "size_dist": (str, "equal"),
        "size_span": ((int, float), 10.0),
        "size_log_std": ((int, float), 1.0),
        "eta": ((int, float), 1.0),
        "gamma": ((int, float), 0.0),
        "n_firms": (int, 0),
        "price": ((int, float), None),
        "alpha_spread": ((int, float), 0.0),
    },
    "attachment": {
        "A": ((int, float), REQUIRED),
        "D": ((int, float), REQUIRED),
        "new_product_size_frac": ((int, float), 0.1),
        "mode": (str, "sde_reduced"),
        "scheme": (str, "potential"),
        "x_floor": ((int, float), 1e-3),
        "boundary": (str, "reflect"),
    },
    "lifecycle": {
        "a": ((int, float), REQUIRED),
        "mu_0": ((int, float), REQUIRED),
        "kappa": ((int, float), REQUIRED),
        "n_0": ((int, float), 1.0),
        "chi": ((int, float), 0.0),
        "t_p": ((int, float), math.inf),
        "q_m": ((int, float), 0.0),
        "max_echo_depth": (int, 3),
        "horizon": ((int, float), REQUIRED),
        "grid": ((int, float), 0.05),
    },
    "market_size": {
        "B": ((int, float), REQUIRED),
        "N_f0": ((int, float), REQUIRED),
        "switch_threshold": ((int, float), 0.1),
        "N_f0_late": ((int, float), None),
        "relax_time": ((int, float), 1.0),
    },
}

TOP_LEVEL = {"name": (str, REQUIRED), "seeds": (list, REQUIRED), "horizon": (int, 1000),
             "outputs": (list, [])}

# short symbol names accepted as aliases in [market]
ALIASES = {"market": {"M": "market_potential", "m_U": "upper_share", "I": "mean_income",
                      "mu_n": "natural_price", "Theta": "demand_width", "q": "repurchase_rate",
                      "eps": "epsilon"}}

# analysis knobs per pipeline, all optional
ANALYSES: dict[str, dict[str, Any]] = {
    "gibrat": {"n_boot": 200},
    "laplace_price": {"burn_in": 1000},
    "size_variance": {"direct_betas": [0.2], "corr_exponents": [0.4], "n_bins": 10,
                      "burn_in_frac": 0.2, "min_events": 4, "n_steps_correlated": 0},
    "pareto_tail": {"ratios": [1.0], "n_firms": 10000, "dt": 0.05, "checkpoint_every": 1.0,
                    "max_time": 2000.0, "ks_tol": 0.01, "tail_frac": 0.05},
    "growth_mixture": {"n_samples": 100000, "sigma_m": 0.81, "beta": 0.2, "size_span": 1e9,
                       "r_min": "smallest_scale"},
    "mean_price": {"n_macro": 60, "macro_horizon": 30.0, "excess_supply": 1.0,
                   "initial_offset": 0.6},
    "lifecycle": {},
    "profit_invariant": {"alpha": 0.8, "alpha_spread": 0.01},
}

NEEDS = {
    "gibrat": ("micro.fitness_noise",),
    "laplace_price": ("micro.price_noise",),
    "size_variance": ("micro.price_noise",),
    "pareto_tail": ("attachment",),
    "growth_mixture": (),
    "mean_price": ("micro.price_noise",),
    "lifecycle": ("lifecycle", "market_size"),
    "profit_invariant": (),
}


@dataclass
class Scenario:
    name: str
    market: MarketParams
    seeds: list[int]
    horizon: int
    outputs: list[str]
    data: dict[str, Any] = field(repr=False)

    def section(self, name: str) -> dict[str, Any]:
        node = self.data
        for part in name.split("."):
            node = node.get(part, {})
        return node

    def analysis(self, name: str) -> dict[str, Any]:
        return self.data.get("analysis", {}).get(name, {})

    @property
    def attachment(self) -> AttachmentConfig | None:
        a = self.section("attachment")
        return AttachmentConfig(**a) if a else None

    @property
    def lifecycle(self) -> LifeCycleParams | None:
        lc = dict(self.section("lifecycle"))
        if not lc:
            return None
        lc.pop("horizon")
        lc.pop("grid")
        return LifeCycleParams(natural_price=self.market.natural_price, **lc)

    @property
    def market_size(self) -> MarketSizeParams | None:
        ms = self.section("market_size")
        return MarketSizeParams(alpha_mean=self.market.alpha_mean, **ms) if ms else None

    @property
    def hash(self) -> str:
        return scenario_hash(self.data)

    def with_seeds(self, seeds: list[int]) -> "Scenario":
        data = copy.deepcopy(self.data)
        data["seeds"] = [int(s) for s in seeds]
        return build_scenario(data, source=None)

    def dumps(self) -> str:
        return dumps(self.data)


# ----------------------------------------------------------------- locations


def _locate(text: str | None, section: str | None, key: str | None) -> tuple[int | None, int | None]:
    """Line and column (1-based) of ``key`` inside ``[section]`` in the source text."""
    if text is None:
        return None, None
    current = ""
    header = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]\s*(#.*)?$")
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno, line.index("[") + 1
            continue
        if key is not None and current == (section or ""):
            km = re.match(r"^(\s*)(\"?)(%s)\2\s*=" % re.escape(key), line)
            if km:
                return lineno, len(km.group(1)) + 1
    return None, None


def _err(msg: str, text: str | None, section: str | None, key: str | None) -> ConfigError:
    line, col = _locate(text, section, key)
    fieldname = f"{section}.{key}" if section and key else (key or section)
    return ConfigError(msg, field=fieldname, line=line, col=col)


def _check_type(value, typ, where: str):
    if isinstance(value, bool) and typ is not bool and bool not in (typ if isinstance(typ, tuple) else (typ,)):
        raise ParameterError(f"{where}: expected a number, got a boolean")
    if not isinstance(value, typ):
        names = typ.__name__ if isinstance(typ, type) else "/".join(t.__name__ for t in typ)
        raise ParameterError(f"{where}: expected {names}, got {type(value).__name__}")


def _fill_section(raw: dict, schema: dict, section: str, text: str | None, strict: bool) -> dict:
    raw = dict(raw)
    for alias, full in ALIASES.get(section, {}).items():
        if alias in raw:
            if full in raw:
                raise _err(f"both {alias} and {full} given", text, section, alias)
            raw[full] = raw.pop(alias)
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        if strict:
            raise _err(f"unknown key {unknown[0]!r} in [{section}]", text, section, unknown[0])
        warnings.warn(f"ignoring unknown keys in [{section}]: {unknown}", stacklevel=3)
    out = {}
    for key, (typ, default) in schema.items():
        if key in raw:
            val = raw[key]
            if val is None:
                continue
            try:
                _check_type(val, typ, f"{section}.{key}")
            except ParameterError as exc:
                raise _err(str(exc), text, section, key) from None
            out[key] = float(val) if typ == (int, float) else val
        elif default is REQUIRED:
            raise _err(f"missing required key {key!r} in [{section}]", text, section, None)
        elif default is not None:
            out[key] = copy.deepcopy(default)
    return out


def _construct(section: str, values: dict, text: str | None, ctor):
    try:
        return ctor(**values)
    except ParameterError as exc:
        msg = str(exc)
        key = next((k for k in values if re.search(r"\b%s\b" % re.escape(k), msg)), None)
        raise _err(msg, text, section, key) from None


def build_scenario(raw: dict, source: str | None = None, strict: bool = True) -> Scenario:
    """Validate a parsed document and fill defaults."""
    text = source
    raw = copy.deepcopy(raw)
    known_top = set(TOP_LEVEL) | {"market", "micro", "initial", "attachment", "lifecycle",
                                  "market_size", "analysis"}
    unknown = sorted(set(raw) - known_top)
    if unknown:
        if strict:
            raise _err(f"unknown top-level key {unknown[0]!r}", text, None, unknown[0])
        warnings.warn(f"ignoring unknown top-level keys: {unknown}", stacklevel=2)
    data: dict[str, Any] = {}
    for key, (typ, default) in TOP_LEVEL.items():
        if key in raw:
            try:
                _check_type(raw[key], typ, key)
            except ParameterError as exc:
                raise _err(str(exc), text, None, key) from None
            data[key] = raw[key]
        elif default is REQUIRED:
            raise _err(f"missing required key {key!r}", text, None, None)
        else:
            data[key] = copy.deepcopy(default)
    seeds = data["seeds"]
    if not seeds:
        raise _err("seeds must be non-empty", text, None, "seeds")
    if not all(isinstance(s, int) and not isinstance(s, bool) and 0 <= s < 2**64 for s in seeds):
        raise _err("seeds must be 64-bit non-negative integers", text, None, "seeds")
    if data["horizon"] < 0:
        raise _err("horizon must be >= 0", text, None, "horizon")
    for o in data["outputs"]:
        if o not in ANALYSES:
            raise _err(f"unknown analysis {o!r}; known: {sorted(ANALYSES)}", text, None, "outputs")

    if "market" not in raw:
        raise _err("missing required section [market]", text, None, None)
    data["market"] = _fill_section(raw["market"], SCHEMA["market"], "market", text, strict)
    market = _construct("market", data["market"], text, MarketParams)

    micro_raw = dict(raw.get("micro", {}))
    noises = {k: micro_raw.pop(k) for k in ("price_noise", "fitness_noise") if k in micro_raw}
    data["micro"] = _fill_section(micro_raw, SCHEMA["micro"], "micro", text, strict)
    for k, v in noises.items():
        data["micro"][k] = _fill_section(v, SCHEMA[f"micro.{k}"], f"micro.{k}", text, strict)
    data["initial"] = _fill_section(raw.get("initial", {}), SCHEMA["initial"], "initial", text, strict)
    if data["initial"]["size_dist"] not in ("equal", "geometric", "lognormal"):
        raise _err("size_dist must be equal, geometric or lognormal", text, "initial", "size_dist")
    if data["initial"]["n_products"] < 1:
        raise _err("n_products must be >= 1", text, "initial", "n_products")
    for sec in ("attachment", "lifecycle", "market_size"):
        if sec in raw:
            data[sec] = _fill_section(raw[sec], SCHEMA[sec], sec, text, strict)

    analysis_raw = raw.get("analysis", {})
    data["analysis"] = {}
    for name, knobs in analysis_raw.items():
        if name not in ANALYSES:
            raise _err(f"unknown analysis section {name!r}", text, "analysis", None)
        unknown = sorted(set(knobs) - set(ANALYSES[name]))
        if unknown and strict:
            raise _err(f"unknown key {unknown[0]!r} in [analysis.{name}]", text,
                       f"analysis.{name}", unknown[0])
    for name in data["outputs"]:
        merged = copy.deepcopy(ANALYSES[name])
        merged.update({k: v for k, v in analysis_raw.get(name, {}).items() if k in merged})
        data["analysis"][name] = merged
        for need in NEEDS[name]:
            node = data
            for part in need.split("."):
                node = node.get(part) if isinstance(node, dict) else None
            if not node:
                raise _err(f"analysis {name!r} needs section [{need}]", text, None, "outputs")

    scen = Scenario(data["name"], market, list(seeds), data["horizon"], list(data["outputs"]), data)
    # constructing the typed views validates their ranges
    for sec, prop in (("attachment", "attachment"), ("lifecycle", "lifecycle"),
                      ("market_size", "market_size")):
        if sec in data:
            _construct(sec, {}, text, lambda: getattr(scen, prop))
    _validate_micro(data, text)
    return scen


def _validate_micro(data: dict, text: str | None) -> None:
    from .micro import MicroConfig
    from .noise import NoiseSpec

    m = dict(data["micro"])
    for k in ("price_noise", "fitness_noise"):
        if k in m:
            m[k] = _construct(f"micro.{k}", m[k], text, NoiseSpec)
    _construct("micro", m, text, MicroConfig)


def loads(text: str, strict: bool = True) -> Scenario:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(exc))
        raise ConfigError(f"parse error: {msg}", line=line, col=col) from None
    return build_scenario(raw, source=text, strict=strict)


def load_scenario(path, strict: bool = True) -> Scenario:
    """Read and validate a scenario file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return loads(text, strict=strict)


def _tomlable(obj):
    if isinstance(obj, dict):
        return {k: _tomlable(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_tomlable(v) for v in obj]
    return obj


def dumps(data: dict) -> str:
    """Canonical TOML text of a filled scenario document."""
    top = {k: data[k] for k in TOP_LEVEL if k in data}
    rest = {k: v for k, v in data.items() if k not in TOP_LEVEL}
    return tomli_w.dumps(_tomlable({**top, **rest}))


def _canon(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _canon(v) for k, v in sorted(obj.items())}
    if isinstance(obj, list):
        return [_canon(v) for v in obj]
    return obj


def scenario_hash(data: dict) -> str:
    """sha256 of the canonical JSON form of a filled scenario document."""
    blob = json.dumps(_canon(data), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
