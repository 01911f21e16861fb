"""Batch experiment harness.

``holderlab <subcommand> [--config FILE] [flags]``.  The config file is INI
(sections ``grid``, ``profile``, ``symbol``, ``ensemble``, ``output``,
``tolerances``, ``options``); flags override it.  Every run writes
``<out>/<subcommand>.json`` and ``<out>/<subcommand>.csv`` after all
computation has finished.

Exit status: 0 when every check passes, 1 when a check fails, 2 on a
configuration error (nothing is written in that case).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import enum
import inspect
import io
import math
import os
import re
import sys
import tempfile
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .apply import apply_multiplier, ensemble_fields, gain_experiment
from .certify import (CertifyError, certify_grouped, certify_isotropic, default_lambda_grid)
from .field import FieldError, Grid, SampledField, Side, forward_transform, inverse_transform, load_field, sample, save_field
from .holder import AnisotropyProfile, fit_exponent, partial_seminorm
from .lpdecomp import LPError, block_decompose, build_cutoffs, partition_residual
from .parallel import ordered_map, worker_count
from .problems import (ProblemError, flux_data_norms, example1_counterexample, example1_field,
                       example1_poisson, example2_field, example2_heat, heat_boundary_trace,
                       heat_convolution_oracle, increments, mexican_hat_data, oracle_comparison, reduction_check,
                       schauder_ratio_experiment, boundary_ensemble)
from .symbols import REGISTRY, Symbol, SymbolError, build_symbol, parse_symbol_spec

SUBCOMMANDS = ("decompose", "apply", "gain", "certify", "seminorm", "example1", "example2",
               "ch1", "ch2", "oracle", "selftest")
FAMILIES = ("holder_bumps", "band_limited", "power")
VARIANTS = ("isotropic", "group_caps", "codim_one", "codim_one_plus", "low_order")

DEFAULT_TOLERANCES = {
    "reconstruction": 1e-10,
    "seminorm_rel": 0.02,
    "exponent_abs": 0.03,
    "gain_spread": 50.0,
    "exponent_slack": 0.1,
    "drift": 0.01,
    "example1_exponent": 0.55,
    "log_growth": 0.25,
    "example2_ut_x": 1.4,
    "example2_utx_x": 0.45,
    "schauder_spread": 50.0,
    "schauder_drift": 0.15,
    "heat_oracle": 1e-6,
    "ch_oracle": 1e-8,
    "partition": 1e-12,
    "roundtrip": 1e-12,
}

_DEFAULT_POINTS = {1: 512, 2: 256, 3: 64}


class ConfigError(ValueError):
    pass


# -- canonical output --------------------------------------------------------

def _plain(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, enum.Enum):
        return _plain(obj.value)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"im": float(obj.imag), "re": float(obj.real)}
    if isinstance(obj, Path):
        return str(obj)
    return obj


def format_float(x: float) -> str:
    """17 significant digits; non-finite values become ``null``."""
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def canonical_json(obj: Any, indent: int = 2) -> str:
    """UTF-8 JSON with sorted keys and floats fixed at 17 significant digits."""
    import json

    def enc(o, level):
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if o is None:
            return "null"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return format_float(o)
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, list):
            if not o:
                return "[]"
            return "[\n" + ",\n".join(inner + enc(v, level + 1) for v in o) + "\n" + pad + "]"
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = sorted(o.items())
            return "{\n" + ",\n".join(f"{inner}{json.dumps(k, ensure_ascii=False)}: {enc(v, level + 1)}"
                                      for k, v in items) + "\n" + pad + "}"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(_plain(obj), 0) + "\n"


def rows_to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """RFC-4180 text (CRLF line ends, minimal quoting)."""
    def cell(v):
        v = _plain(v)
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return format_float(v).replace("null", "")
        return v

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([cell(v) for v in r])
    return buf.getvalue()


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- configuration -----------------------------------------------------------

@dataclass
class ExperimentConfig:
    subcommand: str
    dims: int | None = None
    n: tuple[int, ...] | None = None
    L: tuple[float, ...] | None = None
    gamma: float | None = None
    smooth: dict[int, float] | None = None
    gained: dict[int, float] | None = None
    symbol: str | None = None
    ensemble: int | None = None
    seed: int = 0
    family: str | None = None
    out: str = "holderlab_out"
    input: str | None = None
    save: str | None = None
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    options: dict[str, Any] = field(default_factory=dict)
    dry_run: bool = False

    def tol(self, key: str) -> float:
        return float(self.tolerances[key])

    def grid(self, default_dims: int = 2, default_n: Sequence[int] | None = None,
             default_L: Sequence[float] | None = None) -> Grid:
        dims = self.dims or default_dims
        n = self.n or tuple(default_n or (_DEFAULT_POINTS.get(dims, 32),))
        L = self.L or tuple(default_L or (math.pi,))
        n = _broadcast(n, dims, "n")
        L = _broadcast(L, dims, "L")
        for v in n:
            if v < 4 or v % 2:
                raise ConfigError(f"grid point counts must be even and >= 4, got {v}")
        for v in L:
            if not v > 0:
                raise ConfigError(f"grid half-widths must be positive, got {v}")
        return Grid(tuple(L), tuple(n))

    def profile(self, dims: int, default_smooth: Sequence[int] = (0,), default_gamma: float = 0.5) -> AnisotropyProfile:
        smooth = self.smooth if self.smooth is not None else {a: 1.0 for a in default_smooth}
        if self.gained is not None:
            gained = self.gained
        else:
            gained = {a: 1.0 for a in range(dims) if a not in smooth}
        for a in list(smooth) + list(gained):
            if not 0 <= a < dims:
                raise ConfigError(f"profile refers to axis {a}, but the grid has {dims} axes")
        try:
            return AnisotropyProfile(self.gamma if self.gamma is not None else default_gamma, smooth, gained)
        except ValueError as exc:
            raise ConfigError(f"bad profile: {exc}") from exc

    def build_symbol(self, default: str, dims: int | None) -> Symbol:
        text = self.symbol or default
        try:
            name, params = parse_symbol_spec(text)
        except SymbolError as exc:
            raise ConfigError(str(exc)) from exc
        if name not in REGISTRY:
            raise ConfigError(f"unknown symbol {name!r}; valid: {', '.join(sorted(REGISTRY))}")
        defaults = {}
        if dims is not None and "dims" in inspect.signature(REGISTRY[name]).parameters and "dims" not in params:
            defaults["dims"] = dims
        try:
            m = build_symbol(text, **defaults)
        except (SymbolError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if dims is not None and m.dims != dims:
            raise ConfigError(f"symbol {m.spec} has {m.dims} axes, grid has {dims}")
        return m

    def opt(self, key: str, default: Any, cast: Callable = float) -> Any:
        v = self.options.get(key)
        if v is None:
            return default
        try:
            return cast(v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for option {key!r}: {v!r}") from exc

    def resolved(self) -> dict:
        d = asdict(self)
        d.pop("dry_run")
        d.pop("out")
        return d


def _broadcast(vals: Sequence, dims: int, name: str) -> tuple:
    vals = tuple(vals)
    if len(vals) == 1:
        return vals * dims
    if len(vals) != dims:
        raise ConfigError(f"{name} has {len(vals)} entries for {dims} axes")
    return vals


_PI_RE = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def _parse_length(text: str) -> float:
    text = str(text).strip()
    m = _PI_RE.match(text)
    try:
        if m:
            c = float(m.group(1)) if m.group(1) not in ("", "+") else 1.0
            return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad length {text!r}") from exc


def _parse_list(text: str, cast: Callable) -> tuple:
    parts = [p for p in re.split(r"[,\s]+", str(text).strip()) if p]
    if not parts:
        raise ConfigError(f"empty list {text!r}")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}") from exc


def _parse_axes(text: str) -> dict[int, float]:
    """``"0:1, 2:0.5"`` or ``"0 2"`` (exponent 1)."""
    out: dict[int, float] = {}
    text = str(text).strip()
    if not text:
        return out
    for part in re.split(r"[,\s]+", text):
        if not part:
            continue
        try:
            if ":" in part:
                a, e = part.split(":", 1)
                out[int(a)] = float(e)
            else:
                out[int(part)] = 1.0
        except ValueError as exc:
            raise ConfigError(f"bad axis entry {part!r}") from exc
    return out


def _int(text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _float(text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


_KNOWN_SECTIONS = {
    "grid": {"dims", "n", "l"},
    "profile": {"gamma", "smooth", "gained"},
    "symbol": {"spec"},
    "ensemble": {"size", "seed", "family"},
    "output": {"dir", "input", "save"},
    "tolerances": set(DEFAULT_TOLERANCES),
    "options": None,
}


def _apply_file(cfg: ExperimentConfig, path: str) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in _KNOWN_SECTIONS:
            raise ConfigError(f"unknown config section [{section}]; valid: {', '.join(sorted(_KNOWN_SECTIONS))}")
        allowed = _KNOWN_SECTIONS[section]
        for key in parser[section]:
            if allowed is not None and key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]; valid: {', '.join(sorted(allowed))}")
    g = parser["grid"] if parser.has_section("grid") else {}
    if "dims" in g:
        cfg.dims = _int(g["dims"])
    if "n" in g:
        cfg.n = _parse_list(g["n"], int)
    if "l" in g:
        cfg.L = _parse_list(g["l"], _parse_length)
    p = parser["profile"] if parser.has_section("profile") else {}
    if "gamma" in p:
        cfg.gamma = _float(p["gamma"])
    if "smooth" in p:
        cfg.smooth = _parse_axes(p["smooth"])
    if "gained" in p:
        cfg.gained = _parse_axes(p["gained"])
    if parser.has_section("symbol") and "spec" in parser["symbol"]:
        cfg.symbol = parser["symbol"]["spec"]
    e = parser["ensemble"] if parser.has_section("ensemble") else {}
    if "size" in e:
        cfg.ensemble = _int(e["size"])
    if "seed" in e:
        cfg.seed = _int(e["seed"])
    if "family" in e:
        cfg.family = e["family"]
    o = parser["output"] if parser.has_section("output") else {}
    if "dir" in o:
        cfg.out = o["dir"]
    if "input" in o:
        cfg.input = o["input"]
    if "save" in o:
        cfg.save = o["save"]
    if parser.has_section("tolerances"):
        for k, v in parser["tolerances"].items():
            cfg.tolerances[k] = _float(v)
    if parser.has_section("options"):
        cfg.options.update(dict(parser["options"]))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file; flags override its values")
    common.add_argument("--dims", type=int)
    common.add_argument("--n", help="points per axis, e.g. 256 or 256,128")
    common.add_argument("--L", dest="L", help="box half-widths, e.g. pi or 4,2")
    common.add_argument("--gamma", type=float)
    common.add_argument("--smooth", help="smooth axes with exponents, e.g. 0:1")
    common.add_argument("--gained", help="gained axes with exponents, e.g. 1:1,2:2")
    common.add_argument("--symbol", help="registry spec such as heat_time_derivative{a=1.0}")
    common.add_argument("--ensemble", type=int, help="ensemble size")
    common.add_argument("--seed", type=int)
    common.add_argument("--family", help=f"field family: {', '.join(FAMILIES)}")
    common.add_argument("--out", help="output directory")
    common.add_argument("--input", help="read the input field from this file")
    common.add_argument("--save", help="also save the output field to this file")
    common.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE", help="tolerance override")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="subcommand option")
    common.add_argument("--dry-run", action="store_true", help="validate and print the plan without computing")

    parser = argparse.ArgumentParser(prog="holderlab", description="Fourier-multiplier Hölder-gain experiments")
    parser.add_argument("--version", action="version", version=f"holderlab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    helps = {
        "decompose": "dyadic blocks of a sampled field",
        "apply": "apply a multiplier to a field",
        "gain": "Hölder-gain ensemble for a multiplier",
        "certify": "lambda-uniform annulus norm certificate",
        "seminorm": "partial Hölder seminorms and fitted exponents",
        "example1": "Poisson mixed derivatives and the log counterexample",
        "example2": "heat equation time derivative regularity",
        "ch1": "Schauder ratios, Laplace-type dynamic condition",
        "ch2": "Schauder ratios, flux-type dynamic condition",
        "oracle": "heat-trace and boundary-symbol oracle checks",
        "selftest": "fast deterministic battery",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "certify":
            sp.add_argument("--p", type=float)
            sp.add_argument("--s", help="order, or per-group orders such as 2,2")
            sp.add_argument("--variant", choices=VARIANTS)
            sp.add_argument("--groups", help="axis groups such as 0;1,2")
    return parser


def _kv(items: Sequence[str], what: str) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"{what} expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(args.subcommand)
    if args.config:
        _apply_file(cfg, args.config)
    if args.dims is not None:
        cfg.dims = args.dims
    if args.n is not None:
        cfg.n = _parse_list(args.n, int)
    if args.L is not None:
        cfg.L = _parse_list(args.L, _parse_length)
    if args.gamma is not None:
        cfg.gamma = args.gamma
    if args.smooth is not None:
        cfg.smooth = _parse_axes(args.smooth)
    if args.gained is not None:
        cfg.gained = _parse_axes(args.gained)
    for attr in ("symbol", "ensemble", "seed", "family", "out", "input", "save"):
        v = getattr(args, attr)
        if v is not None:
            setattr(cfg, attr, v)
    for k, v in _kv(args.tol, "--tol").items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}; valid: {', '.join(sorted(DEFAULT_TOLERANCES))}")
        cfg.tolerances[k] = _float(v)
    cfg.options.update(_kv(args.set, "--set"))
    for key in ("p", "s", "variant", "groups"):
        v = getattr(args, key, None)
        if v is not None:
            cfg.options[key] = v
    cfg.dry_run = bool(args.dry_run)
    if cfg.dims is not None and cfg.dims < 1:
        raise ConfigError("dims must be positive")
    if cfg.family is not None and cfg.family not in FAMILIES:
        raise ConfigError(f"unknown field family {cfg.family!r}; valid: {', '.join(FAMILIES)}")
    if cfg.ensemble is not None and cfg.ensemble < 1:
        raise ConfigError("ensemble size must be at least 1")
    if cfg.gamma is not None and not 0 < cfg.gamma < 1:
        raise ConfigError("gamma must lie in (0, 1)")
    return cfg


# -- runners -----------------------------------------------------------------
# Each runner returns (plan, execute) where plan is a dict describing the run and
# execute() returns (report dict, csv text, checks dict).

Result = tuple[dict, str, dict]


def _field(cfg: ExperimentConfig, grid: Grid, profile: AnisotropyProfile | None, member: int = 0,
           default_family: str = "holder_bumps") -> SampledField:
    if cfg.input:
        try:
            u = load_field(cfg.input)
        except (OSError, FieldError) as exc:
            raise ConfigError(f"cannot load field {cfg.input}: {exc}") from exc
        if u.side is not Side.PHYSICAL:
            u = inverse_transform(u)
        return u
    family = cfg.family or default_family
    gamma = profile.gamma if profile is not None else (cfg.gamma or 0.5)
    if family == "power":
        return sample(lambda *x: np.abs(x[0]) ** gamma + 0 * sum(x), grid)
    rough = profile.smooth_axes if profile is not None else (0,)
    return ensemble_fields(grid, family, 1, cfg.seed + member, gamma, rough)[0]


def _input_grid(cfg: ExperimentConfig, default_dims: int = 2) -> Grid:
    if cfg.input:
        try:
            return load_field(cfg.input).grid
        except (OSError, FieldError) as exc:
            raise ConfigError(f"cannot load field {cfg.input}: {exc}") from exc
    return cfg.grid(default_dims)


def plan_decompose(cfg):
    grid = _input_grid(cfg)
    profile = cfg.profile(grid.dims)
    sharp = cfg.opt("sharpness", 1.0)

    def run() -> Result:
        u = _field(cfg, grid, profile)
        cut = build_cutoffs(sharp)
        blocks = block_decompose(u, profile, cut)
        total = sum(b.values for b in blocks.values())
        target = u.values - u.values.mean()
        scale = max(float(np.max(np.abs(u.values))), 1e-300)
        resid = float(np.max(np.abs(total - target))) / scale
        rows = [(j, b.l2_norm(), b.max_abs()) for j, b in sorted(blocks.items())]
        report = {"levels": [r[0] for r in rows], "l2_norms": [r[1] for r in rows], "max_abs": [r[2] for r in rows],
                  "reconstruction_residual": resid, "profile": profile.to_dict()}
        checks = {"reconstruction": resid <= cfg.tol("reconstruction")}
        return report, rows_to_csv(["level", "l2_norm", "max_abs"], rows), checks

    return {"grid": grid.to_dict(), "profile": profile.to_dict(), "sharpness": sharp}, run


def plan_apply(cfg):
    grid = _input_grid(cfg)
    m = cfg.build_symbol("riesz{k=1,l=0}", grid.dims)
    profile = cfg.profile(grid.dims, sorted(m.vanishing_axes) or (0,))
    dc = cfg.options.get("dc", "auto")

    def run() -> Result:
        u = _field(cfg, grid, profile)
        v, policy = apply_multiplier(m, u, dc, return_policy=True)
        leak = float(np.max(np.abs(v.values.imag)))
        if cfg.save:
            save_field(v, cfg.save)
        report = {"symbol": m.spec, "dc_policy": policy, "imag_leak": leak, "input_max_abs": u.max_abs(),
                  "output_max_abs": v.max_abs(), "output_l2": v.l2_norm(), "grid": grid.to_dict()}
        rows = [("input", u.max_abs(), u.l2_norm()), ("output", v.max_abs(), v.l2_norm())]
        checks = {"finite": bool(np.all(np.isfinite(v.values)))}
        return report, rows_to_csv(["field", "max_abs", "l2_norm"], rows), checks

    return {"grid": grid.to_dict(), "symbol": m.spec, "profile": profile.to_dict(), "dc": dc}, run


def plan_gain(cfg):
    m = cfg.build_symbol("riesz{k=1,l=0}", cfg.dims)
    grid = cfg.grid(m.dims)
    profile = cfg.profile(grid.dims, sorted(m.vanishing_axes) or (0,))
    size = cfg.ensemble or 1
    family = cfg.family or "holder_bumps"
    if family == "power":
        raise ConfigError("gain ensembles use the holder_bumps or band_limited family")
    fit_steps = cfg.opt("fit_steps", 8, int)

    def run() -> Result:
        def member(i):
            u = ensemble_fields(grid, family, 1, cfg.seed + i, profile.gamma, profile.smooth_axes)[0]
            return gain_experiment(m, profile, u, fit_steps=fit_steps)

        reports = ordered_map(member, range(size))
        ratios = [r.max_gain_ratio for r in reports]
        med = float(np.median(ratios))
        spread = float(max(ratios) / med) if med > 0 else math.inf
        rows, ok_exp = [], True
        for i, r in enumerate(reports):
            gr = r.gain_ratios()
            for e in r.outputs:
                rows.append((i, cfg.seed + i, e.axis, e.group, e.target, e.seminorm, e.fitted_exponent,
                             gr[f"{e.group}:{e.axis}"]))
                if e.group == "gained" and (e.fitted_exponent is not None
                                            and e.fitted_exponent < e.target - cfg.tol("exponent_slack")):
                    ok_exp = False
        report = {"symbol": m.spec, "profile": profile.to_dict(), "family": family, "seed": cfg.seed,
                  "members": [r.to_dict() for r in reports], "median_gain_ratio": med, "spread": spread}
        checks = {"spread": spread <= cfg.tol("gain_spread"), "gained_exponents": ok_exp}
        header = ["member", "seed", "axis", "group", "target", "seminorm", "fitted_exponent", "gain_ratio"]
        return report, rows_to_csv(header, rows), checks

    return {"grid": grid.to_dict(), "symbol": m.spec, "profile": profile.to_dict(), "ensemble": size,
            "family": family, "seed": cfg.seed, "threads": worker_count()}, run


def plan_certify(cfg):
    m = cfg.build_symbol("riesz{k=1,l=0,dims=2}", cfg.dims)
    p = cfg.opt("p", 2.0)
    if not p >= 1:
        raise ConfigError("p must be at least 1")
    variant = cfg.opt("variant", "isotropic", str)
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; valid: {', '.join(VARIANTS)}")
    gamma = cfg.gamma
    s_raw = cfg.options.get("s")
    if s_raw is None:
        s = math.floor(m.dims / p + (gamma or 0.0)) + 1
    else:
        s = _parse_list(s_raw, int)
        s = s[0] if len(s) == 1 else s
    groups = None
    if "groups" in cfg.options:
        try:
            groups = [[int(a) for a in g.split(",") if a.strip()] for g in str(cfg.options["groups"]).split(";")]
        except ValueError as exc:
            raise ConfigError(f"bad groups {cfg.options['groups']!r}") from exc
        for g in groups:
            for a in g:
                if not -m.dims <= a < m.dims:
                    raise ConfigError(f"group axis {a} does not exist for a {m.dims}-axis symbol")
    points = cfg.opt("lambda_points", 33, int)
    lam = default_lambda_grid(points)
    drift = cfg.tol("drift")
    if variant == "isotropic" and not np.isscalar(s):
        raise ConfigError("the isotropic variant takes a single order s")

    def run() -> Result:
        if variant == "isotropic":
            cert = certify_isotropic(m, None, p, int(s), lam, drift_bound=drift, gamma=gamma)
        else:
            cert = certify_grouped(m, groups, s, p, lam, variant=variant, gamma=gamma, drift_bound=drift)
        rows = list(zip(cert.lambda_grid, cert.per_lambda_norms))
        return cert.to_dict(), rows_to_csv(["lambda", "norm"], rows), {"certified": cert.passed}

    return {"symbol": m.spec, "p": p, "s": s, "variant": variant, "groups": groups, "lambda_points": points}, run


def plan_seminorm(cfg):
    grid = _input_grid(cfg, default_dims=1)
    if cfg.n is None and cfg.L is None and not cfg.input and (cfg.dims or 1) == 1:
        grid = Grid((4.0,), (512,))
    family = cfg.family or "power"
    gamma = cfg.gamma if cfg.gamma is not None else 0.5
    periodic = family != "power"
    fit_steps = cfg.opt("fit_steps", 8, int)

    def run() -> Result:
        profile = AnisotropyProfile(gamma, {0: 1.0}, {a: 1.0 for a in range(1, grid.dims)})
        c = ExperimentConfig(cfg.subcommand, family=family, seed=cfg.seed, input=cfg.input, gamma=gamma)
        u = _field(c, grid, profile)
        u = u.with_values(u.values.real)
        rows = []
        for a in range(grid.dims):
            semi = partial_seminorm(u, a, gamma, 1, periodic)
            dx = grid.spacing[a]
            try:
                fit = fit_exponent(u, a, 1, (dx, fit_steps * dx), periodic)
            except FieldError:
                fit = None
            rows.append((a, gamma, semi, fit))
        checks = {}
        if family == "power" and not cfg.input:
            checks["seminorm"] = abs(rows[0][2] - 1.0) <= cfg.tol("seminorm_rel")
            checks["exponent"] = rows[0][3] is not None and abs(rows[0][3] - gamma) <= cfg.tol("exponent_abs")
        report = {"family": "input" if cfg.input else family, "gamma": gamma, "periodic": periodic,
                  "axes": [{"axis": r[0], "target": r[1], "seminorm": r[2], "fitted_exponent": r[3]} for r in rows]}
        return report, rows_to_csv(["axis", "target", "seminorm", "fitted_exponent"], rows), checks

    return {"grid": grid.to_dict(), "family": family, "gamma": gamma}, run


def plan_example1(cfg):
    grid = cfg.grid(3, (256, 256, 32), (4.0, 4.0, 2.0)) if (cfg.n or cfg.L) else Grid((4.0, 4.0, 2.0), (256, 256, 32))
    if grid.dims != 3:
        raise ConfigError("example1 needs a three-axis grid")
    gamma = cfg.gamma if cfg.gamma is not None else 0.6
    resolutions = _parse_list(cfg.options.get("resolutions", "64,128,256,512,1024"), int)
    fit_steps = cfg.opt("fit_steps", 8, int)

    def run() -> Result:
        reps = example1_poisson(example1_field(grid, gamma), gamma, fit_steps=fit_steps)
        rows = []
        worst = math.inf
        for k, r in sorted(reps.items()):
            for e in r.outputs:
                rows.append(("poisson", k, e.axis, e.target, e.seminorm, e.fitted_exponent))
                worst = min(worst, -math.inf if e.fitted_exponent is None else e.fitted_exponent)
        ce = example1_counterexample(resolutions)
        inc = increments(ce)
        for row in ce:
            rows.append(("counterexample", row.points, "", row.max_d22, row.max_d21, row.x1_seminorm_bound))
        inc_ratio = max(inc) / min(inc) - 1.0 if inc and min(inc) > 0 else math.inf
        d21 = [r.max_d21 for r in ce]
        bnd = [r.x1_seminorm_bound for r in ce]
        bounded = max(d21) / min(d21) - 1.0 <= cfg.tol("log_growth") and max(bnd) / min(bnd) - 1.0 <= cfg.tol("log_growth")
        report = {"gamma": gamma, "reports": {str(k): r.to_dict() for k, r in reps.items()},
                  "min_fitted_exponent": worst, "counterexample": ce, "increments": inc,
                  "increment_spread": inc_ratio}
        checks = {"exponents": worst >= cfg.tol("example1_exponent"),
                  "log_growth": inc_ratio <= cfg.tol("log_growth"), "bounded_derivatives": bounded}
        header = ["part", "k_or_points", "axis", "target_or_d22", "seminorm_or_d21", "exponent_or_bound"]
        return report, rows_to_csv(header, rows), checks

    return {"grid": grid.to_dict(), "gamma": gamma, "resolutions": resolutions}, run


def plan_example2(cfg):
    grid = cfg.grid(2, (1024, 1024), (4.0, 4.0)) if (cfg.n or cfg.L) else Grid((4.0, 4.0), (1024, 1024))
    if grid.dims != 2:
        raise ConfigError("example2 needs an (x, t) grid")
    gamma = cfg.gamma if cfg.gamma is not None else 0.75
    if not 0.5 < gamma < 1:
        raise ConfigError("example2 needs gamma in (1/2, 1)")
    a = cfg.opt("a", 1.0)
    fit_steps = cfg.opt("fit_steps", 8, int)

    def run() -> Result:
        rep = example2_heat(example2_field(grid, gamma), gamma, a, fit_steps=fit_steps)
        rows = [(e.group, e.axis, e.target, e.seminorm, e.fitted_exponent) for e in rep.outputs]
        ut_x = rep.output_exponent(0, "u_t")
        utx = rep.output_exponent(0, "u_tx")
        checks = {"u_t_x": ut_x is not None and ut_x >= cfg.tol("example2_ut_x"),
                  "u_tx_x": utx is not None and utx >= cfg.tol("example2_utx_x")}
        return rep.to_dict(), rows_to_csv(["quantity", "axis", "target", "seminorm", "fitted_exponent"], rows), checks

    return {"grid": grid.to_dict(), "gamma": gamma, "a": a}, run


def _plan_schauder(cfg, variant: str):
    dims = cfg.dims or 2
    if dims != 2:
        raise ConfigError("the Schauder experiment runs on (x', t) boundary grids with one spatial axis")
    n = _broadcast(cfg.n or (32, 64), 2, "n")
    L = _broadcast(cfg.L or (math.pi, 16.0), 2, "L")
    size = cfg.ensemble or 20
    gamma = cfg.gamma if cfg.gamma is not None else 0.5
    a = cfg.opt("a", 1.0)
    refine = cfg.opt("refine", True, lambda v: str(v).lower() not in ("0", "false", "no"))

    def run() -> Result:
        stats = schauder_ratio_experiment(variant, size, seed=cfg.seed, gamma=gamma, a=a, points=tuple(n),
                                          extent=tuple(L), refine=refine)
        report = stats.to_dict()
        checks = {"spread": stats.spread <= cfg.tol("schauder_spread"),
                  "boundary_spread": stats.boundary_spread <= cfg.tol("schauder_spread")}
        if stats.drift is not None:
            checks["drift"] = stats.drift < cfg.tol("schauder_drift")
        if variant == "flux_dynamic":
            h = boundary_ensemble(Grid(tuple(L), tuple(n)), 1, cfg.seed)[0]
            report["reduction"] = [list(r) for r in reduction_check(h, a)]
        else:
            # flux data sample from the same family; only reported
            g = boundary_ensemble(Grid(tuple(L), tuple(n)), 1, cfg.seed)[0]
            report["flux_norms"] = flux_data_norms(g, gamma)
        return report, stats.to_csv(), checks

    return {"variant": variant, "points": list(n), "extent": list(L), "ensemble": size, "seed": cfg.seed,
            "gamma": gamma, "a": a, "refine": refine, "threads": worker_count()}, run


def plan_oracle(cfg):
    a = cfg.opt("a", 1.0)
    if not a > 0:
        raise ConfigError("a must be positive")
    n = cfg.opt("symbol_grid", 32, int)
    grid = Grid(_broadcast(cfg.L or (math.pi, 32.0), 2, "L"), _broadcast(cfg.n or (128,), 2, "n"))

    def run() -> Result:
        h = mexican_hat_data(grid)
        spectral = heat_boundary_trace(h, a).values.real
        conv = heat_convolution_oracle(grid, a=a)
        heat_err = float(np.linalg.norm(spectral - conv) / np.linalg.norm(conv))
        ch = oracle_comparison(a, n)
        report = {"heat_trace_rel_l2": heat_err, "heat_grid": grid.to_dict(), "boundary_symbol": ch}
        rows = [("heat_trace_rel_l2", heat_err), ("boundary_symbol_max_rel", ch["max_rel_error"]),
                ("boundary_symbol_without_a", ch["max_rel_error_without_a_on_fraction"])]
        checks = {"heat_trace": heat_err < cfg.tol("heat_oracle"), "boundary_symbol": ch["max_rel_error"] < cfg.tol("ch_oracle")}
        return report, rows_to_csv(["quantity", "value"], rows), checks

    return {"a": a, "symbol_grid": n, "heat_grid": grid.to_dict()}, run


def plan_selftest(cfg):
    seed = cfg.seed

    def run() -> Result:
        rng = np.random.default_rng(seed)
        rows, checks, report = [], {}, {"seed": seed, "version": __version__}
        profiles = [AnisotropyProfile(0.5, {0: 1.0}, {1: 1.0}),
                    AnisotropyProfile(0.5, {0: 1.0}, {1: 4.0}),
                    AnisotropyProfile(0.5, {0: 1.0, 1: 1.0, 2: 0.5}, {3: 2.0})]
        cut = build_cutoffs()
        worst = 0.0
        for prof in profiles:
            u = rng.standard_normal((2000, prof.dims))
            target = 2.0 ** rng.uniform(-3, 3, 2000)
            xi = np.sign(u) * (np.abs(u) / np.sum(np.abs(u) ** prof.exponents, axis=1, keepdims=True)
                                ** (1 / prof.exponents)) * target[:, None] ** prof.weights
            worst = max(worst, partition_residual(prof, cut, xi, (-6, 6)))
        report["partition_residual"] = worst
        checks["partition"] = worst < cfg.tol("partition")
        g = Grid((2.0, 3.0), (32, 48))
        u = SampledField(g, rng.standard_normal(g.shape), Side.PHYSICAL)
        back = inverse_transform(forward_transform(u))
        rt = float(np.max(np.abs(back.values - u.values)))
        report["roundtrip"] = rt
        checks["roundtrip"] = rt < cfg.tol("roundtrip")
        sem = []
        for gm in (0.3, 0.5, 0.8):
            f = sample(lambda x: np.abs(x) ** gm, Grid((4.0,), (512,)))
            sem.append([gm, partial_seminorm(f, 0, gm, 1, False), fit_exponent(f, 0, 1, periodic=False)])
        report["seminorms"] = sem
        checks["seminorm"] = all(abs(s[1] - 1) <= cfg.tol("seminorm_rel") and abs(s[2] - s[0]) <= cfg.tol("exponent_abs")
                                 for s in sem)
        from .symbols import riesz_second_order
        cert = certify_isotropic(riesz_second_order(1, 0, 2), None, 2.0, 2, default_lambda_grid(9), resolution=24)
        report["certificate"] = cert.to_dict()
        checks["certificate"] = cert.passed
        ch = oracle_comparison(1.0, 8)
        report["boundary_symbol"] = ch
        checks["boundary_symbol"] = ch["max_rel_error"] < cfg.tol("ch_oracle")
        gg = Grid((math.pi, math.pi), (64, 64))
        prof = AnisotropyProfile(0.5, {0: 1.0}, {1: 1.0})
        fields = ensemble_fields(gg, "holder_bumps", 3, seed, 0.5, (0,))
        gains = ordered_map(lambda f: gain_experiment(riesz_second_order(1, 0, 2), prof, f), fields)
        report["gain_ratios"] = [r.max_gain_ratio for r in gains]
        for k, v in sorted(checks.items()):
            rows.append((k, v))
        return report, rows_to_csv(["check", "passed"], rows), checks

    return {"seed": seed}, run


PLANNERS: dict[str, Callable] = {
    "decompose": plan_decompose,
    "apply": plan_apply,
    "gain": plan_gain,
    "certify": plan_certify,
    "seminorm": plan_seminorm,
    "example1": plan_example1,
    "example2": plan_example2,
    "ch1": lambda cfg: _plan_schauder(cfg, "laplace_dynamic"),
    "ch2": lambda cfg: _plan_schauder(cfg, "flux_dynamic"),
    "oracle": plan_oracle,
    "selftest": plan_selftest,
}

_INPUT_ERRORS = (ConfigError, SymbolError, FieldError, LPError, CertifyError, ProblemError)


def run(cfg: ExperimentConfig, stdout=None, stderr=None) -> int:
    """Validate, compute, then write ``<out>/<subcommand>.{json,csv}``; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if cfg.subcommand not in PLANNERS:
        print(f"error: unknown subcommand {cfg.subcommand!r}; valid: {', '.join(SUBCOMMANDS)}", file=stderr)
        return 2
    try:
        plan, execute = PLANNERS[cfg.subcommand](cfg)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    out = Path(cfg.out)
    plan = {"subcommand": cfg.subcommand, "plan": plan, "outputs": [str(out / f"{cfg.subcommand}.json"),
                                                                    str(out / f"{cfg.subcommand}.csv")]}
    if cfg.dry_run:
        stdout.write(canonical_json(plan))
        return 0
    try:
        report, csv_text, checks = execute()
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    checks = {k: bool(v) for k, v in checks.items()}
    passed = all(checks.values())
    doc = {"subcommand": cfg.subcommand, "config": cfg.resolved(), "plan": plan["plan"], "report": report,
           "checks": checks, "passed": passed}
    _write_atomic(out / f"{cfg.subcommand}.json", canonical_json(doc))
    _write_atomic(out / f"{cfg.subcommand}.csv", csv_text)
    for k, v in sorted(checks.items()):
        print(f"{'PASS' if v else 'FAIL'} {k}", file=stdout)
    print(f"wrote {out / (cfg.subcommand + '.json')}", file=stdout)
    return 0 if passed else 1


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
