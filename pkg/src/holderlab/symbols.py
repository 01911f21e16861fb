"""Fourier multipliers (symbols): evaluation, anisotropic scaling, structural checks.

A symbol evaluates on arrays of frequency vectors with the axis index last,
``xi.shape == (..., dims)``.  Space-time symbols treat the time frequency as
one more axis (``time_axis``, default the last one), matching the layout of
space-time fields.

Principal square roots are used throughout (``numpy.sqrt`` on complex input,
non-negative real part).
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Symbol",
    "SymbolError",
    "SliceCheck",
    "evaluate",
    "scale",
    "check_vanishing_slice",
    "check_homogeneity",
    "aniso_rho",
    "unit_annulus_samples",
    "riesz_second_order",
    "heat_time_derivative",
    "heat_resolvent",
    "ch_boundary_denominator",
    "ch_boundary_inverse",
    "ch_boundary_fraction",
    "ch_reduction_symbol",
    "constant_symbol",
    "log_distance_symbol",
    "REGISTRY",
    "parse_symbol_spec",
    "build_symbol",
]


class SymbolError(ValueError):
    pass


@dataclass(frozen=True)
class Symbol:
    """A frequency-domain multiplier with its scaling metadata.

    ``func`` receives a float array of shape ``(..., dims)`` and returns a
    complex array of shape ``(...)``.  It may produce non-finite values only at
    the origin; there the value is 0 when a vanishing slice is declared
    (the slice passes through the origin) and NaN otherwise.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    dims: int
    weights: tuple[float, ...]
    vanishing_axes: frozenset[int] = frozenset()
    singular_set: str = "origin only"
    bound: float = np.inf
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.dims:
            raise SymbolError(f"{self.name}: expected {self.dims} frequency components, got {xi.shape[-1]}")
        with np.errstate(all="ignore"):
            val = np.asarray(self.func(xi), dtype=complex)
        val = np.broadcast_to(val, xi.shape[:-1]).copy()
        bad = ~np.isfinite(val)
        if bad.any():
            origin = np.all(xi == 0.0, axis=-1)
            stray = bad & ~origin
            if stray.any():
                where = xi[tuple(np.argwhere(stray)[0])]
                raise SymbolError(f"{self.name}: non-finite value at xi={where.tolist()}")
            val[bad] = 0.0 if self.vanishing_axes else np.nan
        return val

    @property
    def spec(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return f"{self.name}{{{inner}}}"


def evaluate(m: Symbol, xi) -> np.ndarray | complex:
    """Value of ``m`` at one frequency vector or an array of them."""
    xi = np.asarray(xi, dtype=float)
    out = m(xi)
    return complex(out) if out.ndim == 0 else out


def scale(m: Symbol, lam: float, weights: Sequence[float] | None = None) -> Symbol:
    """The symbol ``xi -> m(A_lam xi)`` with ``A_lam = diag(lam^w_i)``."""
    if not lam > 0:
        raise SymbolError(f"scaling factor must be positive, got {lam}")
    w = np.asarray(m.weights if weights is None else weights, dtype=float)
    factors = lam ** w
    base = m.func
    return replace(m, func=lambda xi: base(xi * factors), name=m.name,
                   params={**m.params, "_scaled": m.params.get("_scaled", 1.0) * lam})


def aniso_rho(xi: np.ndarray, exponents: Sequence[float]) -> np.ndarray:
    """``sum_i |xi_i|^{e_i}``; with ``e_i = 1/w_i`` it satisfies rho(A_lam xi) = lam rho(xi)."""
    xi = np.asarray(xi, dtype=float)
    return np.sum(np.abs(xi) ** np.asarray(exponents, dtype=float), axis=-1)


def unit_annulus_samples(weights: Sequence[float], count: int, rng: np.random.Generator,
                         rho_range: tuple[float, float] = (0.5, 2.0)) -> np.ndarray:
    """Random frequencies with anisotropic distance in ``rho_range``."""
    w = np.asarray(weights, dtype=float)
    eta = rng.standard_normal((count, len(w)))
    r = aniso_rho(eta, 1.0 / w)
    target = rng.uniform(*rho_range, size=count)
    return eta * (target / r)[:, None] ** w


@dataclass
class SliceCheck:
    passed: bool
    residual: float


def check_vanishing_slice(m: Symbol, axes: Iterable[int], samples: int = 1000, tol: float = 1e-12,
                          rng: np.random.Generator | None = None) -> SliceCheck:
    """Evaluate ``m`` with the coordinates in ``axes`` zeroed at random points."""
    if samples < 100:
        raise SymbolError("need at least 100 samples")
    rng = np.random.default_rng(0) if rng is None else rng
    axes = sorted(set(axes))
    xi = rng.standard_normal((samples, m.dims)) * 4.0
    xi[:, axes] = 0.0
    residual = float(np.max(np.abs(m(xi))))
    return SliceCheck(residual <= tol, residual)


def check_homogeneity(m: Symbol, lambdas: Sequence[float], samples: int = 1000,
                      rng: np.random.Generator | None = None,
                      weights: Sequence[float] | None = None) -> float:
    """``max |m(A_lam xi) - m(xi)|`` over the unit annulus and the given factors."""
    if any(not lam > 0 for lam in lambdas):
        raise SymbolError("scaling factors must be positive")
    rng = np.random.default_rng(0) if rng is None else rng
    w = m.weights if weights is None else tuple(weights)
    xi = unit_annulus_samples(w, samples, rng)
    base = m(xi)
    dev = 0.0
    for lam in lambdas:
        dev = max(dev, float(np.max(np.abs(scale(m, lam, w)(xi) - base))))
    return dev


# -- library -----------------------------------------------------------------

def _split_time(dims: int, time_axis: int) -> tuple[int, list[int]]:
    t = time_axis % dims
    return t, [a for a in range(dims) if a != t]


def riesz_second_order(k: int = 1, l: int = 0, dims: int = 3) -> Symbol:
    """``xi_k xi_l / |xi|^2``; vanishes on ``xi_l = 0``."""
    if not (0 <= k < dims and 0 <= l < dims):
        raise SymbolError("riesz axes out of range")

    def func(xi):
        return xi[..., k] * xi[..., l] / np.sum(xi * xi, axis=-1)

    return Symbol("riesz", func, dims, (1.0,) * dims, frozenset({l}), bound=1.0,
                  params={"k": k, "l": l, "dims": dims})


def heat_time_derivative(a: float = 1.0, dims: int = 2, time_axis: int = -1) -> Symbol:
    """``i xi_0 / (i xi_0 + a |xi|^2)``: maps a heat source to ``u_t``."""
    t, space = _split_time(dims, time_axis)

    def func(xi):
        x0 = xi[..., t]
        return 1j * x0 / (1j * x0 + a * np.sum(xi[..., space] ** 2, axis=-1))

    w = tuple(2.0 if i == t else 1.0 for i in range(dims))
    return Symbol("heat_time_derivative", func, dims, w, frozenset({t}), bound=1.0,
                  params={"a": a, "dims": dims, "time_axis": time_axis})


def heat_resolvent(a: float = 1.0, dims: int = 2, time_axis: int = -1) -> Symbol:
    """``1 / (i xi_0 + a |xi|^2)``: boundary data to boundary trace for the heat-type condition."""
    t, space = _split_time(dims, time_axis)

    def func(xi):
        return 1.0 / (1j * xi[..., t] + a * np.sum(xi[..., space] ** 2, axis=-1))

    w = tuple(2.0 if i == t else 1.0 for i in range(dims))
    return Symbol("heat_resolvent", func, dims, w, frozenset(), params={"a": a, "dims": dims,
                                                                        "time_axis": time_axis})


def ch_boundary_fraction(xi_sq, xi0) -> np.ndarray:
    """``2 S+ S- / (S+ + S-)`` with ``S+- = sqrt(|xi|^2 +- sqrt(-i xi_0))`` (principal roots)."""
    q = np.sqrt(-1j * np.asarray(xi0, dtype=float))
    sp = np.sqrt(xi_sq + q)
    sm = np.sqrt(xi_sq - q)
    return 2.0 * sp * sm / (sp + sm)


def ch_boundary_denominator(a: float = 1.0, dims: int = 2, time_axis: int = -1) -> Symbol:
    """``i xi_0 + a * 2 S+ S- / (S+ + S-)``, the flux-type dynamic boundary symbol.

    The coefficient ``a`` multiplies the fraction; this placement is what the
    half-line ODE solve in :mod:`holderlab.problems` produces.
    """
    t, space = _split_time(dims, time_axis)

    def func(xi):
        xi_sq = np.sum(xi[..., space] ** 2, axis=-1)
        return 1j * xi[..., t] + a * ch_boundary_fraction(xi_sq, xi[..., t])

    w = tuple(4.0 if i == t else 1.0 for i in range(dims))
    return Symbol("ch_boundary_denominator", func, dims, w, frozenset(), singular_set="none",
                  params={"a": a, "dims": dims, "time_axis": time_axis})


def ch_boundary_inverse(a: float = 1.0, dims: int = 2, time_axis: int = -1) -> Symbol:
    """``1 / M(xi, xi_0)``; not homogeneous in any scaling."""
    den = ch_boundary_denominator(a, dims, time_axis)
    return Symbol("ch_boundary_inverse", lambda xi: 1.0 / den.func(xi), dims, den.weights,
                  frozenset(), params=dict(den.params))


def ch_reduction_symbol(l: int = 0, a: float = 1.0, dims: int = 2, time_axis: int = -1) -> Symbol:
    """``i xi_l / (i xi_0 + a |xi|)``, degree zero under isotropic scaling.

    Not smooth on the time-frequency line ``xi = 0``; derivatives there exist
    only piecewise.
    """
    t, space = _split_time(dims, time_axis)
    if l % dims == t:
        raise SymbolError("l must be a spatial axis")

    def func(xi):
        norm = np.sqrt(np.sum(xi[..., space] ** 2, axis=-1))
        return 1j * xi[..., l] / (1j * xi[..., t] + a * norm)

    return Symbol("ch_reduction_symbol", func, dims, (1.0,) * dims, frozenset({l % dims}),
                  singular_set="origin; kink along xi_space = 0", bound=max(1.0, 1.0 / a),
                  params={"l": l, "a": a, "dims": dims, "time_axis": time_axis})


def constant_symbol(c: float = 1.0, dims: int = 1) -> Symbol:
    return Symbol("constant", lambda xi: np.full(xi.shape[:-1], complex(c)), dims, (1.0,) * dims,
                  frozenset(), singular_set="none", bound=abs(c), params={"c": c, "dims": dims})


def log_distance_symbol(weights: Sequence[float] = (1.0,)) -> Symbol:
    """``log rho(xi)``: a control symbol that no lambda-uniform bound can hold for."""
    w = tuple(float(v) for v in weights)
    exps = 1.0 / np.asarray(w)

    def func(xi):
        return np.log(aniso_rho(xi, exps)).astype(complex)

    return Symbol("log_distance", func, len(w), w, frozenset(), params={"weights": list(w)})


REGISTRY: dict[str, Callable[..., Symbol]] = {
    "riesz": riesz_second_order,
    "riesz_second_order": riesz_second_order,
    "heat_time_derivative": heat_time_derivative,
    "heat_resolvent": heat_resolvent,
    "ch_boundary_denominator": ch_boundary_denominator,
    "ch_boundary_inverse": ch_boundary_inverse,
    "ch_reduction_symbol": ch_reduction_symbol,
    "constant": constant_symbol,
    "log_distance": log_distance_symbol,
}

_SPEC_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\{(.*)\})?\s*$")


def parse_symbol_spec(text: str) -> tuple[str, dict]:
    """Split ``"name{k=v,...}"`` into the name and a parameter dict."""
    match = _SPEC_RE.match(text)
    if not match:
        raise SymbolError(f"malformed symbol spec {text!r}")
    name, body = match.group(1), match.group(2)
    params: dict = {}
    if body and body.strip():
        for part in re.split(r",(?![^\[]*\])", body):
            if "=" not in part:
                raise SymbolError(f"malformed parameter {part!r} in {text!r}")
            key, value = part.split("=", 1)
            try:
                params[key.strip()] = ast.literal_eval(value.strip())
            except (ValueError, SyntaxError) as exc:
                raise SymbolError(f"bad value for {key.strip()!r} in {text!r}") from exc
    return name, params


def build_symbol(text: str, **defaults) -> Symbol:
    name, params = parse_symbol_spec(text)
    if name not in REGISTRY:
        raise SymbolError(f"unknown symbol {name!r}; valid: {', '.join(sorted(REGISTRY))}")
    try:
        return REGISTRY[name](**{**defaults, **params})
    except TypeError as exc:
        raise SymbolError(f"bad parameters for {name}: {exc}") from exc
