"""Applying Fourier multipliers to sampled fields and measuring the Hölder gain."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .field import FieldError, Grid, SampledField, Side, forward_transform, inverse_transform
from .holder import AnisotropyProfile, fit_exponent, partial_seminorm
from .lpdecomp import build_cutoffs
from .symbols import Symbol, SymbolError

__all__ = [
    "DC_POLICIES",
    "multiplier_on_grid",
    "apply_multiplier",
    "GainEntry",
    "GainReport",
    "gain_experiment",
    "holder_bump_field",
    "band_limited_field",
    "ensemble_fields",
]

DC_POLICIES = ("auto", "zero", "average", "value")


def _first_ring(grid: Grid) -> np.ndarray:
    """Mask of frequency nodes at index distance 1 (sup-norm) from the origin."""
    idx = np.meshgrid(*[np.rint(np.fft.fftfreq(n) * n).astype(int) for n in grid.points],
                      indexing="ij", sparse=True)
    dist = 0
    for k in idx:
        dist = np.maximum(dist, np.abs(k))
    return np.broadcast_to(dist == 1, grid.shape)


def _nyquist_average(m: Symbol, grid: Grid, vals: np.ndarray) -> None:
    """Average ``m`` over the sign flips of Nyquist components, in place.

    A Nyquist bin stands for both ``+xi_N`` and ``-xi_N``; averaging keeps
    Hermitian symbols Hermitian on the grid, so real fields stay real.
    """
    idx = np.meshgrid(*[np.arange(n) for n in grid.points], indexing="ij", sparse=True)
    flags = [np.broadcast_to(k == n // 2, grid.shape) for k, n in zip(idx, grid.points)]
    mask = np.logical_or.reduce(flags)
    pts = grid.frequency_points()[mask]
    nyq = np.stack([f[mask] for f in flags], axis=-1)
    acc = np.zeros(len(pts), dtype=complex)
    for signs in itertools.product((1.0, -1.0), repeat=grid.dims):
        acc += m(pts * np.where(nyq, np.asarray(signs), 1.0))
    vals[mask] = acc / 2 ** grid.dims


def multiplier_on_grid(m: Symbol, grid: Grid, dc: str | complex = "auto") -> tuple[np.ndarray, str]:
    """Sample ``m`` on the grid's frequency nodes and fill the zero bin.

    ``auto``: 0 when ``m`` declares a vanishing slice, the symbol value when it is
    finite there, else the average of ``m`` over the first ring of nodes.
    Nyquist bins carry the average over their sign flips.
    """
    if m.dims != grid.dims:
        raise SymbolError(f"{m.name} has {m.dims} axes, grid has {grid.dims}")
    vals = m(grid.frequency_points())
    _nyquist_average(m, grid, vals)
    origin = (0,) * grid.dims
    if isinstance(dc, (int, float, complex)) and not isinstance(dc, bool):
        vals[origin], policy = complex(dc), f"fixed:{complex(dc)!r}"
    elif dc == "zero" or (dc == "auto" and m.vanishing_axes):
        vals[origin], policy = 0.0, "zero"
    elif dc in ("auto", "value") and np.isfinite(vals[origin]):
        policy = "symbol_value"
    elif dc in ("auto", "average"):
        vals[origin], policy = complex(np.mean(vals[_first_ring(grid)])), "ring_average"
    else:
        raise SymbolError(f"unknown DC policy {dc!r}; valid: {', '.join(DC_POLICIES)} or a number")
    return vals, policy


def apply_multiplier(m: Symbol, u: SampledField, dc: str | complex = "auto",
                     return_policy: bool = False):
    """``v = F^-1 (m F u)``."""
    if u.side is not Side.PHYSICAL:
        raise FieldError("apply_multiplier expects a physical-side field")
    mult, policy = multiplier_on_grid(m, u.grid, dc)
    spec = forward_transform(u).values * mult
    v = inverse_transform(SampledField(u.grid, spec, Side.FREQUENCY))
    return (v, policy) if return_policy else v


@dataclass
class GainEntry:
    axis: int
    target: float
    seminorm: float
    fitted_exponent: float | None
    group: str


@dataclass
class GainReport:
    symbol: str
    gamma: float
    dc_policy: str
    inputs: list[GainEntry] = field(default_factory=list)
    outputs: list[GainEntry] = field(default_factory=list)
    imag_leak: float = 0.0

    @property
    def input_sum(self) -> float:
        return float(sum(e.seminorm for e in self.inputs))

    def gain_ratios(self) -> dict[str, float]:
        """Output seminorm over the summed input seminorms, keyed ``"group:axis"``."""
        s = self.input_sum
        return {f"{e.group}:{e.axis}": (e.seminorm / s if s > 0 else math.inf) for e in self.outputs}

    @property
    def max_gain_ratio(self) -> float:
        return max(self.gain_ratios().values())

    def output_exponent(self, axis: int, group: str | None = None) -> float | None:
        return next(e.fitted_exponent for e in self.outputs
                    if e.axis == axis and (group is None or e.group == group))

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "gamma": self.gamma,
            "dc_policy": self.dc_policy,
            "inputs": [asdict(e) for e in self.inputs],
            "outputs": [asdict(e) for e in self.outputs],
            "gain_ratios": self.gain_ratios(),
            "imag_leak": self.imag_leak,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["side", "axis", "group", "target", "seminorm", "fitted_exponent", "gain_ratio"])
        ratios = self.gain_ratios()
        for side, entries in (("input", self.inputs), ("output", self.outputs)):
            for e in entries:
                w.writerow([side, e.axis, e.group, repr(e.target), repr(e.seminorm),
                            "" if e.fitted_exponent is None else repr(e.fitted_exponent),
                            repr(ratios[f"{e.group}:{e.axis}"]) if side == "output" else ""])
        return buf.getvalue()


def _fit(u: SampledField, axis: int, k: int, fit_steps: int, periodic: bool) -> float | None:
    dx = u.grid.spacing[axis]
    top = min(fit_steps * dx, u.grid.extent[axis] / (2 * k))
    try:
        return fit_exponent(u, axis, k, (dx, top), periodic)
    except FieldError:
        return None


def gain_experiment(m: Symbol, profile: AnisotropyProfile, u: SampledField, *,
                    fit_steps: int = 8, periodic: bool = True, dc: str | complex = "auto") -> GainReport:
    """Input seminorms on the smooth axes, output seminorms and exponents on all axes.

    Exponents are fitted over step sizes ``dx .. fit_steps*dx`` (factor-2 ladder).
    """
    if profile.dims != u.grid.dims:
        raise FieldError("profile axes do not match the grid")
    v, policy = apply_multiplier(m, u, dc, return_policy=True)
    leak = float(np.max(np.abs(v.values.imag)))
    v = v.with_values(v.values.real)
    u_real = u.with_values(u.values.real)
    targets = profile.target_exponents()
    report = GainReport(m.spec, profile.gamma, policy, imag_leak=leak)
    for a in profile.smooth_axes:
        l = float(targets[a])
        k = math.floor(l) + 1
        report.inputs.append(GainEntry(a, l, partial_seminorm(u_real, a, l, k, periodic),
                                       _fit(u_real, a, k, fit_steps, periodic), "smooth"))
    for a in range(u.grid.dims):
        l = float(targets[a])
        k = math.floor(l) + 1
        group = "smooth" if a in profile.smooth_axes else "gained"
        report.outputs.append(GainEntry(a, l, partial_seminorm(v, a, l, k, periodic),
                                        _fit(v, a, k, fit_steps, periodic), group))
    return report


# -- field families ----------------------------------------------------------

def _plateau(grid: Grid, width: float = 0.5) -> np.ndarray:
    """Smooth cutoff equal to 1 on the central ``width/2`` of the box and 0 beyond ``width``."""
    psi = build_cutoffs().psi
    out = 1.0
    for a, x in enumerate(grid.mesh()):
        out = out * psi(2.0 * np.abs(x) / (width * grid.extent[a]))
    return out


def holder_bump_field(grid: Grid, gamma: float, rough_axes: Sequence[int], rng: np.random.Generator,
                      bumps: int = 3) -> SampledField:
    """Random sum of ``|x_a - c|^gamma H(x_b - c_b)`` terms times a smooth cutoff.

    ``a`` runs over ``rough_axes`` and the Heaviside factors over the other
    axes, so the field is Hölder along ``rough_axes`` and merely bounded
    (with jumps) along the rest.
    """
    mesh = grid.mesh()
    others = [b for b in range(grid.dims) if b not in set(rough_axes)]
    total = 0.0
    for _ in range(bumps):
        a = int(rng.choice(list(rough_axes)))
        c = rng.uniform(-0.25, 0.25) * grid.extent[a]
        term = rng.uniform(0.5, 1.5) * np.abs(mesh[a] - c) ** gamma
        for b in others:
            term = term * (mesh[b] > rng.uniform(-0.25, 0.25) * grid.extent[b])
        total = total + term
    total = total - np.mean(np.broadcast_to(total, grid.shape))
    return SampledField(grid, np.broadcast_to(total * _plateau(grid), grid.shape), Side.PHYSICAL)


def band_limited_field(grid: Grid, rng: np.random.Generator, max_index: int = 6) -> SampledField:
    """Real field with random Fourier coefficients on index-distance ``1..max_index`` bins."""
    idx = np.meshgrid(*[np.rint(np.fft.fftfreq(n) * n).astype(int) for n in grid.points],
                      indexing="ij", sparse=True)
    dist = 0
    for k in idx:
        dist = np.maximum(dist, np.abs(k))
    mask = (dist >= 1) & (dist <= max_index)
    coef = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * mask
    vals = np.fft.ifftn(coef).real
    vals /= np.max(np.abs(vals))
    return SampledField(grid, vals, Side.PHYSICAL)


def ensemble_fields(grid: Grid, family: str, size: int, seed: int, gamma: float = 0.5,
                    rough_axes: Sequence[int] = (0,)) -> list[SampledField]:
    """Member ``i`` is drawn with seed ``seed + i``."""
    out = []
    for i in range(size):
        rng = np.random.default_rng(seed + i)
        if family == "holder_bumps":
            out.append(holder_bump_field(grid, gamma, rough_axes, rng))
        elif family == "band_limited":
            out.append(band_limited_field(grid, rng))
        else:
            raise ValueError(f"unknown field family {family!r}; valid: holder_bumps, band_limited")
    return out
