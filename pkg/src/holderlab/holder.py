"""Per-axis Hölder seminorms of sampled fields, with higher-order differences.

All seminorms here are grid estimates of

    <u>_{x_i}^{(l)} ~ sup_{x, h>0} |Delta^k_{h, x_i} u(x)| / h^l,   k > l,

taken over grid nodes and steps that are multiples of the grid spacing.  They
are lower bounds of the continuum quantity, and they never decrease when the
grid is refined by an integer factor (the coarse pairs are a subset).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import comb

from .field import FieldError, SampledField, Side, spectral_derivative

__all__ = [
    "AnisotropyProfile",
    "SeminormEntry",
    "SeminormReport",
    "difference_sup",
    "partial_seminorm",
    "aniso_norm",
    "fit_exponent",
    "parabolic_norm",
    "step_ladder",
]


@dataclass(frozen=True)
class AnisotropyProfile:
    """Base exponent ``gamma`` plus the smooth (alpha) and gained (beta) axis groups.

    ``smooth`` and ``gained`` are sequences of ``(axis, exponent)`` pairs (or
    dicts mapping axis to exponent).  The
    dyadic scaling attached to the profile stretches axis ``i`` by
    ``2^(j / exponent_i)``.
    """

    gamma: float
    smooth: tuple[tuple[int, float], ...]
    gained: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        pairs = lambda g: sorted(g.items()) if isinstance(g, dict) else g
        smooth = tuple((int(a), float(e)) for a, e in pairs(self.smooth))
        gained = tuple((int(a), float(e)) for a, e in pairs(self.gained))
        object.__setattr__(self, "smooth", smooth)
        object.__setattr__(self, "gained", gained)
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        axes = [a for a, _ in smooth + gained]
        if sorted(axes) != list(range(len(axes))):
            raise ValueError("every axis must appear exactly once across the two groups")
        for a, e in smooth:
            if not 0.0 < e <= 1.0:
                raise ValueError(f"smooth-axis exponent must lie in (0, 1], axis {a} has {e}")
        for a, e in gained:
            if not e > 0.0:
                raise ValueError(f"gained-axis exponent must be positive, axis {a} has {e}")

    @classmethod
    def isotropic(cls, dims: int, gamma: float, smooth_axes: Iterable[int] = (0,)) -> "AnisotropyProfile":
        smooth_axes = set(smooth_axes)
        return cls(
            gamma,
            tuple((a, 1.0) for a in range(dims) if a in smooth_axes),
            tuple((a, 1.0) for a in range(dims) if a not in smooth_axes),
        )

    @property
    def dims(self) -> int:
        return len(self.smooth) + len(self.gained)

    @property
    def exponents(self) -> np.ndarray:
        """Per-axis exponent, indexed by axis."""
        out = np.empty(self.dims)
        for a, e in self.smooth + self.gained:
            out[a] = e
        return out

    @property
    def weights(self) -> np.ndarray:
        """Per-axis scaling weights ``1/alpha_i`` and ``1/beta_k``."""
        return 1.0 / self.exponents

    @property
    def smooth_axes(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.smooth)

    @property
    def gained_axes(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.gained)

    def target_exponents(self) -> np.ndarray:
        """Hölder exponents ``alpha_i gamma`` / ``beta_k gamma`` per axis."""
        return self.gamma * self.exponents

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "smooth": [list(p) for p in self.smooth],
                "gained": [list(p) for p in self.gained]}


@dataclass
class SeminormEntry:
    axis: int
    l: float
    k: int
    value: float
    fitted_exponent: float | None = None
    label: str = ""


@dataclass
class SeminormReport:
    per_axis: list[SeminormEntry] = field(default_factory=list)
    sup_norm: float = 0.0
    l2_norm: float = 0.0

    @property
    def seminorm_sum(self) -> float:
        return float(sum(e.value for e in self.per_axis))

    @property
    def c_norm(self) -> float:
        """Sup norm plus seminorms (the C-type norm)."""
        return self.sup_norm + self.seminorm_sum

    @property
    def h_norm(self) -> float:
        """L2 norm plus seminorms (the H-type norm)."""
        return self.l2_norm + self.seminorm_sum

    def to_dict(self) -> dict:
        return {
            "per_axis": [asdict(e) for e in self.per_axis],
            "sup_norm": self.sup_norm,
            "l2_norm": self.l2_norm,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["axis", "l", "k", "value", "fitted_exponent", "label"])
        for e in self.per_axis:
            w.writerow([e.axis, repr(e.l), e.k, repr(e.value),
                        "" if e.fitted_exponent is None else repr(e.fitted_exponent), e.label])
        return buf.getvalue()


def _kth_difference(values: np.ndarray, axis: int, k: int, m: int, periodic: bool) -> np.ndarray:
    """``Delta^k`` with step ``m`` nodes along ``axis``."""
    n = values.shape[axis]
    coefs = [(-1) ** (k - j) * comb(k, j, exact=True) for j in range(k + 1)]

    def sl(a, b):
        idx = [slice(None)] * values.ndim
        idx[axis] = slice(a, b)
        return tuple(idx)

    if periodic:
        out = coefs[0] * values
        for j in range(1, k + 1):
            shift = (j * m) % n
            if shift == 0:
                out += coefs[j] * values
                continue
            out[sl(0, n - shift)] += coefs[j] * values[sl(shift, n)]
            out[sl(n - shift, n)] += coefs[j] * values[sl(0, shift)]
        return out
    width = n - k * m
    if width <= 0:
        return np.zeros((0,), dtype=values.dtype)
    out = coefs[0] * values[sl(0, width)]
    for j in range(1, k + 1):
        out += coefs[j] * values[sl(j * m, j * m + width)]
    return out


def _check_axis(u: SampledField, axis: int, k: int) -> None:
    if u.side is not Side.PHYSICAL:
        raise FieldError("seminorms are taken on physical-side fields")
    if not 0 <= axis < u.grid.dims:
        raise FieldError(f"axis {axis} out of range for a {u.grid.dims}-axis grid")
    if u.grid.points[axis] < k + 1:
        raise FieldError(f"need at least k+1 = {k + 1} points along axis {axis}")


def difference_sup(u: SampledField, axis: int, k: int, steps: Sequence[int],
                   periodic: bool = True) -> np.ndarray:
    """``sup_x |Delta^k_{m dx} u(x)|`` for each step count ``m`` in ``steps``."""
    _check_axis(u, axis, k)
    vals = u.values.real if not np.any(u.values.imag) else u.values
    out = np.empty(len(steps))
    for i, m in enumerate(steps):
        d = _kth_difference(vals, axis, k, int(m), periodic)
        out[i] = float(np.max(np.abs(d))) if d.size else 0.0
    return out


def partial_seminorm(u: SampledField, axis: int, l: float, k: int | None = None,
                     periodic: bool = True) -> float:
    """Grid estimate of the Hölder seminorm of order ``l`` along one axis.

    Steps run over ``m = 1 .. n/(2k)`` grid spacings.  With ``periodic=False``
    stencils that would cross the box edge are dropped.
    """
    if k is None:
        k = math.floor(l) + 1
    if not l > 0:
        raise FieldError("Hölder order must be positive")
    if k <= l:
        raise FieldError(f"difference order k={k} must exceed l={l}")
    _check_axis(u, axis, k)
    n = u.grid.points[axis]
    dx = u.grid.spacing[axis]
    steps = np.arange(1, n // (2 * k) + 1)
    sups = difference_sup(u, axis, k, steps, periodic)
    return float(np.max(sups / (steps * dx) ** l))


def step_ladder(h_min: float, h_max: float, spacing: float) -> np.ndarray:
    """Geometric (factor 2) ladder of step counts between ``h_min`` and ``h_max``."""
    m = max(1, int(round(h_min / spacing)))
    out = []
    while m * spacing <= h_max * (1 + 1e-12):
        out.append(m)
        m *= 2
    return np.array(out, dtype=int)


def fit_exponent(u: SampledField, axis: int, k: int = 1,
                 h_range: tuple[float, float] | None = None,
                 periodic: bool = True) -> float | None:
    """Least-squares slope of ``log sup_x |Delta^k_h u|`` against ``log h``.

    The default ladder runs from one spacing to ``extent/(2k)``.  Returns
    ``None`` when every difference on the ladder vanishes (a flat field);
    otherwise the slope clipped to ``[0, k]``.
    """
    g = u.grid
    dx, L = g.spacing[axis], g.extent[axis]
    if h_range is None:
        h_range = (dx, L / (2 * k))
    h_min, h_max = h_range
    if h_min < dx * (1 - 1e-12) or h_max > L / (2 * k) * (1 + 1e-12):
        raise FieldError(f"h_range {h_range} outside [{dx}, {L / (2 * k)}]")
    steps = step_ladder(h_min, h_max, dx)
    if len(steps) < 4:
        raise FieldError("step ladder has fewer than 4 values")
    sups = difference_sup(u, axis, k, steps, periodic)
    scale = max(u.max_abs(), 1e-300)
    if np.all(sups <= 1e-13 * scale):
        return None
    ok = sups > 0
    if ok.sum() < 2:
        return None
    slope = np.polyfit(np.log(steps[ok] * dx), np.log(sups[ok]), 1)[0]
    return float(np.clip(slope, 0.0, k))


def aniso_norm(u: SampledField, profile: AnisotropyProfile | None, l_vector: Sequence[float],
               orders: Sequence[int] | None = None, periodic: bool | Sequence[bool] = True,
               fit: bool = True) -> SeminormReport:
    """Sup norm, L2 norm, and the per-axis seminorms of order ``l_vector[i]``."""
    g = u.grid
    if u.side is not Side.PHYSICAL:
        raise FieldError("aniso_norm expects a physical-side field")
    if len(l_vector) != g.dims:
        raise FieldError("one Hölder order per axis required")
    if profile is not None and profile.dims != g.dims:
        raise FieldError("profile axes do not match the grid")
    if any(not l > 0 for l in l_vector):
        raise FieldError("Hölder orders must be positive")
    periodic = _per_axis(periodic, g.dims)
    report = SeminormReport(sup_norm=u.max_abs(), l2_norm=u.l2_norm())
    for axis, l in enumerate(l_vector):
        k = orders[axis] if orders is not None else math.floor(l) + 1
        value = partial_seminorm(u, axis, l, k, periodic[axis])
        fitted = None
        if fit:
            try:
                fitted = fit_exponent(u, axis, k, periodic=periodic[axis])
            except FieldError:
                fitted = None
        report.per_axis.append(SeminormEntry(axis, float(l), int(k), value, fitted))
    return report


def _per_axis(flag, dims: int) -> list[bool]:
    if isinstance(flag, (bool, np.bool_)):
        return [bool(flag)] * dims
    flag = list(flag)
    if len(flag) != dims:
        raise FieldError("one periodicity flag per axis required")
    return flag


def _multi_indices(total: int, axes: Sequence[int], dims: int) -> list[tuple[int, ...]]:
    out = []
    for combo in itertools.combinations_with_replacement(axes, total):
        idx = [0] * dims
        for a in combo:
            idx[a] += 1
        out.append(tuple(idx))
    return out


def parabolic_norm(u: SampledField, time_axis: int, l1: float, l2: float,
                   derivative: Callable[[tuple[int, ...]], SampledField] | None = None,
                   periodic: bool | Sequence[bool] = True) -> SeminormReport:
    """Space-time norm: sup|u| + sum_{|a|=[l1]} <D^a_x u>_x + <D_t^{[l2]} u>_t.

    The spatial Hölder constant ``<w>_x`` is the sum of first-difference
    seminorms over the spatial axes.  ``derivative(orders)`` must return
    ``D^orders u``; the default is spectral differentiation on the periodic box.
    """
    if float(l1).is_integer() or float(l2).is_integer():
        raise FieldError("parabolic orders l1, l2 must be non-integers")
    if not (l1 > 0 and l2 > 0):
        raise FieldError("parabolic orders must be positive")
    g = u.grid
    if not 0 <= time_axis < g.dims:
        raise FieldError("time axis out of range")
    periodic = _per_axis(periodic, g.dims)
    if derivative is None:
        derivative = lambda orders: spectral_derivative(u, orders)  # noqa: E731
    space = [a for a in range(g.dims) if a != time_axis]
    n1, f1 = math.floor(l1), l1 - math.floor(l1)
    n2, f2 = math.floor(l2), l2 - math.floor(l2)
    report = SeminormReport(sup_norm=u.max_abs(), l2_norm=u.l2_norm())
    for idx in _multi_indices(n1, space, g.dims):
        w = u if n1 == 0 else derivative(idx)
        for a in space:
            report.per_axis.append(SeminormEntry(
                a, f1, 1, partial_seminorm(w, a, f1, 1, periodic[a]), None, f"D{list(idx)}"))
    t_idx = tuple(n2 if a == time_axis else 0 for a in range(g.dims))
    w = u if n2 == 0 else derivative(t_idx)
    report.per_axis.append(SeminormEntry(
        time_axis, f2, 1, partial_seminorm(w, time_axis, f2, 1, periodic[time_axis]), None,
        f"D{list(t_idx)}"))
    return report
