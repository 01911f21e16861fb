"""Numerical certification of multiplier conditions.

For a symbol ``m`` and each ``lam`` of a geometric grid, the norm

    ( sum_omega  int_{B0} |D^omega [m(A_lam xi)]|^p dxi )^{1/p},
    B0 = {1/8 <= rho(xi) <= 8},

is computed by midpoint quadrature and central finite differences.  B0 is
split into six dyadic shells ``S_k = A_{2^k} S_0``; one quadrature grid on the
bounding box of ``S_0`` serves all of them, with the Jacobian ``2^{k sum w}``.
Grid points never fall on coordinate hyperplanes, which keeps difference
stencils off kinks such as the one of ``|xi|`` at the origin of a sub-space.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .field import Grid, SampledField, Side, inverse_transform
from .holder import AnisotropyProfile
from .lpdecomp import CutoffPair, build_cutoffs, kernel_spectrum
from .parallel import ordered_map
from .symbols import Symbol, SymbolError

__all__ = [
    "CertifyError",
    "Certificate",
    "default_lambda_grid",
    "orders_up_to",
    "group_orders",
    "codim_one_orders",
    "low_order_orders",
    "annulus_derivative_norm",
    "annulus_volume",
    "certify_isotropic",
    "certify_grouped",
    "richardson_change",
    "hausdorff_young_ratio",
]

DEFAULT_DRIFT = 0.01
_SHELLS = 6  # rho in [1/8, 8)
_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


class CertifyError(ValueError):
    pass


@dataclass
class Certificate:
    symbol: str
    p: float
    order_rule: str
    orders: list
    threshold: str
    lambda_grid: list
    per_lambda_norms: list
    annulus: str
    drift_bound: float = DEFAULT_DRIFT
    notes: list = field(default_factory=list)

    @property
    def mu_estimate(self) -> float:
        return float(max(self.per_lambda_norms))

    @property
    def drift(self) -> float:
        norms = np.asarray(self.per_lambda_norms, dtype=float)
        if not np.all(np.isfinite(norms)) or norms.min() <= 0:
            return math.inf
        return float(norms.max() / norms.min() - 1.0)

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.per_lambda_norms)) and self.drift <= self.drift_bound)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["orders"] = [list(o) for o in self.orders]
        out.update(mu_estimate=self.mu_estimate, drift=self.drift, passed=self.passed)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        rows = ["lambda,norm"] + [f"{lam!r},{v!r}" for lam, v in zip(self.lambda_grid, self.per_lambda_norms)]
        return "\r\n".join(rows) + "\r\n"


def default_lambda_grid(points: int = 33, lo: float = 2.0 ** -8, hi: float = 2.0 ** 8) -> list[float]:
    return [float(v) for v in np.geomspace(lo, hi, points)]


# -- derivative enumerations ---------------------------------------------------

def orders_up_to(dims: int, s: int) -> list[tuple[int, ...]]:
    """All multi-indices with ``|omega| <= s``."""
    return [w for w in itertools.product(range(s + 1), repeat=dims) if sum(w) <= s]


def group_orders(groups: Sequence[Sequence[int]], caps: Sequence[int], dims: int) -> list[tuple[int, ...]]:
    """Mixed derivatives ``D^{w_1} ... D^{w_r}`` with ``|w_i| <= caps[i]`` on group ``i``."""
    per_group = []
    for axes, cap in zip(groups, caps):
        per_group.append([w for w in itertools.product(range(cap + 1), repeat=len(axes)) if sum(w) <= cap])
    out = []
    for combo in itertools.product(*per_group):
        w = [0] * dims
        for axes, part in zip(groups, combo):
            for a, k in zip(axes, part):
                w[a] = k
        out.append(tuple(w))
    return sorted(out)


def codim_one_orders(dims: int, s: int, last_axis: int = -1) -> list[tuple[int, ...]]:
    """``|omega'| <= s`` on all axes but ``last_axis``, which takes order 0 or 1."""
    last = last_axis % dims
    rest = [a for a in range(dims) if a != last]
    return group_orders([rest, [last]], [s, 1], dims)


def low_order_orders(dims: int, last_axis: int = -1) -> list[tuple[int, ...]]:
    """``omega_i in {0,1,2}`` off ``last_axis`` and ``omega_last in {0,1}``."""
    last = last_axis % dims
    ranges = [range(2) if a == last else range(3) for a in range(dims)]
    return sorted(itertools.product(*ranges))


# -- quadrature ----------------------------------------------------------------

def _distance(xi: np.ndarray, weights: np.ndarray, annulus: str) -> np.ndarray:
    if annulus == "rho":
        return np.sum(np.abs(xi) ** (1.0 / weights), axis=-1)
    return np.sqrt(np.sum(xi * xi, axis=-1))


def _base_shell(weights: np.ndarray, resolution: int, annulus: str) -> tuple[np.ndarray, float]:
    """Midpoint nodes of the bounding box of ``S_0 = {1/8 <= d < 1/4}`` inside ``S_0``."""
    half = 0.25 ** weights if annulus == "rho" else np.full(len(weights), 0.25)
    axes = [(-1.0 + (2 * np.arange(resolution) + 1) / resolution) * b for b in half]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(weights))
    d = _distance(pts, weights, annulus)
    live = (d >= 0.125) & (d < 0.25)
    cell = float(np.prod(2.0 * half / resolution))
    return pts[live], cell


def _check_annulus(annulus: str, weights: np.ndarray) -> None:
    if annulus not in ("rho", "euclidean"):
        raise CertifyError(f"unknown annulus {annulus!r}")
    if annulus == "euclidean" and not np.allclose(weights, weights[0]):
        raise CertifyError("the euclidean annulus needs isotropic weights")


def annulus_volume(weights: Sequence[float], resolution: int = 24, annulus: str = "rho") -> float:
    w = np.asarray(weights, dtype=float)
    _check_annulus(annulus, w)
    pts, cell = _base_shell(w, resolution, annulus)
    return float(sum(len(pts) * cell * 2.0 ** (k * w.sum()) for k in range(_SHELLS)))


def _offset_table(orders: Sequence[tuple[int, ...]]):
    """Lattice offsets needed by the orders and the stencil weight of each per order."""
    table = []
    needed: dict[tuple[int, ...], None] = {}
    for w in orders:
        if max(w) > 4:
            raise CertifyError("derivative orders above 4 per axis are not supported")
        terms = []
        for combo in itertools.product(*[_STENCILS[k].items() for k in w]):
            off = tuple(c[0] for c in combo)
            coef = float(np.prod([c[1] for c in combo]))
            terms.append((off, coef))
            needed[off] = None
        table.append((w, terms))
    return list(needed), table


def annulus_derivative_norm(m: Symbol, lam: float, p: float, orders: Sequence[tuple[int, ...]],
                            weights: Sequence[float] | None = None, resolution: int | None = None,
                            step: float = 1e-3, annulus: str = "rho") -> float:
    """``(sum_omega int_{B0} |D^omega m(A_lam xi)|^p)^{1/p}`` with central differences."""
    if not 1.0 < p <= 2.0:
        raise CertifyError(f"p must lie in (1, 2], got {p}")
    if not lam > 0:
        raise CertifyError("lambda must be positive")
    w = np.asarray(m.weights if weights is None else weights, dtype=float)
    _check_annulus(annulus, w)
    orders = [tuple(int(k) for k in o) for o in orders]
    if any(len(o) != len(w) for o in orders):
        raise CertifyError("order multi-indices must match the symbol dimension")
    resolution = resolution or (48 if len(w) <= 2 else 24)
    base, cell = _base_shell(w, resolution, annulus)
    offsets, table = _offset_table(orders)
    off_arr = np.asarray(offsets, dtype=float)
    index = {o: i for i, o in enumerate(offsets)}
    scale_lam = lam ** w
    total = 0.0
    for k in range(_SHELLS):
        grow = 2.0 ** (k * w)
        xi = base * grow
        h = step * (2.0 ** (k - 2)) ** w
        vals = np.empty((len(offsets), len(xi)), dtype=complex)
        for i, off in enumerate(off_arr):
            vals[i] = m((xi + off * h) * scale_lam)
        if not np.all(np.isfinite(vals)):
            raise CertifyError(f"{m.name} is singular inside the annulus")
        jac = cell * float(np.prod(grow))
        for w_, terms in table:
            d = sum(coef * vals[index[off]] for off, coef in terms) / float(np.prod(h ** np.asarray(w_)))
            total += jac * float(np.sum(np.abs(d) ** p))
    return float(total ** (1.0 / p))


def _sweep(m, lambda_grid, p, orders, weights, resolution, step, annulus):
    return ordered_map(lambda lam: annulus_derivative_norm(m, lam, p, orders, weights, resolution, step, annulus),
                       lambda_grid)


def _check_grid(lambda_grid: Sequence[float]) -> list[float]:
    grid = [float(v) for v in lambda_grid]
    if not grid or any(not v > 0 for v in grid):
        raise CertifyError("lambda grid must contain positive values")
    return grid


def certify_isotropic(m: Symbol, profile: AnisotropyProfile | None, p: float, s: int,
                      lambda_grid: Sequence[float] | None = None, *, resolution: int | None = None,
                      step: float = 1e-3, drift_bound: float = DEFAULT_DRIFT, annulus: str = "rho",
                      gamma: float | None = None) -> Certificate:
    """All derivatives up to total order ``s``; requires ``s > N/p + gamma``."""
    dims = m.dims
    gamma = (profile.gamma if profile is not None else 0.0) if gamma is None else gamma
    if not s > dims / p + gamma:
        raise CertifyError(f"order s={s} must exceed N/p + gamma = {dims / p + gamma:.6g}")
    weights = profile.weights if profile is not None else np.asarray(m.weights)
    grid = _check_grid(lambda_grid or default_lambda_grid())
    orders = orders_up_to(dims, s)
    norms = _sweep(m, grid, p, orders, weights, resolution, step, annulus)
    return Certificate(m.spec, p, f"total order <= {s}", orders, f"s > N/p + gamma = {dims / p + gamma:.6g}",
                       grid, norms, _annulus_label(annulus), drift_bound)


def certify_grouped(m: Symbol, groups: Sequence[Sequence[int]] | None, s: Sequence[int] | int, p: float,
                    lambda_grid: Sequence[float] | None = None, *, variant: str = "group_caps",
                    gamma: float | None = None, weights: Sequence[float] | None = None,
                    resolution: int | None = None, step: float = 1e-3,
                    drift_bound: float = DEFAULT_DRIFT, annulus: str = "rho") -> Certificate:
    """Grouped certification.

    Variants:
      ``group_caps``      ``|w_i| <= s_i`` per group; needs ``s_i > N_i/p`` (``+ gamma`` if given).
      ``codim_one``       ``|w'| <= s``, last axis order <= 1; needs ``s > (N-1)/p``.
      ``codim_one_plus``  same with ``s + 1``, a conservative reading of the order bound.
      ``low_order``       orders 0..2 off the last axis and 0..1 on it.
    """
    dims = m.dims
    groups = [list(g) for g in (groups or [list(range(dims))])]
    flat = sorted(a % dims for g in groups for a in g)
    if flat != list(range(dims)):
        raise CertifyError("groups must partition the axes")
    groups = [[a % dims for a in g] for g in groups]
    if variant == "group_caps":
        caps = [int(s)] * len(groups) if np.isscalar(s) else [int(v) for v in s]
        if len(caps) != len(groups):
            raise CertifyError("one order per group required")
        g_ = 0.0 if gamma is None else gamma
        for axes, cap in zip(groups, caps):
            if not cap > len(axes) / p + g_:
                raise CertifyError(f"group {axes}: order {cap} must exceed N_i/p{' + gamma' if gamma else ''}"
                                   f" = {len(axes) / p + g_:.6g}")
        orders = group_orders(groups, caps, dims)
        rule = f"per-group caps {caps}"
        threshold = "s_i > N_i/p" + (" + gamma" if gamma else "")
    elif variant in ("codim_one", "codim_one_plus"):
        s_ = int(s if np.isscalar(s) else max(s))
        if not s_ > (dims - 1) / p:
            raise CertifyError(f"order s={s_} must exceed (N-1)/p = {(dims - 1) / p:.6g}")
        top = s_ + (1 if variant == "codim_one_plus" else 0)
        orders = codim_one_orders(dims, top)
        rule = f"|w'| <= {top}, last-axis order <= 1"
        threshold = "s > (N-1)/p"
    elif variant == "low_order":
        orders = low_order_orders(dims)
        rule = "w_i in {0,1,2}, last-axis order in {0,1}"
        threshold = "fixed orders"
    else:
        raise CertifyError(f"unknown variant {variant!r}")
    w = np.asarray(m.weights if weights is None else weights, dtype=float)
    grid = _check_grid(lambda_grid or default_lambda_grid())
    norms = _sweep(m, grid, p, orders, w, resolution, step, annulus)
    cert = Certificate(m.spec, p, rule, orders, threshold, grid, norms, _annulus_label(annulus), drift_bound)
    cert.notes.append(f"groups={groups}")
    return cert


def _annulus_label(annulus: str) -> str:
    return "1/8 <= rho(xi) <= 8" if annulus == "rho" else "1/8 <= |xi| <= 8"


def richardson_change(m: Symbol, p: float, orders: Sequence[tuple[int, ...]], lam: float = 1.0,
                      weights: Sequence[float] | None = None, step: float = 1e-3, **kw) -> float:
    """Relative change of the annulus norm when the difference step is halved."""
    a = annulus_derivative_norm(m, lam, p, orders, weights, step=step, **kw)
    b = annulus_derivative_norm(m, lam, p, orders, weights, step=step / 2, **kw)
    return abs(a - b) / abs(a)


def hausdorff_young_ratio(m: Symbol, p: float, grid: Grid, profile: AnisotropyProfile,
                          cutoffs: CutoffPair | None = None) -> float:
    """``||n||_{p'} / ((2 pi)^{-N/p} ||m chi||_p)`` for the kernel ``n`` of ``m chi``; at most 1."""
    if not 1.0 <= p <= 2.0:
        raise CertifyError("p must lie in [1, 2]")
    cutoffs = build_cutoffs() if cutoffs is None else cutoffs
    spec = kernel_spectrum(m, 0, grid, profile, cutoffs)
    kernel = inverse_transform(SampledField(grid, spec, Side.FREQUENCY)).values
    dxi = float(np.prod([np.pi / L for L in grid.extent]))
    spec_norm = (np.sum(np.abs(spec) ** p) * dxi) ** (1.0 / p)
    q = math.inf if p == 1.0 else p / (p - 1.0)
    if math.isinf(q):
        phys = float(np.max(np.abs(kernel)))
    else:
        phys = float((np.sum(np.abs(kernel) ** q) * grid.cell_volume) ** (1.0 / q))
    return phys / ((2 * np.pi) ** (-grid.dims / p) * spec_norm)
