"""Anisotropic Littlewood-Paley machinery.

The distance is ``rho(xi) = sum_i |xi_i|^{e_i}`` with the profile exponents
``e_i`` (alpha on smooth axes, beta on gained axes).  The dilation
``A_lam = diag(lam^{1/e_i})`` satisfies ``rho(A_lam xi) = lam rho(xi)``, and the
dyadic block of level ``j`` is ``phi(rho(xi) / 2^j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .field import Grid, SampledField, Side, forward_transform, inverse_transform
from .holder import AnisotropyProfile
from .symbols import Symbol

__all__ = [
    "LPError",
    "smooth_step",
    "CutoffPair",
    "build_cutoffs",
    "DyadicScaler",
    "aniso_distance",
    "partition_residual",
    "default_levels",
    "block_decompose",
    "localized_kernel",
    "theta_kernel",
    "kernel_spectrum",
    "edge_mass_fraction",
    "moment_integral",
    "zero_mean_slice_residual",
]


class LPError(ValueError):
    pass


def smooth_step(t, sharpness: float = 1.0) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-s/t)."""
    t = np.asarray(t, dtype=float)

    def f(v):
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = np.exp(-sharpness / v[pos])
        return out

    a, b = f(t), f(1.0 - t)
    return a / (a + b)


@dataclass(frozen=True)
class CutoffPair:
    """``psi`` (1 on [0,1], 0 on [2,inf)), ``phi = psi(r) - psi(2r)`` and ``omega``
    (1 on [1/2,2], 0 off (1/4,4))."""

    sharpness: float = 1.0

    def psi(self, r) -> np.ndarray:
        return smooth_step(2.0 - np.asarray(r, dtype=float), self.sharpness)

    def phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.psi(r) - self.psi(2.0 * r)

    def omega(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return smooth_step(4.0 * (r - 0.25), self.sharpness) * smooth_step((4.0 - r) / 2.0, self.sharpness)


def build_cutoffs(transition_sharpness: float = 1.0) -> CutoffPair:
    if not transition_sharpness > 0:
        raise LPError("transition sharpness must be positive")
    return CutoffPair(float(transition_sharpness))


def aniso_distance(x, profile: AnisotropyProfile) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != profile.dims:
        raise LPError(f"expected {profile.dims} components, got {x.shape[-1]}")
    r = np.sum(np.abs(x) ** np.asarray(profile.exponents), axis=-1)
    return float(r) if r.ndim == 0 else r


@dataclass(frozen=True)
class DyadicScaler:
    """The dilation ``A_j = diag(2^{j/e_i})`` and its determinant ``a_j``."""

    profile: AnisotropyProfile
    j: int

    @property
    def factors(self) -> np.ndarray:
        return 2.0 ** (self.j * np.asarray(self.profile.weights, dtype=float))

    @property
    def determinant(self) -> float:
        return float(2.0 ** (self.j * float(np.sum(self.profile.weights))))

    def apply(self, xi) -> np.ndarray:
        return np.asarray(xi, dtype=float) * self.factors

    def inverse(self, xi) -> np.ndarray:
        return np.asarray(xi, dtype=float) / self.factors


def partition_residual(profile: AnisotropyProfile, cutoffs: CutoffPair, xi_samples,
                       j_range: tuple[int, int]) -> float:
    """``max |sum_j phi(rho(xi)/2^j) - 1|`` over the samples."""
    j_min, j_max = j_range
    if j_max < j_min:
        raise LPError("empty level range")
    xi = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    r = aniso_distance(xi, profile)
    narrow = (2.0 ** j_min > r / 4.0) | (2.0 ** j_max < 4.0 * r)
    if narrow.any():
        bad = xi[np.argmax(narrow)]
        raise LPError(f"level range {j_range} too narrow for xi={bad.tolist()}")
    total = np.zeros_like(r)
    for j in range(j_min, j_max + 1):
        total += cutoffs.phi(r / 2.0 ** j)
    return float(np.max(np.abs(total - 1.0)))


def _grid_rho(grid: Grid, profile: AnisotropyProfile) -> np.ndarray:
    if profile.dims != grid.dims:
        raise LPError("profile and grid dimensions differ")
    r = 0.0
    for a, (xi, e) in enumerate(zip(grid.frequency_mesh(), profile.exponents)):
        r = r + np.abs(xi) ** e
    return np.broadcast_to(r, grid.shape)


def default_levels(grid: Grid, profile: AnisotropyProfile) -> tuple[int, int]:
    """Levels whose blocks cover every nonzero frequency node of the grid."""
    r = _grid_rho(grid, profile)
    nz = r[r > 0]
    return int(np.floor(np.log2(nz.min()))) - 2, int(np.ceil(np.log2(nz.max()))) + 2


def block_decompose(u: SampledField, profile: AnisotropyProfile, cutoffs: CutoffPair,
                    j_range: tuple[int, int] | None = None) -> dict[int, SampledField]:
    """Dyadic blocks ``u_j`` with spectra ``u~ phi(rho/2^j)``; they sum to ``u`` minus its mean."""
    if u.side is not Side.PHYSICAL:
        raise LPError("block_decompose expects a physical-side field")
    j_min, j_max = default_levels(u.grid, profile) if j_range is None else j_range
    if j_max < j_min:
        raise LPError("empty level range")
    spec = forward_transform(u).values
    r = _grid_rho(u.grid, profile)
    blocks = {}
    for j in range(j_min, j_max + 1):
        weight = cutoffs.phi(r / 2.0 ** j)
        blocks[j] = inverse_transform(SampledField(u.grid, spec * weight, Side.FREQUENCY))
    return blocks


def kernel_spectrum(m: Symbol, j: int, grid: Grid, profile: AnisotropyProfile,
                    cutoffs: CutoffPair, extra: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """``m(A_j xi) chi(xi)`` on the grid's frequency nodes (optionally times ``extra(rho)``)."""
    _check_resolution(grid, profile)
    r = _grid_rho(grid, profile)
    chi = cutoffs.omega(r)
    if extra is not None:
        chi = chi * extra(r)
    live = chi != 0
    xi = grid.frequency_points()[live]
    out = np.zeros(grid.shape, dtype=complex)
    out[live] = m(DyadicScaler(profile, j).apply(xi)) * chi[live]
    return out


def _check_resolution(grid: Grid, profile: AnisotropyProfile) -> None:
    for a, w in enumerate(profile.weights):
        L, n = grid.extent[a], grid.points[a]
        inner = 0.25 ** w
        outer = 4.0 ** w
        if np.pi / L > inner / 2.0 or np.pi * (n // 2 - 1) / L < outer:
            raise LPError(f"grid does not resolve the level-0 annulus on axis {a}")


def localized_kernel(m: Symbol, j: int, grid: Grid, profile: AnisotropyProfile,
                     cutoffs: CutoffPair | None = None) -> SampledField:
    """Samples of ``n_j`` from its spectrum ``m(A_j xi) chi(xi)``, ``chi = omega(rho)``."""
    cutoffs = build_cutoffs() if cutoffs is None else cutoffs
    spec = kernel_spectrum(m, j, grid, profile, cutoffs)
    return inverse_transform(SampledField(grid, spec, Side.FREQUENCY))


def theta_kernel(m: Symbol, j: int, grid: Grid, profile: AnisotropyProfile,
                 cutoffs: CutoffPair | None = None) -> SampledField:
    """``theta_j = n_j * Phi``, spectrum ``m(A_j xi) chi(xi) phi(rho(xi))``."""
    cutoffs = build_cutoffs() if cutoffs is None else cutoffs
    spec = kernel_spectrum(m, j, grid, profile, cutoffs, extra=cutoffs.phi)
    return inverse_transform(SampledField(grid, spec, Side.FREQUENCY))


def edge_mass_fraction(n: SampledField, margin: float = 0.1) -> float:
    """Share of ``int |n|`` lying within ``margin * L`` of the box boundary."""
    a = np.abs(n.values)
    total = a.sum()
    if total == 0:
        return 0.0
    edge = np.zeros(n.grid.shape, dtype=bool)
    for ax, x in enumerate(n.grid.mesh()):
        edge |= np.abs(x) >= (1.0 - margin) * n.grid.extent[ax]
    return float(a[edge].sum() / total)


def moment_integral(n: SampledField, profile: AnisotropyProfile, gamma: float | None = None,
                    edge_tol: float = 0.01) -> float:
    """``int (1 + sum_k |x_k|^{e_k gamma}) |n(x)| dx`` by the periodic trapezoid rule."""
    if n.side is not Side.PHYSICAL:
        raise LPError("moment_integral expects a physical-side field")
    gamma = profile.gamma if gamma is None else gamma
    frac = edge_mass_fraction(n)
    if frac > edge_tol:
        raise LPError(f"kernel mass near the box edge is {frac:.3g}; enlarge the box")
    weight = 1.0
    for x, e in zip(n.grid.mesh(), profile.exponents):
        weight = weight + np.abs(x) ** (e * gamma)
    return float(np.sum(weight * np.abs(n.values)) * n.grid.cell_volume)


def zero_mean_slice_residual(theta: SampledField, slice_axes: Sequence[int]) -> float:
    """Integrate over the axes not in ``slice_axes`` and compare with the integral of ``|theta|``.

    Returns ``max |int theta dz'| / max int |theta| dz'`` over the kept coordinates.
    """
    keep = {a % theta.grid.dims for a in slice_axes}
    over = tuple(a for a in range(theta.grid.dims) if a not in keep)
    if not over:
        raise LPError("no axes left to integrate over")
    absolute = np.sum(np.abs(theta.values), axis=over)
    scale_ = float(np.max(absolute))
    if scale_ == 0.0:
        return 0.0
    return float(np.max(np.abs(np.sum(theta.values, axis=over))) / scale_)
