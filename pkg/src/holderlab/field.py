"""Sampled fields on a periodic box and their Fourier transforms.

The box is ``[-L_1, L_1) x ... x [-L_N, L_N)`` with ``n_i`` equispaced nodes
``x_k = -L_i + k * 2L_i/n_i`` per axis.  The forward transform approximates

    u~(xi) = int exp(-i x . xi) u(x) dx

on the frequency nodes ``xi_k = pi k / L_i``, ``k in [-n_i/2, n_i/2)``.  Spectra
are stored in numpy's FFT order (``np.fft.fftfreq``), so the signed index of a
bin is ``fftfreq(n) * n``.  The inverse transform carries the ``(2 pi)^-N``
factor, which makes ``inverse(forward(u)) == u`` exactly up to rounding.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "Side",
    "SampledField",
    "FieldError",
    "sample",
    "forward_transform",
    "inverse_transform",
    "save_field",
    "load_field",
    "spectral_derivative",
]


class FieldError(ValueError):
    """Raised on malformed grids, fields, or transform misuse."""


class Side(str, Enum):
    PHYSICAL = "physical"
    FREQUENCY = "frequency"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid over ``prod_i [-L_i, L_i)``."""

    extent: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        extent = tuple(float(v) for v in np.atleast_1d(self.extent))
        points = tuple(int(v) for v in np.atleast_1d(self.points))
        if len(extent) != len(points) or not extent:
            raise FieldError("extent and points must have the same positive length")
        for L, n in zip(extent, points):
            if not (np.isfinite(L) and L > 0):
                raise FieldError(f"box half-width must be positive, got {L}")
            if n < 4 or n % 2:
                raise FieldError(f"points per axis must be even and >= 4, got {n}")
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "points", points)

    @classmethod
    def cube(cls, dims: int, extent: float, points: int) -> "Grid":
        return cls((extent,) * dims, (points,) * dims)

    @property
    def dims(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * L / n for L, n in zip(self.extent, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod([2.0 * L for L in self.extent]))

    def nodes(self, axis: int) -> np.ndarray:
        L, n = self.extent[axis], self.points[axis]
        return -L + np.arange(n) * (2.0 * L / n)

    def frequencies(self, axis: int) -> np.ndarray:
        """Frequency nodes ``pi k / L`` of one axis, in FFT order."""
        n = self.points[axis]
        return np.pi / self.extent[axis] * (np.fft.fftfreq(n) * n)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.nodes(a) for a in range(self.dims)], indexing="ij", sparse=True)

    def frequency_mesh(self) -> list[np.ndarray]:
        return np.meshgrid(
            *[self.frequencies(a) for a in range(self.dims)], indexing="ij", sparse=True
        )

    def frequency_points(self) -> np.ndarray:
        """Dense ``(..., N)`` array of all frequency vectors."""
        dense = np.meshgrid(*[self.frequencies(a) for a in range(self.dims)], indexing="ij")
        return np.stack(dense, axis=-1)

    def physical_points(self) -> np.ndarray:
        dense = np.meshgrid(*[self.nodes(a) for a in range(self.dims)], indexing="ij")
        return np.stack(dense, axis=-1)

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.extent, tuple(n * factor for n in self.points))

    def to_dict(self) -> dict:
        return {"dims": self.dims, "extent": list(self.extent), "points": list(self.points)}


@dataclass(frozen=True)
class SampledField:
    grid: Grid
    values: np.ndarray = field(repr=False)
    side: Side = Side.PHYSICAL

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise FieldError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise FieldError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "side", Side(self.side))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def with_values(self, values: np.ndarray) -> "SampledField":
        return SampledField(self.grid, values, self.side)

    def __add__(self, other: "SampledField") -> "SampledField":
        _check_compatible(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledField") -> "SampledField":
        _check_compatible(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "SampledField":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        """Quadrature L2 norm; frequency-side fields use the Plancherel weight."""
        g = self.grid
        if self.side is Side.PHYSICAL:
            w = g.cell_volume
        else:
            w = float(np.prod([np.pi / L for L in g.extent])) / (2 * np.pi) ** g.dims
        return float(np.sqrt(w * np.sum(np.abs(self.values) ** 2)))


def _check_compatible(a: SampledField, b: SampledField) -> None:
    if a.grid != b.grid or a.side is not b.side:
        raise FieldError("fields live on different grids or sides")


def sample(f: Callable[..., np.ndarray], grid: Grid) -> SampledField:
    """Sample ``f(x_1, ..., x_N)`` on the grid nodes (broadcasting call)."""
    values = np.broadcast_to(np.asarray(f(*grid.mesh()), dtype=complex), grid.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = np.argwhere(bad)[0]
        where = tuple(float(grid.nodes(a)[i]) for a, i in enumerate(idx))
        raise FieldError(f"non-finite sample at node {where}")
    return SampledField(grid, values, Side.PHYSICAL)


def _phase(grid: Grid) -> np.ndarray:
    # (-1)^k for the signed bin index k; accounts for the box starting at -L
    sign = 1.0
    for a in range(grid.dims):
        n = grid.points[a]
        k = np.rint(np.fft.fftfreq(n) * n).astype(int)
        shape = [1] * grid.dims
        shape[a] = n
        sign = sign * np.where(k % 2 == 0, 1.0, -1.0).reshape(shape)
    return sign


def forward_transform(u: SampledField) -> SampledField:
    if u.side is not Side.PHYSICAL:
        raise FieldError("forward_transform expects a physical-side field")
    g = u.grid
    spec = g.cell_volume * np.fft.fftn(u.values) * _phase(g)
    return SampledField(g, spec, Side.FREQUENCY)


def inverse_transform(s: SampledField) -> SampledField:
    if s.side is not Side.FREQUENCY:
        raise FieldError("inverse_transform expects a frequency-side field")
    g = s.grid
    vals = np.fft.ifftn(s.values * _phase(g)) / g.cell_volume
    return SampledField(g, vals, Side.PHYSICAL)


# -- serialization -----------------------------------------------------------

_MAGIC = b"HLFD"
_VERSION = 1


def _header(u: SampledField) -> dict:
    return {
        "version": _VERSION,
        "dims": u.grid.dims,
        "points": list(u.grid.points),
        "extent": list(u.grid.extent),
        "side": u.side.value,
    }


def save_field(u: SampledField, path: str | Path) -> tuple[Path, Path]:
    """Write the binary container and its JSON sidecar (``<path>.json``).

    Layout: magic ``HLFD``, uint32 version, uint32 dims, uint8 side flag
    (0 physical, 1 frequency), dims x int64 points, dims x float64 extent,
    then row-major little-endian (re, im) float64 pairs.
    """
    path = Path(path)
    g = u.grid
    head = struct.pack("<4sIIB", _MAGIC, _VERSION, g.dims, 0 if u.side is Side.PHYSICAL else 1)
    head += struct.pack(f"<{g.dims}q", *g.points)
    head += struct.pack(f"<{g.dims}d", *g.extent)
    payload = np.ascontiguousarray(u.values, dtype="<c16").tobytes(order="C")
    path.write_bytes(head + payload)
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(_header(u), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path, sidecar


def load_field(path: str | Path) -> SampledField:
    raw = Path(path).read_bytes()
    fixed = struct.calcsize("<4sIIB")
    if len(raw) < fixed:
        raise FieldError("truncated field container")
    magic, version, dims, side = struct.unpack_from("<4sIIB", raw, 0)
    if magic != _MAGIC or version != _VERSION:
        raise FieldError("not a holderlab field container")
    off = fixed
    points = struct.unpack_from(f"<{dims}q", raw, off)
    off += 8 * dims
    extent = struct.unpack_from(f"<{dims}d", raw, off)
    off += 8 * dims
    grid = Grid(extent, points)
    count = int(np.prod(points))
    if len(raw) - off != 16 * count:
        raise FieldError("payload size does not match header")
    values = np.frombuffer(raw, dtype="<c16", count=count, offset=off).reshape(points)
    return SampledField(grid, values, Side.PHYSICAL if side == 0 else Side.FREQUENCY)


def spectral_derivative(u: SampledField, orders: Sequence[int]) -> SampledField:
    """``D^orders u`` computed by multiplying the spectrum by ``(i xi)^orders``.

    For odd orders the unpaired Nyquist bin is zeroed so real input stays real.
    """
    g = u.grid
    if len(orders) != g.dims:
        raise FieldError("one derivative order per axis required")
    spec = forward_transform(u).values
    for a, k in enumerate(orders):
        if k == 0:
            continue
        xi = g.frequencies(a)
        factor = (1j * xi) ** k
        if k % 2:
            factor[g.points[a] // 2] = 0.0
        shape = [1] * g.dims
        shape[a] = -1
        spec = spec * factor.reshape(shape)
    return inverse_transform(SampledField(g, spec, Side.FREQUENCY))

