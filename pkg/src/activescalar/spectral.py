"""Fourier substrate on the periodic box [0, 2*pi)^d.

Coefficients are stored as full complex arrays in FFT index order, normalised
so that ``coeff(k)`` is the k-th coefficient of the trigonometric interpolant::

    g(x) = sum_k coeff(k) exp(i k.x)

With this normalisation the L2 norm used throughout the package is the plain
coefficient sum ``sum_k |coeff(k)|**2``, which equals the grid mean of ``g**2``.
The unpaired Nyquist modes (``k_axis = -n/2``) are always zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Lattice",
    "SpectralField",
    "GridField",
    "forward",
    "inverse",
    "partial_derivative",
    "dealias",
    "pointwise_product",
    "project_mean_zero",
    "hermitian_part",
    "reflect",
    "to_grid_array",
    "to_spectral_array",
]

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class Lattice:
    """Wavenumber bookkeeping for an ``n**d`` collocation grid.

    ``dealias_cut`` defaults to ``(n - 1) // 3``, the largest cutoff ``c``
    with ``3 c < n``; that is what makes quadratic products alias free.
    """

    d: int
    n: int
    dealias_cut: int | None = None

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"modes per axis must be even and >= 8, got {self.n}")
        if self.dealias_cut is None:
            object.__setattr__(self, "dealias_cut", (self.n - 1) // 3)
        if not 0 < self.dealias_cut <= self.n // 2:
            raise ValueError(
                f"dealias_cut must lie in (0, n/2], got {self.dealias_cut}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def h(self) -> float:
        return 2 * math.pi / self.n

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavevector components, each broadcast to the full shape."""
        k1 = np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)
        return tuple(np.meshgrid(*([k1] * self.d), indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(k * k for k in self.wavenumbers)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.ksq.astype(float))

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes with some component equal to -n/2."""
        m = np.zeros(self.shape, dtype=bool)
        for k in self.wavenumbers:
            m |= k == -(self.n // 2)
        return m

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on retained modes: every |k_axis| <= dealias_cut."""
        m = np.ones(self.shape, dtype=bool)
        for k in self.wavenumbers:
            m &= np.abs(k) <= self.dealias_cut
        return m

    def grid(self) -> tuple[np.ndarray, ...]:
        x = self.h * np.arange(self.n)
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij"))

    def index(self, k) -> tuple[int, ...]:
        """Array index of the integer wavevector ``k``."""
        if len(k) != self.d:
            raise ValueError(f"wavevector {k} does not have {self.d} components")
        return tuple(int(kj) % self.n for kj in k)


def reflect(c: np.ndarray) -> np.ndarray:
    """Return the array ``c(-k)`` (index reversal mod n on every axis)."""
    axes = tuple(range(c.ndim))
    return np.roll(np.flip(c, axes), 1, axes)


def hermitian_part(c: np.ndarray) -> np.ndarray:
    """Project onto coefficient arrays of real fields, exactly."""
    return 0.5 * (c + np.conj(reflect(c)))


def to_grid_array(lattice: Lattice, c: np.ndarray) -> np.ndarray:
    """Real grid samples from a Hermitian coefficient array (no checks)."""
    m = lattice.n // 2 + 1
    return sfft.irfftn(c[..., :m], s=lattice.shape, norm="forward")


def to_spectral_array(lattice: Lattice, g: np.ndarray) -> np.ndarray:
    """Full, exactly Hermitian coefficient array of real samples ``g``."""
    n = lattice.n
    half = sfft.rfftn(g, norm="forward")
    full = np.empty(lattice.shape, dtype=complex)
    full[..., : n // 2 + 1] = half
    other = tuple(range(g.ndim - 1))
    tail = half[..., 1 : n // 2]
    if other:
        tail = np.roll(np.flip(tail, other), 1, other)
    full[..., n // 2 + 1 :] = np.conj(tail[..., ::-1])
    full = hermitian_part(full)
    full[lattice.nyquist_mask] = 0.0
    return full


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real scalar on the torus."""

    lattice: Lattice
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex, copy=True)
        if c.shape != self.lattice.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match lattice {self.lattice.shape}")
        c[self.lattice.nyquist_mask] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, lattice: Lattice) -> SpectralField:
        return cls(lattice, np.zeros(lattice.shape, dtype=complex))

    @classmethod
    def from_modes(cls, lattice: Lattice, modes) -> SpectralField:
        """Build a real field from ``{k: coeff}``; the conjugate partner of
        every listed mode is filled in automatically."""
        c = np.zeros(lattice.shape, dtype=complex)
        for k, v in dict(modes).items():
            c[lattice.index(k)] += v
            c[lattice.index(tuple(-kj for kj in k))] += np.conj(v)
        return cls(lattice, 0.5 * c)

    def coeff(self, k) -> complex:
        return complex(self.coeffs[self.lattice.index(k)])

    def hermitian_defect(self) -> float:
        c = self.coeffs
        return float(np.max(np.abs(c - np.conj(reflect(c))), initial=0.0))

    def _check_partner(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.lattice != self.lattice:
            raise ValueError("fields live on different lattices")
        return other

    def __add__(self, other):
        other = self._check_partner(other)
        if other is NotImplemented:
            return other
        return SpectralField(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other):
        other = self._check_partner(other)
        if other is NotImplemented:
            return other
        return SpectralField(self.lattice, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.lattice, -self.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return SpectralField(self.lattice, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class GridField:
    """Real samples at the ``n**d`` collocation points ``x_j = 2 pi i / n``."""

    lattice: Lattice
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != self.lattice.shape:
            raise ValueError(
                f"grid shape {v.shape} does not match lattice {self.lattice.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, lattice: Lattice, func) -> GridField:
        return cls(lattice, func(*lattice.grid()))


def forward(g: GridField) -> SpectralField:
    """Grid samples to interpolant coefficients; the mean mode is kept."""
    if not np.all(np.isfinite(g.values)):
        raise ValueError("grid field contains non-finite samples")
    return SpectralField(g.lattice, to_spectral_array(g.lattice, g.values))


def inverse(f: SpectralField) -> GridField:
    defect = f.hermitian_defect()
    if defect > HERMITIAN_TOL:
        raise ValueError(
            f"coefficients violate Hermitian symmetry by {defect:.3e}; field is not real")
    return GridField(f.lattice, to_grid_array(f.lattice, f.coeffs))


def partial_derivative(f: SpectralField, axis: int) -> SpectralField:
    """Derivative along ``axis`` (1-based, as in x_1 ... x_d)."""
    lat = f.lattice
    if not 1 <= axis <= lat.d:
        raise ValueError(f"axis must be in 1..{lat.d}, got {axis}")
    return SpectralField(lat, 1j * lat.wavenumbers[axis - 1] * f.coeffs)


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.lattice, np.where(f.lattice.dealias_mask, f.coeffs, 0.0))


def pointwise_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Dealiased product; equals the truncated convolution of the
    dealiased inputs."""
    if a.lattice != b.lattice:
        raise ValueError("fields live on different lattices")
    lat = a.lattice
    mask = lat.dealias_mask
    ga = to_grid_array(lat, np.where(mask, a.coeffs, 0.0))
    gb = to_grid_array(lat, np.where(mask, b.coeffs, 0.0))
    c = to_spectral_array(lat, ga * gb)
    return SpectralField(lat, np.where(mask, c, 0.0))


def project_mean_zero(f: SpectralField) -> SpectralField:
    c = f.coeffs.copy()
    c[(0,) * f.lattice.d] = 0.0
    return SpectralField(f.lattice, c)
