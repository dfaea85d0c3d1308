"""Sobolev, L^p and Gevrey norms, dyadic spectra and analyticity-radius fits.

All coefficient sums follow the package convention ``||f||_2^2 = sum |f_k|^2``;
grid quadratures use the normalised measure ``dx / (2 pi)^d`` so both agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.special import logsumexp

from .spectral import GridField, Lattice, SpectralField, to_spectral_array

__all__ = [
    "GevreyParams",
    "RadiusEstimate",
    "l2_norm",
    "sobolev_norm",
    "gevrey_norm",
    "lp_norm",
    "padded_grid",
    "dyadic_spectrum",
    "shell_index",
    "shell_max",
    "estimate_radius",
]

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class GevreyParams:
    s: float = 1.0
    r: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("Gevrey index s must be >= 1")
        if self.r < 0 or self.tau < 0:
            raise ValueError("r and tau must be nonnegative")


@dataclass(frozen=True)
class RadiusEstimate:
    tau_hat: float
    fit_window: tuple[int, int]
    residual: float
    valid: bool
    exponent: float = 0.0


def _coeffs(f) -> np.ndarray:
    return f.coeffs if isinstance(f, SpectralField) else np.asarray(f)


def l2_norm(f: SpectralField) -> float:
    c = _coeffs(f).ravel()
    return math.sqrt(float(np.dot(c.real, c.real) + np.dot(c.imag, c.imag)))


def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = True) -> float:
    """``(sum |k|^{2s} |f_k|^2)^{1/2}`` (homogeneous, mean mode dropped) or
    ``(sum (1+|k|^2)^s |f_k|^2)^{1/2}``."""
    lat = f.lattice
    power = np.abs(f.coeffs) ** 2
    if homogeneous:
        ksq = lat.ksq.astype(float)
        w = np.where(ksq > 0, ksq, 1.0) ** s
        w[(0,) * lat.d] = 0.0
    else:
        w = (1.0 + lat.ksq) ** s
    return math.sqrt(float(np.sum(w * power)))


def gevrey_norm(f: SpectralField, p: GevreyParams, *, return_flag: bool = False):
    """``||Lambda^r exp(tau Lambda^{1/s}) f||_2`` summed over ``k != 0``.

    The sum is carried out in log space; a result beyond the float range is
    returned as ``inf`` (with ``overflowed=True`` when ``return_flag``).
    """
    lat = f.lattice
    power = np.abs(f.coeffs) ** 2
    live = (lat.ksq > 0) & (power > 0)
    if not live.any():
        return (0.0, False) if return_flag else 0.0
    kmag = lat.kmag[live]
    logw = 2 * p.r * np.log(kmag) + 2 * p.tau * kmag ** (1.0 / p.s)
    log_sq = float(logsumexp(logw + np.log(power[live])))
    overflowed = 0.5 * log_sq > _LOG_FLOAT_MAX
    value = math.inf if overflowed else math.exp(0.5 * log_sq)
    return (value, overflowed) if return_flag else value


def padded_grid(f: SpectralField, factor: int = 2) -> np.ndarray:
    """Samples of the trigonometric interpolant on a ``factor``-times finer grid."""
    lat = f.lattice
    n, m = lat.n, lat.n * factor
    big = np.zeros((m,) * lat.d, dtype=complex)
    idx = np.r_[0 : n // 2, m - n // 2 : m]
    big[np.ix_(*([idx] * lat.d))] = f.coeffs
    return sfft.irfftn(big[..., : m // 2 + 1], s=big.shape, norm="forward")


def lp_norm(g, p: float, pad: int = 2) -> float:
    """L^p norm under the normalised measure, evaluated on a zero-padded grid.

    ``g`` may be a :class:`GridField` or a :class:`SpectralField`.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if isinstance(g, GridField):
        if not np.all(np.isfinite(g.values)):
            raise ValueError("grid field contains non-finite samples")
        g = SpectralField(g.lattice, to_spectral_array(g.lattice, g.values))
    vals = np.abs(padded_grid(g, pad) if pad > 1 else g)
    if math.isinf(p):
        return float(vals.max())
    return float(np.mean(vals**p)) ** (1.0 / p)


def _dyadic_index(ksq: np.ndarray) -> np.ndarray:
    # floor(log2 |k|) = floor(log2 |k|^2) // 2, exact through frexp
    _, e = np.frexp(ksq.astype(float))
    return (e - 1) // 2


def dyadic_spectrum(f: SpectralField) -> list[tuple[int, float]]:
    """Energy in the sharp shells ``2^j <= |k| < 2^{j+1}``; the mean mode is
    not in any shell."""
    lat = f.lattice
    live = lat.ksq > 0
    j = _dyadic_index(lat.ksq[live])
    power = (np.abs(f.coeffs) ** 2)[live]
    jmax = int(_dyadic_index(np.array([lat.d * (lat.n // 2) ** 2]))[0])
    energy = np.bincount(j, weights=power, minlength=jmax + 1)
    return [(int(i), float(e)) for i, e in enumerate(energy)]


@dataclass(frozen=True)
class _ShellTable:
    order: np.ndarray
    starts: np.ndarray
    shells: np.ndarray


_shell_cache: dict[Lattice, _ShellTable] = {}


def shell_index(lattice: Lattice) -> np.ndarray:
    """Unit shell number ``floor(|k|)`` for every mode."""
    return np.floor(lattice.kmag + 1e-9).astype(np.int64)


def _shell_table(lattice: Lattice) -> _ShellTable:
    tab = _shell_cache.get(lattice)
    if tab is None:
        idx = shell_index(lattice).ravel()
        order = np.argsort(idx, kind="stable")
        shells, starts = np.unique(idx[order], return_index=True)
        tab = _ShellTable(order, starts, shells)
        _shell_cache[lattice] = tab
    return tab


def shell_max(f: SpectralField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per unit shell: shell number, max |f_k|, and |k| of the maximiser."""
    tab = _shell_table(f.lattice)
    amp = np.abs(f.coeffs).ravel()[tab.order]
    kmag = f.lattice.kmag.ravel()[tab.order]
    vmax = np.maximum.reduceat(amp, tab.starts)
    # |k| at the first maximiser inside each shell
    is_max = amp == np.repeat(vmax, np.diff(np.r_[tab.starts, amp.size]))
    pos = np.flatnonzero(is_max)
    first = pos[np.searchsorted(pos, tab.starts)]
    return tab.shells, vmax, kmag[first]


def estimate_radius(f: SpectralField, s: float = 1.0, floor: float | None = None,
                    model: str = "power", kmax: int | None = None,
                    min_shells: int = 4) -> RadiusEstimate:
    """Fit the decay rate of the shell-max amplitudes of ``f``.

    The fit runs over unit shells ``1 <= m < kmax`` (default: the dealiasing
    cutoff), stopping at the first shell whose max amplitude is at or below
    ``floor`` (default ``1e-14 * max|f_k|``).  ``model="linear"`` fits
    ``log A = a - tau |k|^{1/s}``; ``model="power"`` adds an algebraic
    prefactor, ``log A = a - alpha log|k| - tau |k|^{1/s}``, so polynomial
    weights do not bias the exponential rate.
    """
    if model not in ("power", "linear"):
        raise ValueError(f"unknown model {model!r}")
    lat = f.lattice
    kmax = lat.dealias_cut if kmax is None else kmax
    amp_max = float(np.max(np.abs(f.coeffs)))
    invalid = RadiusEstimate(0.0, (0, 0), math.inf, False)
    if amp_max == 0.0:
        return invalid
    floor = 1e-14 * amp_max if floor is None else floor
    shells, vmax, kk = shell_max(f)
    sel = (shells >= 1) & (shells < kmax)
    shells, vmax, kk = shells[sel], vmax[sel], kk[sel]
    below = np.flatnonzero(vmax <= floor)
    stop = below[0] if below.size else shells.size
    need = min_shells + (1 if model == "power" else 0)
    if stop < need:
        return invalid
    shells, vmax, kk = shells[:stop], vmax[:stop], kk[:stop]
    y = np.log(vmax)
    cols = [np.ones_like(y), -(kk ** (1.0 / s))]
    if model == "power":
        cols.insert(1, -np.log(kk))
    a = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    tau = float(coef[-1])
    return RadiusEstimate(
        tau_hat=max(tau, 0.0),
        fit_window=(int(shells[0]), int(shells[-1])),
        residual=float(np.sqrt(np.mean(resid**2))),
        valid=tau > 0,
        exponent=float(coef[1]) if model == "power" else 0.0,
    )
