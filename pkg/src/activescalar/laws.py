"""Constitutive laws u_hat(k) = M_hat(k) theta_hat(k) and their certification.

Three families are built in:

* ``MG``   magnetogeostrophic symbol in three dimensions, viscosity ``nu >= 0``;
* ``IPMB`` porous media with Brinkman viscosity in two dimensions;
* ``SIPM`` singular porous media of order ``beta`` in two dimensions.

A ``Table`` law wraps an arbitrary vectorised map ``k -> M_hat(k)``; the zero
symbol is the one used for pure transport/heat-flow controls.

MG convention on the plane ``k3 = 0``: the printed symbol has
``M3 = |k|^2 / (k2^2 + nu |k|^4)`` there, which is unbounded (order two at
``nu = 0``, of size ``1/nu`` at ``k = (k1, 0, 0)``).  The order-one bound and the
convergence estimate for MG only hold on ``k3 != 0``, so by default the symbol is
set to zero on that plane.  ``k3_plane="formula"`` evaluates the printed
expression everywhere except the line ``k2 = k3 = 0`` at ``nu = 0``, where the
expression is 0/0 and is defined as 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .spectral import Lattice, SpectralField

__all__ = [
    "SymbolLaw",
    "AssumptionReport",
    "mg_denominator",
    "mg_symbol",
    "ipmb_symbol",
    "sipm_symbol",
    "symbol_arrays",
    "apply_law",
    "scan_ball",
    "certify",
    "symbol_convergence",
    "symbol_convergence_bound",
    "curved_region_scan",
    "A1_TOL",
]

A1_TOL = 1e-12
A5_SLACK = 1e-12
FAMILIES = ("MG", "IPMB", "SIPM", "Table")


def _as_components(k, d):
    k = [np.asarray(kj, dtype=float) for kj in k]
    if len(k) != d:
        raise ValueError(f"expected a {d}-component wavevector")
    return k


def _reject_zero(ksq):
    if np.any(ksq == 0):
        raise ValueError("the symbol is not defined at k = 0")


def mg_denominator(k, nu):
    k1, k2, k3 = _as_components(k, 3)
    ksq = k1 * k1 + k2 * k2 + k3 * k3
    p = k2 * k2 + nu * ksq * ksq
    return ksq * k3 * k3 + p * p


def _mg_arrays(k1, k2, k3, nu, k3_plane):
    ksq = k1 * k1 + k2 * k2 + k3 * k3
    p = k2 * k2 + nu * ksq * ksq
    den = ksq * k3 * k3 + p * p
    num = (
        k2 * k3 * ksq - k1 * k3 * p,
        -k1 * k3 * ksq - k2 * k3 * p,
        (k1 * k1 + k2 * k2) * p,
    )
    if k3_plane == "zero":
        dead = k3 == 0
    elif k3_plane == "formula":
        dead = den == 0
    else:
        raise ValueError(f"k3_plane must be 'zero' or 'formula', got {k3_plane!r}")
    safe = np.where(dead, 1.0, den)
    return tuple(np.where(dead, 0.0, nj / safe) for nj in num)


def mg_symbol(k, nu, *, k3_plane="zero"):
    """MG multiplier (M1, M2, M3) at integer wavevector(s) ``k = (k1, k2, k3)``."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    k1, k2, k3 = _as_components(k, 3)
    _reject_zero(k1 * k1 + k2 * k2 + k3 * k3)
    return np.stack(_mg_arrays(k1, k2, k3, float(nu), k3_plane))


def _ipmb_arrays(k1, k2, nu):
    ksq = k1 * k1 + k2 * k2
    safe = np.where(ksq == 0, 1.0, ksq)
    pre = 1.0 / ((1.0 + nu * ksq) * safe)
    return k1 * k2 * pre, -k1 * k1 * pre


def ipmb_symbol(k, nu):
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    k1, k2 = _as_components(k, 2)
    _reject_zero(k1 * k1 + k2 * k2)
    return np.stack(_ipmb_arrays(k1, k2, float(nu)))


def _sipm_arrays(k1, k2, beta):
    ksq = k1 * k1 + k2 * k2
    safe = np.where(ksq == 0, 1.0, ksq)
    w = k1 * safe ** ((beta - 2.0) / 2.0)
    return -k2 * w, k1 * w


def sipm_symbol(k, beta):
    """``k1 * k_perp * |k|**(beta - 2)`` with ``k_perp = (-k2, k1)``."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    k1, k2 = _as_components(k, 2)
    _reject_zero(k1 * k1 + k2 * k2)
    return np.stack(_sipm_arrays(k1, k2, float(beta)))


def _zero_table(*k):
    return tuple(np.zeros(np.shape(k[0])) for _ in k)


@dataclass(frozen=True)
class SymbolLaw:
    family: str
    nu: float = 0.0
    beta: float = 1.0
    table: Callable | None = field(default=None, repr=False)
    dim: int | None = None
    name: str = ""
    k3_plane: str = "zero"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown law family {self.family!r}")
        if self.nu < 0:
            raise ValueError("nu must be nonnegative")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        natural = {"MG": 3, "IPMB": 2, "SIPM": 2}.get(self.family)
        if natural is not None:
            if self.dim not in (None, natural):
                raise ValueError(f"{self.family} lives in dimension {natural}")
            object.__setattr__(self, "dim", natural)
        elif self.table is None or self.dim not in (2, 3):
            raise ValueError("Table laws need a callable and dim in (2, 3)")

    @property
    def d(self) -> int:
        return self.dim

    @classmethod
    def mg(cls, nu=0.0, **kw):
        return cls("MG", nu=nu, **kw)

    @classmethod
    def ipmb(cls, nu=0.0):
        return cls("IPMB", nu=nu)

    @classmethod
    def sipm(cls, beta=1.0):
        return cls("SIPM", beta=beta)

    @classmethod
    def zero(cls, d):
        return cls("Table", table=_zero_table, dim=d, name="zero")

    @property
    def label(self) -> str:
        if self.family == "SIPM":
            return f"SIPM(beta={self.beta:g})"
        if self.family == "Table":
            return f"Table({self.name or 'custom'}, d={self.d})"
        return f"{self.family}(nu={self.nu:g})"

    def with_nu(self, nu) -> SymbolLaw:
        return SymbolLaw(self.family, nu=nu, beta=self.beta, table=self.table,
                         dim=self.dim, name=self.name, k3_plane=self.k3_plane)

    def components(self, k) -> tuple[np.ndarray, ...]:
        """Vectorised evaluation; returns 0 at k = 0 (the mean carries no drift)."""
        k = _as_components(k, self.d)
        if self.family == "MG":
            return _mg_arrays(*k, self.nu, self.k3_plane)
        if self.family == "IPMB":
            return _ipmb_arrays(*k, self.nu)
        if self.family == "SIPM":
            return _sipm_arrays(*k, self.beta)
        out = self.table(*k)
        return tuple(np.broadcast_to(np.asarray(o, dtype=float), k[0].shape) for o in out)

    def evaluate(self, k) -> np.ndarray:
        if not any(kj for kj in k):
            raise ValueError("the symbol is not defined at k = 0")
        return np.array([float(c) for c in self.components(k)])


@lru_cache(maxsize=32)
def symbol_arrays(law: SymbolLaw, lattice: Lattice) -> tuple[np.ndarray, ...]:
    """The symbol sampled on every lattice mode (zero at k = 0)."""
    if law.d != lattice.d:
        raise ValueError(f"law {law.label} is {law.d}-dimensional, lattice is {lattice.d}-dimensional")
    comps = law.components(lattice.wavenumbers)
    out = []
    for c in comps:
        c = np.array(c, dtype=float)
        c[(0,) * lattice.d] = 0.0
        c.setflags(write=False)
        out.append(c)
    return tuple(out)


def apply_law(law: SymbolLaw, theta: SpectralField) -> tuple[SpectralField, ...]:
    """Drift velocity components of ``theta`` under ``law``."""
    lat = theta.lattice
    return tuple(SpectralField(lat, m * theta.coeffs) for m in symbol_arrays(law, lat))


def scan_ball(d: int, L: float, exclude_zero=True) -> tuple[np.ndarray, ...]:
    """All integer wavevectors with ``0 < |k| <= L``, in lexicographic order."""
    if L < 1:
        raise ValueError("scan radius must be at least 1")
    r = np.arange(-math.floor(L), math.floor(L) + 1)
    ks = [a.ravel() for a in np.meshgrid(*([r] * d), indexing="ij")]
    ksq = sum(k * k for k in ks)
    keep = ksq <= L * L
    if exclude_zero:
        keep &= ksq > 0
    return tuple(k[keep].astype(float) for k in ks)


@dataclass
class AssumptionReport:
    law: str
    scan_radius: float
    nu_grid: list[float]
    a1_residual: float
    a3_bound: float | None
    a51_bound: float
    a52_bound: float
    a3_by_nu: dict[str, float] = field(default_factory=dict)
    a4_sup_by_nu: dict[str, float] = field(default_factory=dict)
    thresholds: dict[str, float | None] = field(default_factory=dict)
    verdicts: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v != "fail" for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = [
            ("law", self.law),
            ("scan radius", f"{self.scan_radius:g}"),
            ("A1 max |k.M(k)|", f"{self.a1_residual:.3e}"),
            ("A3 sup |k|^2 |M(k)|", "n/a" if self.a3_bound is None else f"{self.a3_bound:.6g}"),
            ("A5_1 sup |M(k)|/|k|", f"{self.a51_bound:.6g}"),
            ("A5_2 sup |M(k)|", f"{self.a52_bound:.6g}"),
        ]
        rows += [(f"verdict {k}", v) for k, v in self.verdicts.items()]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{a.ljust(width)}  {b}" for a, b in rows)


# closed-form constants for the A5_1 / A5_2 bounds
_A51_CONSTANT = {"MG": 3.0, "IPMB": 1.0}
_A52_CONSTANT = {"IPMB": 1.0}


def _law_for(law: SymbolLaw, param: float) -> SymbolLaw:
    if law.family == "SIPM":
        return SymbolLaw.sipm(param)
    if law.family == "Table":
        return law
    return law.with_nu(param)


def certify(law: SymbolLaw, L: float, nu_grid=None) -> AssumptionReport:
    """Exhaustive scan of ``0 < |k| <= L`` measuring the assumption constants.

    ``nu_grid`` holds viscosities (beta values for SIPM); it defaults to the
    law's own parameter.
    """
    if L < 1:
        raise ValueError("scan radius must be at least 1")
    ks = scan_ball(law.d, L)
    kmag = np.sqrt(sum(k * k for k in ks))
    own = law.beta if law.family == "SIPM" else law.nu
    grid = [float(v) for v in (nu_grid if nu_grid is not None else [own])]

    a1 = a51 = a52 = 0.0
    a3_by_nu: dict[str, float] = {}
    for param in grid:
        m = np.stack(_law_for(law, param).components(ks))
        mag = np.sqrt(np.sum(m * m, axis=0))
        a1 = max(a1, float(np.max(np.abs(sum(kj * mj for kj, mj in zip(ks, m))))))
        a51 = max(a51, float(np.max(mag / kmag)))
        a52 = max(a52, float(np.max(mag)))
        if law.family in ("MG", "IPMB") and param > 0:
            a3_by_nu[repr(param)] = float(np.max(kmag * kmag * mag))
    a3 = max(a3_by_nu.values()) if a3_by_nu else None

    a4: dict[str, float] = {}
    if law.family in ("MG", "IPMB"):
        for param in sorted({p for p in grid if p > 0}, reverse=True):
            a4[repr(param)] = symbol_convergence(law, param, L)

    c51 = _A51_CONSTANT.get(law.family)
    c52 = _A52_CONSTANT.get(law.family)
    verdicts = {
        "A1": "pass" if a1 <= A1_TOL else "fail",
        "A2": "not numerically certified",
        "A3": "measured" if a3 is not None else "n/a",
        "A4": _a4_verdict(a4),
        "A5_1": "measured" if c51 is None else ("pass" if a51 <= c51 + A5_SLACK else "fail"),
        "A5_2": "measured" if c52 is None else ("pass" if a52 <= c52 + A5_SLACK else "fail"),
    }
    return AssumptionReport(
        law=law.label if law.family == "Table" else law.family,
        scan_radius=float(L),
        nu_grid=grid,
        a1_residual=a1,
        a3_bound=a3,
        a51_bound=a51,
        a52_bound=a52,
        a3_by_nu=a3_by_nu,
        a4_sup_by_nu=a4,
        thresholds={"A1": A1_TOL, "A5_1": c51, "A5_2": c52},
        verdicts=verdicts,
    )


def _a4_verdict(sups: dict[str, float]) -> str:
    if not sups:
        return "n/a"
    vals = list(sups.values())  # ordered by decreasing nu
    if len(vals) == 1:
        return "measured"
    monotone = all(b <= a for a, b in zip(vals, vals[1:]))
    return "pass" if monotone and vals[-1] < vals[0] else "fail"


def symbol_convergence(law: SymbolLaw, nu: float, L: float) -> float:
    """``sup_{0<|k|<=L} |M^nu(k) - M^0(k)| / |k|`` over the integer ball."""
    if law.family not in ("MG", "IPMB"):
        raise ValueError(f"{law.family} has no viscosity limit")
    if nu == 0:
        return 0.0
    ks = scan_ball(law.d, L)
    kmag = np.sqrt(sum(k * k for k in ks))
    m_nu = np.stack(law.with_nu(nu).components(ks))
    m_0 = np.stack(law.with_nu(0.0).components(ks))
    diff = np.sqrt(np.sum((m_nu - m_0) ** 2, axis=0))
    return float(np.max(diff / kmag))


def symbol_convergence_bound(family: str, nu: float, L: float) -> float:
    """Closed-form upper bounds: ``nu L`` for IPMB and
    ``4 nu L^10 + 2 nu^2 L^12`` for MG."""
    if family == "IPMB":
        return nu * L
    if family == "MG":
        return 4 * nu * L**10 + 2 * nu**2 * L**12
    raise ValueError(f"no bound for {family}")


def curved_region_scan(n_list) -> list[dict]:
    """MG at nu = 0 along ``k = (n, floor(sqrt(n)), 1)`` and the control
    ``k = (n, n, n)``."""
    rows = []
    for n in n_list:
        n = int(n)
        k = (n, math.isqrt(n), 1)
        m = mg_symbol(k, 0.0)
        kc = (n, n, n)
        mc = mg_symbol(kc, 0.0)
        rows.append({
            "n": n,
            "k": k,
            "abs_M": float(np.linalg.norm(m)),
            "ratio": float(np.linalg.norm(m) / math.sqrt(sum(x * x for x in k))),
            "ratio_n": float(np.linalg.norm(m) / n),
            "control_ratio": float(np.linalg.norm(mc) / math.sqrt(3.0 * n * n)),
        })
    return rows
