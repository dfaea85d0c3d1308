"""Experiment drivers built on :mod:`activescalar.solver`.

Every driver returns a plain result object with ``summary()`` (a JSON-ready
dict) and ``write(out_dir)`` (CSV series, gnuplot two-column files, summary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .io import write_dat, write_json
from .norms import GevreyParams, estimate_radius, gevrey_norm, l2_norm, sobolev_norm
from .solver import (
    COMPLETED,
    RESOLUTION_LOST,
    NumericalAbort,
    RunResult,
    picard,
    run,
    uniform_bound_check,
)
from .spectral import SpectralField

__all__ = [
    "standard_ipmb_config",
    "standard_mg_config",
    "resolved_window",
    "SweepResult",
    "viscosity_sweep",
    "RadiusSeries",
    "radius_decay",
    "diffusive_floor",
    "exponential_fit",
    "GrowthFit",
    "fit_growth",
    "gradient_growth",
    "PicardExperiment",
    "picard_contraction_experiment",
    "halving_list",
    "zero_law_config",
]

_IPMB_STANDARD = """
[lattice]
d = 2
n = 128
[law]
family = IPMB
[initial]
recipe = gevrey
tau0 = 0.5
amplitude = 0.25
seed = 0
[step]
t_end = 20.0
output_interval = 0.02
"""

_MG_STANDARD = """
[lattice]
d = 3
n = 48
[law]
family = MG
[initial]
recipe = gevrey
tau0 = 1.0
amplitude = 0.25
seed = 0
[step]
t_end = 20.0
output_interval = 0.025
"""

NONINCREASE_TOL = 0.02
INVALID_FRACTION = 0.2
LOWER_BOUND_FACTOR = 1.1
GROWTH_RESIDUAL_TOL = 0.2


def standard_ipmb_config(overrides=()) -> RunConfig:
    """2D IPMB desk config: n = 128, Gevrey data with tau0 = 0.5."""
    return parse_config(_IPMB_STANDARD, overrides)


def standard_mg_config(overrides=()) -> RunConfig:
    """3D MG desk config: n = 48, Gevrey data with tau0 = 1."""
    return parse_config(_MG_STANDARD, overrides)


def halving_list(first: float, halvings: int) -> tuple[float, ...]:
    return tuple(first / 2**j for j in range(halvings + 1))


def _collecting_run(cfg: RunConfig, **kw) -> tuple[RunResult, list]:
    states = []
    res = run(cfg, checkpoint=states.append, **kw)
    return res, states


def resolved_window(cfg: RunConfig) -> tuple[float, RunResult]:
    """Run the inviscid version of ``cfg`` until the resolution guard fires;
    returns (loss time, result).  A completed run returns ``t_end``."""
    res = run(cfg.with_values(law={"nu": 0.0}))
    t = res.t_lost if res.status == RESOLUTION_LOST else res.final.t
    return float(t), res


# -- viscosity sweep ------------------------------------------------------


@dataclass
class SweepResult:
    nu_list: tuple[float, ...]
    times: np.ndarray
    error_series: dict[float, np.ndarray]
    l2_series: dict[float, np.ndarray]
    norm_kind: str
    norm_params: dict
    final_errors: list[float]
    statuses: dict[float, str]
    T: float
    runs: dict[float, RunResult] = field(default_factory=dict, repr=False)

    @property
    def strictly_decreasing(self) -> bool:
        e = self.final_errors
        return all(b < a for a, b in zip(e, e[1:]))

    @property
    def reduction(self) -> float:
        e = self.final_errors
        return e[-1] / e[0] if e and e[0] > 0 else math.nan

    @property
    def rate(self) -> float:
        """Least-squares slope of log(final error) against log(nu)."""
        nus = np.array([v for v in self.nu_list if v > 0])
        errs = np.array([e for v, e in zip(self.nu_list, self.final_errors) if v > 0])
        ok = errs > 0
        if np.unique(nus[ok]).size < 2:
            return math.nan
        return float(np.polyfit(np.log(nus[ok]), np.log(errs[ok]), 1)[0])

    @property
    def complete(self) -> bool:
        return all(s == COMPLETED for s in self.statuses.values())

    def summary(self) -> dict:
        return {
            "experiment": "viscosity_sweep",
            "T": self.T,
            "norm_kind": self.norm_kind,
            "norm_params": self.norm_params,
            "nu_list": list(self.nu_list),
            "final_errors": self.final_errors,
            "statuses": {repr(k): v for k, v in self.statuses.items()},
            "strictly_decreasing": self.strictly_decreasing,
            "reduction_last_over_first": self.reduction,
            "measured_rate": self.rate,
            "passed": self.complete and self.strictly_decreasing,
        }

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for i, nu in enumerate(self.nu_list):
            p = out / f"sweep_{i:02d}.csv"
            self.runs[nu].series.to_csv(p)
            d = out / f"error_{i:02d}.dat"
            write_dat(d, self.times, self.error_series[nu], f"nu = {nu!r}: t error")
            files += [p, d]
        d = out / "final_errors.dat"
        write_dat(d, self.nu_list, self.final_errors, "nu final_error")
        s = out / "summary.json"
        write_json(s, self.summary())
        return files + [d, s]


def _sweep_norm(cfg: RunConfig, ref_final: SpectralField, mode: str):
    d = cfg.lattice.d
    sw = cfg.sweep
    if mode == "auto":
        mode = "gevrey" if cfg.law.family == "MG" else "sobolev"
    if mode == "gevrey":
        tau = sw.gevrey_tau
        if tau <= 0:
            tau = 0.5 * estimate_radius(ref_final, cfg.norms.gevrey_s,
                                        model=cfg.norms.radius_model).tau_hat
        r = sw.gevrey_r if sw.gevrey_r > 0 else d / 2 + 1.6
        p = GevreyParams(cfg.norms.gevrey_s, r, tau)
        return "gevrey", {"s": p.s, "r": p.r, "tau": p.tau}, lambda f: gevrey_norm(f, p)
    if mode == "sobolev":
        s = sw.sobolev_s if sw.sobolev_s > 0 else d / 2 + 1.5 - 1
        return "sobolev", {"s": s}, lambda f: sobolev_norm(f, s)
    raise ValueError(f"unknown sweep norm {mode!r}")


def viscosity_sweep(base: RunConfig, nu_list=None, T: float | None = None) -> SweepResult:
    """Errors ``theta^nu - theta^0`` at shared output nodes, one run per nu.

    ``T`` defaults to ``base.sweep.T`` and, when that is 0, to half the
    inviscid resolved window.
    """
    nu_list = tuple(float(v) for v in (nu_list if nu_list is not None else base.sweep.nu_list))
    if not nu_list:
        raise ValueError("empty viscosity list")
    if any(b > a for a, b in zip(nu_list, nu_list[1:])) or min(nu_list) < 0:
        raise ValueError("nu_list must be nonnegative and nonincreasing")
    if T is None:
        if base.sweep.T > 0:
            T = base.sweep.T
        else:
            t_lost, probe = resolved_window(base)
            if t_lost <= 0:
                raise NumericalAbort(probe.status, "initial data is not resolved on this lattice",
                                     probe.last_good)
            T = 0.5 * t_lost
    n_out = max(1, round(T / base.step.output_interval))
    cfg = base.with_values(step={"t_end": T, "output_interval": T / n_out})
    lat = cfg.make_lattice()
    theta0 = cfg.initial_field(lat)
    forcing = cfg.forcing_field(lat)

    ref, ref_states = _collecting_run(cfg.with_values(law={"nu": 0.0}), theta0=theta0, forcing=forcing)
    if ref.status != COMPLETED:
        raise NumericalAbort(ref.status, f"inviscid reference run ended with {ref.status} before T = {T:g}",
                             ref.last_good)
    kind, params, norm = _sweep_norm(cfg, ref_states[-1].theta, cfg.sweep.norm)
    times = np.array([s.t for s in ref_states])

    errors, l2s, finals, statuses, runs = {}, {}, [], {}, {}
    for nu in nu_list:
        res, states = _collecting_run(cfg.with_values(law={"nu": nu}), theta0=theta0, forcing=forcing)
        e = np.full(times.size, math.nan)
        e2 = np.full(times.size, math.nan)
        for i, st in enumerate(states[: times.size]):
            diff = st.theta - ref_states[i].theta
            e[i] = norm(diff)
            e2[i] = l2_norm(diff)
        errors[nu], l2s[nu], statuses[nu], runs[nu] = e, e2, res.status, res
        finals.append(float(e[-1]))
    return SweepResult(nu_list, times, errors, l2s, kind, params, finals, statuses, T, runs)


# -- radius tracking ------------------------------------------------------


def exponential_fit(t, y) -> tuple[float, float, float]:
    """Fit ``log y = a - c t``; returns ``(c, exp(a), R^2)``."""
    t = np.asarray(t, float)
    ly = np.log(np.asarray(y, float))
    slope, a = np.polyfit(t, ly, 1)
    resid = ly - (a + slope * t)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(-slope), float(math.exp(a)), r2


@dataclass
class RadiusSeries:
    times: np.ndarray
    tau_hat: np.ndarray
    valid: np.ndarray
    tau0: float
    c_hat: float
    fit_prefactor: float
    r2: float
    max_increase: float
    lower_bound_ok: bool
    inconclusive: bool
    status: str
    floor: float | None = None
    tail_nondecreasing: bool | None = None
    result: RunResult | None = field(default=None, repr=False)

    @property
    def nonincreasing(self) -> bool:
        return self.max_increase <= NONINCREASE_TOL

    def summary(self) -> dict:
        out = {
            "experiment": "radius",
            "status": self.status,
            "tau0": self.tau0,
            "c_hat": self.c_hat,
            "fit_prefactor": self.fit_prefactor,
            "r2": self.r2,
            "max_relative_increase": self.max_increase,
            "nonincreasing": self.nonincreasing,
            "lower_bound_ok": self.lower_bound_ok,
            "inconclusive": self.inconclusive,
            "n_nodes": int(self.times.size),
        }
        if self.floor is not None:
            out.update(floor=self.floor, tail_nondecreasing=self.tail_nondecreasing)
            out["passed"] = bool(self.tail_nondecreasing) and not self.inconclusive
        else:
            out["passed"] = self.nonincreasing and self.lower_bound_ok and not self.inconclusive
        return out

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = [out / "series.csv", out / "tau_hat.dat", out / "tau_fit.dat", out / "summary.json"]
        self.result.series.to_csv(files[0])
        write_dat(files[1], self.times[self.valid], self.tau_hat[self.valid], "t tau_hat")
        write_dat(files[2], self.times, self.fit_prefactor * np.exp(-self.c_hat * self.times),
                  "t fitted exponential")
        write_json(files[3], self.summary())
        return files


def _radius_series(res: RunResult, tau0: float, keep) -> RadiusSeries:
    s = res.series
    t = s.column("t")
    tau = s.column("tau_hat")
    valid = s.column("tau_valid").astype(bool)
    if res.status == RESOLUTION_LOST:
        # the row at the loss time is already past the guard
        t, tau, valid = t[:-1], tau[:-1], valid[:-1]
    valid &= keep(t)
    inconclusive = t.size == 0 or (1 - valid.mean()) > INVALID_FRACTION
    tv, yv = t[valid], tau[valid]
    if tv.size >= 2:
        c, a, r2 = exponential_fit(tv, yv)
        rel = (yv[1:] - yv[:-1]) / yv[:-1]
        inc = float(max(rel.max(initial=0.0), 0.0))
        lb = bool(np.all(yv >= tau0 * np.exp(-LOWER_BOUND_FACTOR * max(c, 0.0) * tv) * (1 - 1e-12)))
    else:
        c, a, r2, inc, lb = math.nan, math.nan, math.nan, math.nan, False
        inconclusive = True
    return RadiusSeries(t, tau, valid, tau0, c, a, r2, inc, lb, inconclusive, res.status, result=res)


def radius_decay(cfg: RunConfig) -> RadiusSeries:
    """Track the fitted radius until the run completes or loses resolution."""
    if cfg.kappa != 0:
        raise ValueError("radius_decay expects kappa = 0 (see diffusive_floor)")
    res = run(cfg)
    return _radius_series(res, cfg.initial.tau0, lambda t: np.ones(t.shape, bool))


def diffusive_floor(cfg: RunConfig) -> RadiusSeries:
    """Radius series of a diffusive run; the floor is the tail-half minimum.

    Nodes after the estimator first turns invalid (field decayed to the
    noise floor) are dropped.
    """
    if cfg.kappa <= 0:
        raise ValueError("diffusive_floor needs kappa > 0")
    if cfg.forcing.recipe not in ("zero", "none"):
        raise ValueError("diffusive_floor expects S = 0")
    res = run(cfg)
    valid_all = res.series.column("tau_valid").astype(bool)
    bad = np.flatnonzero(~valid_all)
    cut = float(res.series.column("t")[bad[0]]) if bad.size else math.inf
    out = _radius_series(res, cfg.initial.tau0, lambda t: t < cut)
    tv, yv = out.times[out.valid], out.tau_hat[out.valid]
    tail = tv >= 0.5 * tv[-1] if tv.size else tv.astype(bool)
    out.inconclusive = tv.size < 4
    if tail.any():
        ty = yv[tail]
        out.floor = float(ty.min())
        out.tail_nondecreasing = bool(np.all(np.diff(ty) >= -NONINCREASE_TOL * ty[:-1]))
    else:
        out.floor, out.tail_nondecreasing = math.nan, False
    return out


# -- gradient growth ------------------------------------------------------


@dataclass
class GrowthFit:
    A: float
    B: float
    max_residual: float
    single_exponential: bool

    def summary(self) -> dict:
        return {"A": self.A, "B": self.B, "max_log_residual": self.max_residual,
                "single_exponential": self.single_exponential}


def fit_growth(t, g, tol: float = GROWTH_RESIDUAL_TOL) -> GrowthFit:
    """Envelope ``g(t) <= A e^{B t}`` from a log-linear least-squares fit.

    ``A`` is lifted by the largest positive residual so the envelope holds at
    every sample; the series counts as single-exponential when no log
    residual exceeds ``tol``.
    """
    t = np.asarray(t, float)
    lg = np.log(np.asarray(g, float))
    if t.size < 3:
        raise ValueError("need at least three samples")
    B, a = np.polyfit(t, lg, 1)
    resid = lg - (a + B * t)
    A = math.exp(a + max(float(resid.max()), 0.0))
    worst = float(np.abs(resid).max())
    return GrowthFit(A, float(B), worst, worst <= tol)


def gradient_growth(cfg: RunConfig, tol: float = GROWTH_RESIDUAL_TOL) -> tuple[GrowthFit, RunResult]:
    """Fit a single-exponential envelope to ``||grad theta||_{L^d}``."""
    res = run(cfg)
    s = res.series
    t, g = s.column("t"), s.column("grad_Ld")
    if res.status == RESOLUTION_LOST:
        t, g = t[:-1], g[:-1]
    return fit_growth(t, g, tol), res


# -- Picard contraction ---------------------------------------------------


@dataclass
class PicardExperiment:
    T: float
    ratios: dict[int, float]
    uniform_bound: bool
    history: list[tuple[float, float]]
    passed: bool
    inconclusive: bool
    max_ratio: float

    def summary(self) -> dict:
        return {
            "experiment": "picard",
            "T": self.T,
            "contraction_ratios": {str(k): v for k, v in self.ratios.items()},
            "uniform_bound": self.uniform_bound,
            "bisection": [{"T": a, "max_ratio": b} for a, b in self.history],
            "max_allowed_ratio": self.max_ratio,
            "inconclusive": self.inconclusive,
            "passed": self.passed,
        }

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = [out / "ratios.dat", out / "bisection.dat", out / "summary.json"]
        write_dat(files[0], list(self.ratios), list(self.ratios.values()), "n ratio")
        write_dat(files[1], [h[0] for h in self.history], [h[1] for h in self.history],
                  "T max_ratio")
        write_json(files[2], self.summary())
        return files


def picard_contraction_experiment(cfg: RunConfig) -> PicardExperiment:
    """Halve ``T`` from ``picard.T_init`` until every ratio n = 3..n_max is
    at most ``picard.max_ratio``."""
    law = cfg.make_law()
    if law.family not in ("IPMB", "SIPM") or (law.family == "IPMB" and law.nu != 0):
        raise ValueError("the contraction experiment runs IPMB or SIPM at nu = 0")
    pc = cfg.picard
    s = pc.s if pc.s > 0 else None
    T = pc.T_init
    history = []
    for _ in range(pc.max_halvings + 1):
        pr = picard(cfg, pc.n_max, T, pc.nodes, s)
        worst = max(pr.contraction_ratios.values())
        history.append((T, worst))
        if worst <= pc.max_ratio:
            ok = uniform_bound_check(pr)
            return PicardExperiment(T, pr.contraction_ratios, ok, history, ok, False, pc.max_ratio)
        T /= 2
        if T / (pc.nodes - 1) < 1e-9:
            break
    return PicardExperiment(T, pr.contraction_ratios, False, history, False, True, pc.max_ratio)


def zero_law_config(cfg: RunConfig) -> RunConfig:
    """Same run with the drift switched off."""
    return cfg.with_values(law={"family": "zero"})

