"""Time integration of  d/dt theta + u.grad(theta) = S + kappa Lap(theta),
with ``u_hat = M_hat(k) theta_hat`` recomputed from the law at every stage.

The nonlinear term is evaluated in advective form, pseudo-spectrally, with one
dealiasing projection after the product sum.  Fields are kept inside the
dealiased band, so the discrete advection term is exactly orthogonal to theta
up to rounding; the only energy drift in a source-free run is the RK4
truncation error.

The RK4 stages also integrate the energy input ``int <S, theta> dt`` and the
diffusive loss ``int kappa ||grad theta||^2 dt`` alongside theta, so the
energy balance can be checked at the integrator's own order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import NormPlan, RunConfig, StepPolicy
from .laws import SymbolLaw, symbol_arrays
from .norms import (
    GevreyParams,
    estimate_radius,
    gevrey_norm,
    l2_norm,
    lp_norm,
    padded_grid,
    sobolev_norm,
)
from .spectral import (
    Lattice,
    SpectralField,
    hermitian_part,
    to_grid_array,
    to_spectral_array,
)

__all__ = [
    "SimulationState",
    "StepPolicy",
    "DiagnosticSeries",
    "RunResult",
    "PicardRun",
    "NumericalAbort",
    "COMPLETED",
    "RESOLUTION_LOST",
    "NUMERICAL_BLOWUP",
    "prepare_state",
    "rhs",
    "step",
    "cfl_dt",
    "integrate",
    "run",
    "diagnostics",
    "top_shell_fraction",
    "picard",
    "uniform_bound_check",
]

COMPLETED = "Completed"
RESOLUTION_LOST = "ResolutionLost"
NUMERICAL_BLOWUP = "NumericalBlowup"

U_FLOOR = 1e-8
RK4_KAPPA_LIMIT = 2.8
UNIFORM_BOUND_SLACK = 0.10


class NumericalAbort(RuntimeError):
    def __init__(self, status, message, last_good=None):
        super().__init__(message)
        self.status = status
        self.last_good = last_good


@dataclass(frozen=True, eq=False)
class SimulationState:
    t: float
    theta: SpectralField
    law: SymbolLaw
    forcing: SpectralField | None = None
    kappa: float = 0.0

    def __post_init__(self):
        if self.t < 0 or self.kappa < 0:
            raise ValueError("t and kappa must be nonnegative")
        if self.law.d != self.theta.lattice.d:
            raise ValueError("law and field dimensions differ")
        if self.forcing is None:
            object.__setattr__(self, "forcing", SpectralField.zeros(self.theta.lattice))

    @property
    def lattice(self) -> Lattice:
        return self.theta.lattice


class _Dynamics:
    """Precomputed multipliers for one (lattice, law, forcing, kappa)."""

    def __init__(self, lattice: Lattice, law: SymbolLaw, forcing: np.ndarray, kappa: float):
        self.lattice = lattice
        self.law = law
        self.mask = lattice.dealias_mask
        self.symbols = symbol_arrays(law, lattice)
        self.ik = tuple(1j * k for k in lattice.wavenumbers)
        self.ksq = lattice.ksq.astype(float)
        self.forcing = np.where(self.mask, forcing, 0.0)
        self.forcing[(0,) * lattice.d] = 0.0
        self.kappa = kappa
        self.passive = all(not np.any(m) for m in self.symbols)

    def velocity_grid(self, c):
        return [to_grid_array(self.lattice, m * c) for m in self.symbols]

    def advection(self, c, ugrid):
        if self.passive:
            return np.zeros_like(c)
        lat = self.lattice
        prod = sum(u * to_grid_array(lat, ik * c) for u, ik in zip(ugrid, self.ik))
        return np.where(self.mask, to_spectral_array(lat, prod), 0.0)

    def evaluate(self, c, ugrid=None):
        """Return (dc/dt, energy input rate, diffusive loss rate, max|u|)."""
        if ugrid is None:
            ugrid = [] if self.passive else self.velocity_grid(c)
        dc = self.forcing - self.advection(c, ugrid)
        loss = 0.0
        if self.kappa:
            dc = dc - self.kappa * self.ksq * c
            loss = self.kappa * float(np.sum(self.ksq * np.abs(c) ** 2))
        dc[(0,) * self.lattice.d] = 0.0
        work = float(np.sum((np.conj(self.forcing) * c).real))
        umax = 0.0
        if ugrid:
            umax = float(np.sqrt(np.max(sum(u * u for u in ugrid))))
        return dc, work, loss, umax


def _project(lattice: Lattice, c: np.ndarray) -> np.ndarray:
    c = hermitian_part(c)
    c = np.where(lattice.dealias_mask, c, 0.0)
    c[(0,) * lattice.d] = 0.0
    return c


def _dynamics(state: SimulationState) -> _Dynamics:
    return _Dynamics(state.lattice, state.law, state.forcing.coeffs, state.kappa)


def prepare_state(theta: SpectralField, law: SymbolLaw, forcing=None, kappa=0.0,
                  t=0.0) -> SimulationState:
    """Project data and forcing onto the mean-zero, dealiased band."""
    lat = theta.lattice
    f = SpectralField.zeros(lat) if forcing is None else forcing
    return SimulationState(
        t=t,
        theta=SpectralField(lat, _project(lat, theta.coeffs)),
        law=law,
        forcing=SpectralField(lat, _project(lat, f.coeffs)),
        kappa=kappa,
    )


def rhs(state: SimulationState) -> SpectralField:
    dyn = _dynamics(state)
    dc, *_ = dyn.evaluate(state.theta.coeffs)
    if not np.all(np.isfinite(dc)):
        raise NumericalAbort(NUMERICAL_BLOWUP, "non-finite right-hand side", state)
    return SpectralField(state.lattice, dc)


def _rk4(dyn: _Dynamics, c, dt, first=None):
    """One classical RK4 step; returns (c_new, energy input, diffusive loss)."""
    k1 = first if first is not None else dyn.evaluate(c)
    k2 = dyn.evaluate(c + 0.5 * dt * k1[0])
    k3 = dyn.evaluate(c + 0.5 * dt * k2[0])
    k4 = dyn.evaluate(c + dt * k3[0])
    c_new = c + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    work = dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    loss = dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return _project(dyn.lattice, c_new), work, loss


def step(state: SimulationState, dt: float) -> SimulationState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    dyn = _dynamics(state)
    c, _, _ = _rk4(dyn, state.theta.coeffs, dt)
    if not np.all(np.isfinite(c)):
        raise NumericalAbort(NUMERICAL_BLOWUP, f"non-finite coefficients at t={state.t + dt:g}", state)
    return replace(state, t=state.t + dt, theta=SpectralField(state.lattice, c))


def _kappa_limit(lattice: Lattice, kappa: float) -> float:
    if kappa <= 0:
        return math.inf
    return RK4_KAPPA_LIMIT / (kappa * (lattice.n / 2) ** 2)


def cfl_dt(state: SimulationState, c_cfl: float, t_remaining: float = math.inf,
           umax: float | None = None) -> float:
    """``c_cfl * h / max(|u|_inf, 1e-8)``, capped by the diffusive RK4 limit
    and by ``t_remaining``."""
    if not 0 < c_cfl <= 1:
        raise ValueError("c_cfl must lie in (0, 1]")
    if umax is None:
        dyn = _dynamics(state)
        ug = dyn.velocity_grid(state.theta.coeffs)
        umax = float(np.sqrt(np.max(sum(u * u for u in ug))))
    dt = c_cfl * state.lattice.h / max(umax, U_FLOOR)
    return min(dt, _kappa_limit(state.lattice, state.kappa), t_remaining)


def _top_shell_mask(lattice: Lattice) -> np.ndarray:
    kmax = lattice.dealias_cut * math.sqrt(lattice.d)
    j_top = math.floor(math.log2(kmax))
    return lattice.ksq >= 4**j_top


def top_shell_fraction(theta: SpectralField) -> float:
    """Energy fraction in the highest dyadic shell reached by the dealiased band."""
    power = np.abs(theta.coeffs) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    return float(power[_top_shell_mask(theta.lattice)].sum()) / total


def _p_label(p: float) -> str:
    return "Linf" if math.isinf(p) else f"L{p:g}"


def diagnostics(state: SimulationState, plan: NormPlan) -> dict[str, float]:
    """Norm and radius diagnostics of one state (no time-stepping data)."""
    theta = state.theta
    lat = state.lattice
    row: dict[str, float] = {"t": state.t}
    row["energy"] = 0.5 * l2_norm(theta) ** 2
    row["L2"] = l2_norm(theta)
    fine = padded_grid(theta)
    for p in plan.lp:
        vals = np.abs(fine)
        row[_p_label(p)] = float(vals.max()) if math.isinf(p) else float(np.mean(vals**p)) ** (1 / p)
    for s in plan.sobolev:
        row[f"H{s:g}"] = sobolev_norm(theta, s)
    for tau in plan.gevrey_tau:
        row[f"gevrey_tau{tau:g}"] = gevrey_norm(theta, GevreyParams(plan.gevrey_s, plan.gevrey_r, tau))
    est = estimate_radius(theta, plan.gevrey_s, model=plan.radius_model)
    row["tau_hat"] = est.tau_hat
    row["tau_valid"] = int(est.valid)
    grads = [padded_grid(SpectralField(lat, ik * theta.coeffs)) for ik in
             (1j * k for k in lat.wavenumbers)]
    gmag = np.sqrt(sum(g * g for g in grads))
    row["grad_Ld"] = float(np.mean(gmag**lat.d)) ** (1 / lat.d)
    symbols = symbol_arrays(state.law, lat)
    ksq = lat.ksq.astype(float)
    power = np.abs(theta.coeffs) ** 2
    row["u_H2"] = math.sqrt(float(sum(np.sum(ksq**2 * m * m * power) for m in symbols)))
    ug = [to_grid_array(lat, m * theta.coeffs) for m in symbols]
    row["umax"] = float(np.sqrt(np.max(sum(u * u for u in ug))))
    row["top_frac"] = top_shell_fraction(theta)
    return row


@dataclass
class DiagnosticSeries:
    rows: list[dict] = field(default_factory=list)

    def append(self, row: dict):
        self.rows.append(dict(row))

    @property
    def columns(self) -> list[str]:
        cols: list[str] = []
        for r in self.rows:
            cols += [c for c in r if c not in cols]
        return cols

    def column(self, name) -> np.ndarray:
        return np.array([r.get(name, math.nan) for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path):
        cols = self.columns
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for r in self.rows:
                fh.write(",".join(_fmt(r.get(c, math.nan)) for c in cols) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


@dataclass
class RunResult:
    series: DiagnosticSeries
    status: str
    message: str
    final: SimulationState
    last_good: SimulationState
    t_lost: float | None = None
    steps: int = 0

    @property
    def ok(self) -> bool:
        return self.status == COMPLETED


def integrate(state: SimulationState, policy: StepPolicy, plan: NormPlan | None = None,
              checkpoint=None) -> RunResult:
    """Advance ``state`` to ``policy.t_end`` recording diagnostics at every
    output node.  ``checkpoint(state)`` is called at each node when given."""
    plan = plan or NormPlan()
    lat = state.lattice
    dyn = _dynamics(state)
    c = _project(lat, state.theta.coeffs)
    t = state.t
    work = loss = 0.0
    last_dt = 0.0
    series = DiagnosticSeries()
    n_out = max(1, round((policy.t_end - t) / policy.output_interval))
    nodes = [t + (policy.t_end - t) * i / n_out for i in range(n_out + 1)]
    guard_mask = _top_shell_mask(lat)
    steps = 0

    def snapshot(tt, cc):
        return replace(state, t=tt, theta=SpectralField(lat, cc))

    def record(tt, cc):
        s = snapshot(tt, cc)
        row = diagnostics(s, plan)
        row.update(dt=last_dt, work=work, dissipation=loss)
        series.append(row)
        if checkpoint is not None:
            checkpoint(s)
        return s

    def guard_tripped(cc):
        power = np.abs(cc) ** 2
        total = float(power.sum())
        return total > 0 and float(power[guard_mask].sum()) > policy.resolution_guard * total

    current = snapshot(t, c)
    if guard_tripped(c):
        record(t, c)
        return RunResult(series, RESOLUTION_LOST, f"unresolved at t={t:g}", current, current, t, 0)
    record(t, c)
    for target in nodes[1:]:
        while t < target - 1e-12 * max(1.0, abs(target)):
            first = dyn.evaluate(c)
            if policy.dt_mode == "fixed":
                dt = min(policy.dt, _kappa_limit(lat, state.kappa), target - t)
            else:
                dt = min(policy.cfl * lat.h / max(first[3], U_FLOOR),
                         _kappa_limit(lat, state.kappa), target - t)
            c_new, dw, dl = _rk4(dyn, c, dt, first)
            if not np.all(np.isfinite(c_new)):
                good = snapshot(t, c)
                return RunResult(series, NUMERICAL_BLOWUP, f"non-finite coefficients at t={t + dt:g}",
                                 good, good, None, steps)
            t_new = target if target - (t + dt) <= 1e-12 * max(1.0, abs(target)) else t + dt
            good = snapshot(t, c)
            c, t, last_dt = c_new, t_new, dt
            work += dw
            loss += dl
            steps += 1
            if guard_tripped(c):
                final = record(t, c)
                return RunResult(series, RESOLUTION_LOST, f"top shell exceeded guard at t={t:g}",
                                 final, good, t, steps)
        current = record(t, c)
    return RunResult(series, COMPLETED, "completed", current, current, None, steps)


def run(config: RunConfig, *, theta0: SpectralField | None = None,
        law: SymbolLaw | None = None, forcing: SpectralField | None = None,
        checkpoint=None) -> RunResult:
    """Build the initial state described by ``config`` (pieces may be
    overridden) and integrate it."""
    lat = config.make_lattice()
    state = prepare_state(
        theta0 if theta0 is not None else config.initial_field(lat),
        law if law is not None else config.make_law(),
        forcing if forcing is not None else config.forcing_field(lat),
        config.kappa,
    )
    return integrate(state, config.step, config.norms, checkpoint)


@dataclass
class PicardRun:
    T: float
    times: np.ndarray
    iterates: list[np.ndarray]
    s: float
    diff_norms: dict[int, float]
    contraction_ratios: dict[int, float]
    lattice: Lattice

    def iterate(self, n: int, node: int) -> SpectralField:
        return SpectralField(self.lattice, self.iterates[n - 1][node])


def _hs_norm(lattice: Lattice, c: np.ndarray, s: float) -> float:
    return sobolev_norm(SpectralField(lattice, c), s)


def picard(config: RunConfig, n_max: int, T: float, nodes: int = 9, s: float | None = None,
           *, theta0: SpectralField | None = None, law: SymbolLaw | None = None,
           forcing: SpectralField | None = None) -> PicardRun:
    """Successive approximations on ``[0, T]``.

    ``theta_1 = theta_0 + t S``; for ``n >= 2``, ``theta_n`` solves the linear
    transport equation with the velocity of ``theta_{n-1}`` (sampled at the
    nodes, linear in time in between).  Contraction ratios use the homogeneous
    ``H^{s-1}`` norm with ``s = d/2 + 1.5`` by default.
    """
    if nodes < 8:
        raise ValueError("Picard runs need at least 8 time nodes")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    lat = config.make_lattice()
    state = prepare_state(
        theta0 if theta0 is not None else config.initial_field(lat),
        law if law is not None else config.make_law(),
        forcing if forcing is not None else config.forcing_field(lat),
    )
    s = lat.d / 2 + 1.5 if s is None else s
    dyn = _dynamics(state)
    times = np.linspace(0.0, T, nodes)
    c0 = state.theta.coeffs
    S = dyn.forcing
    first = np.stack([c0 + t * S for t in times])
    first = np.stack([_project(lat, c) for c in first])
    iterates = [first]

    def lin_rhs(c, ugrid):
        return S - dyn.advection(c, ugrid)

    for n in range(2, n_max + 1):
        prev = iterates[-1]
        vel = [dyn.velocity_grid(prev[i]) for i in range(nodes)]
        umax = [float(np.sqrt(np.max(sum(u * u for u in v)))) if v else 0.0 for v in vel]
        out = np.empty_like(prev)
        out[0] = c0
        c = c0
        for i in range(nodes - 1):
            span = times[i + 1] - times[i]
            speed = max(umax[i], umax[i + 1], U_FLOOR)
            nsub = max(1, math.ceil(span * speed / (config.step.cfl * lat.h)))
            h = span / nsub
            for j in range(nsub):
                def u_at(frac):
                    return [(1 - frac) * a + frac * b for a, b in zip(vel[i], vel[i + 1])]

                f0, fm, f1 = j / nsub, (j + 0.5) / nsub, (j + 1) / nsub
                um, ue = u_at(fm), u_at(f1)
                k1 = lin_rhs(c, u_at(f0))
                k2 = lin_rhs(c + 0.5 * h * k1, um)
                k3 = lin_rhs(c + 0.5 * h * k2, um)
                k4 = lin_rhs(c + h * k3, ue)
                c = _project(lat, c + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
            if not np.all(np.isfinite(c)):
                raise NumericalAbort(NUMERICAL_BLOWUP, f"Picard iterate {n} blew up", None)
            out[i + 1] = c
        iterates.append(out)

    diff = {}
    for n in range(2, n_max + 1):
        d = iterates[n - 1] - iterates[n - 2]
        diff[n] = max(_hs_norm(lat, d[i], s - 1) for i in range(nodes))
    ratios = {}
    for n in range(3, n_max + 1):
        ratios[n] = diff[n] / diff[n - 1] if diff[n - 1] > 0 else 0.0
    return PicardRun(T=T, times=times, iterates=iterates, s=s, diff_norms=diff,
                     contraction_ratios=ratios, lattice=lat)


def uniform_bound_check(run: PicardRun, s: float | None = None) -> bool:
    """Every iterate obeys ``sup_t ||Lambda^s theta_j||^2 <= 2 ||Lambda^s theta_0||^2``
    (with 10% slack)."""
    s = run.s if s is None else s
    lat = run.lattice
    base = _hs_norm(lat, run.iterates[0][0], s) ** 2
    limit = 2.0 * base * (1.0 + UNIFORM_BOUND_SLACK)
    for it in run.iterates:
        peak = max(_hs_norm(lat, it[i], s) ** 2 for i in range(it.shape[0]))
        if peak > limit:
            return False
    return True
