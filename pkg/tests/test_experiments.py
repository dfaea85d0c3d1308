import json
import math

import numpy as np
import pytest

from activescalar.config import parse_config
from activescalar.experiments import (
    diffusive_floor,
    exponential_fit,
    fit_growth,
    gradient_growth,
    halving_list,
    picard_contraction_experiment,
    radius_decay,
    viscosity_sweep,
    zero_law_config,
)
from activescalar.norms import estimate_radius
from activescalar.solver import NumericalAbort, run
from activescalar.spectral import Lattice, SpectralField

SMALL = """
[lattice]
d = 2
n = 32
[initial]
tau0 = 1.5
amplitude = 0.25
[step]
t_end = 0.4
output_interval = 0.05
"""


def small(*overrides):
    return parse_config(SMALL, overrides)


def test_halving_list():
    assert halving_list(0.1, 3) == (0.1, 0.05, 0.025, 0.0125)


def test_exponential_fit_is_exact_on_exponentials():
    t = np.linspace(0, 2, 11)
    c, a, r2 = exponential_fit(t, 3.0 * np.exp(-0.7 * t))
    assert c == pytest.approx(0.7) and a == pytest.approx(3.0) and r2 == pytest.approx(1.0)


def test_fit_growth_envelope_and_rejection():
    t = np.linspace(0, 2, 41)
    g = 2.0 * np.exp(1.5 * t) * (1 + 0.05 * np.sin(7 * t))
    fit = fit_growth(t, g)
    assert fit.single_exponential
    assert fit.B == pytest.approx(1.5, abs=0.05)
    assert np.all(g <= fit.A * np.exp(fit.B * t) * (1 + 1e-12))
    # log-quadratic growth is not one exponential: the residual of a line
    # fit to t^2 on [0, 2] peaks at 2/3
    bad = fit_growth(t, np.exp(t**2))
    assert not bad.single_exponential
    assert bad.max_residual == pytest.approx(2 / 3, rel=0.05)
    with pytest.raises(ValueError):
        fit_growth(t[:2], g[:2])


def test_gradient_growth_without_drift_is_flat():
    fit, res = gradient_growth(small("law.family=zero"))
    assert res.ok
    assert abs(fit.B) < 1e-10


def test_gradient_growth_viscous_ipmb():
    fit, res = gradient_growth(small("law.nu=1.0"))
    assert res.ok and fit.single_exponential


def test_radius_series_without_drift_is_constant():
    rs = radius_decay(small("law.family=zero"))
    assert rs.valid.all()
    assert np.ptp(rs.tau_hat) == 0
    assert abs(rs.c_hat) < 1e-12
    with pytest.raises(ValueError):
        radius_decay(small("physics.kappa=0.1"))


def test_single_mode_heat_decay_is_exact():
    cfg = small("law.family=zero", "physics.kappa=0.3", "initial.recipe=modes", "initial.modes=2,1:0.5")
    res = run(cfg)
    c = res.series.column("L2")
    t = res.series.column("t")
    assert np.allclose(c, c[0] * np.exp(-0.3 * 5 * t), rtol=1e-9)


def _shell_points(lat):
    """Smallest |k| among retained lattice points in each unit shell."""
    cut = lat.dealias_cut
    r = np.arange(-cut, cut + 1)
    kk = np.sqrt(r[:, None] ** 2 + r[None, :] ** 2).ravel()
    return np.array([kk[(kk >= m) & (kk < m + 1)].min() for m in range(1, cut)])


def test_heat_kernel_radius_matches_least_squares_prediction():
    # f_k = exp(-tau0 |k| - kappa t |k|^2) has no single exponential rate; the
    # estimator must return the rate of the least-squares fit of the model to
    # the shell maxima, computed here from the closed form.
    lat = Lattice(2, 128)
    tau0, kappa = 0.5, 0.5
    k = lat.kmag
    pts = _shell_points(lat)
    for t in (0.0, 0.05, 0.5, 2.0):
        c = np.where((k > 0) & lat.dealias_mask, np.exp(-tau0 * k - kappa * t * k**2), 0.0)
        y = -tau0 * pts - kappa * t * pts**2
        # fit stops at the first shell at or below 1e-14 of the peak
        below = np.flatnonzero(y <= y.max() + math.log(1e-14))
        m = below[0] if below.size else y.size
        a = np.stack([np.ones(m), -np.log(pts[:m]), -pts[:m]], axis=1)
        want = np.linalg.lstsq(a, y[:m], rcond=None)[0][-1]
        assert estimate_radius(SpectralField(lat, c)).tau_hat == pytest.approx(want, rel=1e-9)
        if t > 0:
            assert want > tau0 + kappa * t


def test_diffusive_floor_guards():
    with pytest.raises(ValueError):
        diffusive_floor(small())
    with pytest.raises(ValueError):
        diffusive_floor(small("physics.kappa=0.1", "forcing.recipe=gevrey"))
    out = diffusive_floor(small("physics.kappa=0.1"))
    assert out.floor is not None and out.floor > 0


def test_zero_law_config_keeps_everything_else():
    cfg = small("physics.kappa=0.1")
    z = zero_law_config(cfg)
    assert z.law.family == "zero" and z.kappa == 0.1 and z.initial == cfg.initial


def test_sweep_basic_properties(tmp_path):
    cfg = small("step.t_end=50", "initial.amplitude=1.0")
    sw = viscosity_sweep(cfg, (0.1, 0.1, 0.0))
    e = sw.error_series
    assert np.array_equal(e[0.1], sw.error_series[0.1])
    assert np.all(e[0.0] == 0)
    assert sw.final_errors[0] == sw.final_errors[1]
    assert not sw.strictly_decreasing
    assert math.isnan(sw.rate)
    files = sw.write(tmp_path)
    assert all(f.exists() for f in files)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["T"] == pytest.approx(sw.T)


def test_sweep_refuses_unresolved_reference():
    with pytest.raises(NumericalAbort):
        viscosity_sweep(parse_config("[lattice]\nn = 8\n[initial]\ntau0 = 0.01\n"))


def test_picard_experiment_halves_until_contractive():
    cfg = small("picard.T_init=0.8", "picard.n_max=4", "initial.amplitude=1.0")
    exp = picard_contraction_experiment(cfg)
    assert exp.passed
    Ts = [h[0] for h in exp.history]
    assert Ts == [0.8 / 2**j for j in range(len(Ts))]
    assert exp.history[-1][1] <= exp.max_ratio
    with pytest.raises(ValueError):
        picard_contraction_experiment(small("law.nu=0.1"))
