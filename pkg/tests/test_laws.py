from fractions import Fraction

import numpy as np
import pytest

from activescalar.laws import (
    SymbolLaw,
    apply_law,
    certify,
    curved_region_scan,
    ipmb_symbol,
    mg_symbol,
    scan_ball,
    sipm_symbol,
    symbol_convergence,
    symbol_convergence_bound,
)
from activescalar.spectral import Lattice, SpectralField


def mg_exact(k, nu):
    """MG multiplier in exact rational arithmetic."""
    k1, k2, k3 = (Fraction(x) for x in k)
    nu = Fraction(nu)
    ksq = k1 * k1 + k2 * k2 + k3 * k3
    p = k2 * k2 + nu * ksq * ksq
    den = ksq * k3 * k3 + p * p
    return (
        (k2 * k3 * ksq - k1 * k3 * p) / den,
        (-k1 * k3 * ksq - k2 * k3 * p) / den,
        (k1 * k1 + k2 * k2) * p / den,
    )


@pytest.mark.parametrize("k,nu,want", [
    ((1, 0, 1), 0.0, (0.0, -1.0, 0.0)),
    ((1, 0, 1), 1.0, (-2 / 9, -1 / 9, 2 / 9)),
])
def test_mg_hand_values(k, nu, want):
    assert np.allclose(mg_symbol(k, nu), want, atol=1e-15)


def test_ipmb_and_sipm_hand_values():
    assert np.allclose(ipmb_symbol((1, 1), 0.0), (0.5, -0.5), atol=1e-15)
    assert np.allclose(ipmb_symbol((1, 1), 1.0), (1 / 6, -1 / 6), atol=1e-15)
    assert np.allclose(sipm_symbol((1, 0), 1.0), (0.0, 1.0), atol=1e-15)


@pytest.mark.parametrize("nu", [0, Fraction(1, 8), Fraction(1, 1024), 1])
def test_mg_matches_rational_oracle(nu):
    rng = np.random.default_rng(7)
    ks = rng.integers(-40, 41, size=(200, 3))
    ks[:, 2] = np.where(ks[:, 2] == 0, 1, ks[:, 2])
    for k in ks:
        exact = mg_exact(k, nu)
        assert sum(Fraction(int(a)) * b for a, b in zip(k, exact)) == 0
        got = mg_symbol(tuple(k), float(nu))
        for g, e in zip(got, exact):
            assert abs(g - float(e)) <= 1e-15 * max(1.0, abs(float(e)))


def test_mg_k3_plane_conventions():
    k = (1, 0, 0)
    assert np.all(mg_symbol(k, 0.0) == 0)
    # the printed formula is 0/0 there; off the exact zero it grows like 1/nu
    k = (5, 1, 0)
    assert np.all(mg_symbol(k, 2**-10) == 0)
    m = mg_symbol(k, 2**-10, k3_plane="formula")
    assert m[2] == pytest.approx(26 / (1 + 676 / 1024))


def test_symbols_reject_zero_and_bad_parameters():
    with pytest.raises(ValueError):
        mg_symbol((0, 0, 0), 0.0)
    with pytest.raises(ValueError):
        ipmb_symbol((1, 0), -1.0)
    with pytest.raises(ValueError):
        sipm_symbol((1, 1), 1.5)
    with pytest.raises(ValueError):
        SymbolLaw.mg(0.0, dim=2)


def test_apply_law_on_single_mode():
    lat = Lattice(2, 16)
    theta = SpectralField.from_modes(lat, {(1, 1): 2.0})
    u1, u2 = apply_law(SymbolLaw.ipmb(0.0), theta)
    assert u1.coeff((1, 1)) == pytest.approx(0.5)
    assert u2.coeff((1, 1)) == pytest.approx(-0.5)
    assert u1.coeff((-1, -1)) == pytest.approx(0.5)


def test_zero_table_law():
    lat = Lattice(3, 8)
    theta = SpectralField.from_modes(lat, {(1, 2, 3): 1.0})
    assert all(np.all(u.coeffs == 0) for u in apply_law(SymbolLaw.zero(3), theta))


def test_scan_ball_size():
    ks = scan_ball(2, 3)
    # integer points with 0 < |k| <= 3
    assert ks[0].size == 28


def test_certify_mg_small_scan():
    grid = [0.0] + [2.0**-j for j in range(11)]
    rep = certify(SymbolLaw.mg(), 16, grid)
    assert rep.a1_residual <= 1e-12
    assert 0.99 < rep.a51_bound <= 3.0
    assert rep.verdicts["A5_1"] == "pass"
    assert rep.passed
    assert rep.a3_by_nu[repr(1.0)] == pytest.approx(1.0, abs=5e-3)


def test_certify_mg_printed_formula_breaks_order_one_bound():
    rep = certify(SymbolLaw.mg(k3_plane="formula"), 8, [0.0])
    # |M| / |k| = |k| / k2^2 on the k3 = 0 plane, largest at k = (7, 1, 0)
    assert rep.a51_bound == pytest.approx(float(np.sqrt(50)), rel=1e-12)
    assert rep.verdicts["A5_1"] == "fail"


def test_certify_ipmb_and_sipm():
    rep = certify(SymbolLaw.ipmb(), 32, [0.0, 0.5, 0.1])
    assert rep.a52_bound <= 1 + 1e-12
    assert rep.passed
    rep = certify(SymbolLaw.sipm(0.5), 32, [0.5, 1.0])
    assert rep.a1_residual <= 1e-12
    assert rep.verdicts["A5_1"] == "measured"


def test_a3_scales_like_inverse_viscosity():
    rep = certify(SymbolLaw.mg(), 16, [1.0, 0.1, 0.01])
    a = [rep.a3_by_nu[repr(v)] for v in (1.0, 0.1, 0.01)]
    assert 5 <= a[1] / a[0] <= 20
    assert 5 <= a[2] / a[1] <= 20


@pytest.mark.parametrize("family,L", [("IPMB", 8), ("IPMB", 32), ("MG", 8)])
def test_symbol_convergence_below_bound(family, L):
    law = SymbolLaw.ipmb() if family == "IPMB" else SymbolLaw.mg()
    for j in range(0, 13, 3):
        nu = 2.0**-j
        assert symbol_convergence(law, nu, L) <= symbol_convergence_bound(family, nu, L)


def test_curved_region_scan():
    rows = curved_region_scan([100, 1000, 10000])
    r = [row["ratio_n"] for row in rows]
    assert max(r) / min(r) < 5
    assert rows[-1]["control_ratio"] < 0.1 * rows[0]["control_ratio"]
    assert rows[0]["k"] == (100, 10, 1)


def test_report_serialises():
    rep = certify(SymbolLaw.ipmb(), 8, [0.0, 1.0])
    d = rep.to_dict()
    assert d["verdicts"]["A1"] == "pass"
    assert "A1" in rep.table()
