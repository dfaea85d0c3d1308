# %% [markdown]
# # Constitutive-law symbols
#
# Evaluate the three drift laws on a handful of wavenumbers, then certify
# the structural bounds on a scan box.

# %%
import numpy as np

from activescalar import SymbolLaw, certify

mg = SymbolLaw.mg(nu=0.0)
ipmb = SymbolLaw.ipmb(nu=0.0)
sipm = SymbolLaw.sipm(beta=0.5)

for k in [(1, 0, 1), (2, 1, 3), (0, 1, 1)]:
    print("MG  ", k, np.round(mg.evaluate(k), 6))
for k in [(1, 1), (3, -1), (0, 2)]:
    print("IPMB", k, np.round(ipmb.evaluate(k), 6), " SIPM", np.round(sipm.evaluate(k), 6))

# %% [markdown]
# Divergence-free to round-off, order one for MG, order zero for IPMB.

# %%
for law, L in [(mg, 32), (ipmb, 64), (sipm, 64)]:
    rep = certify(law, L, [0.0, 0.125, 1.0] if law.family != "SIPM" else [0.25, 0.5, 1.0])
    print(f"{law.family:5s} L={L:3d}  |k.M| {rep.a1_residual:.1e}  "
          f"sup|M|/|k| {rep.a51_bound:.4f}  sup|M| {rep.a52_bound:.4f}  "
          f"sup|k|^2|M| {'n/a' if rep.a3_bound is None else f'{rep.a3_bound:.2f}'}")

# %% [markdown]
# Viscosity regularises the symbol: the ν-dependence of the A3-type sup.

# %%
for nu in [1.0, 0.25, 0.0625]:
    print(f"IPMB nu={nu:<7} a3 = {certify(SymbolLaw.ipmb(nu), 64, [nu]).a3_bound:8.2f}")
