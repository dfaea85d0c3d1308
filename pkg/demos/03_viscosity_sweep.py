# %% [markdown]
# # Vanishing viscosity
#
# Compare viscous IPMB runs against the inviscid one on half its resolved
# window, for ν halved seven times from 0.1.

# %%
import numpy as np

from activescalar.experiments import halving_list, standard_ipmb_config, viscosity_sweep

sw = viscosity_sweep(standard_ipmb_config(), halving_list(0.1, 7))
print(f"T = {sw.T:.4f}, norm {sw.norm_kind} {sw.norm_params}")
for nu, e in zip(sw.nu_list, sw.final_errors):
    print(f"  nu={nu:.6f}  error={e:.3e}")

# %% [markdown]
# Local slopes of log(error) against log(ν): below one at large ν and
# creeping toward first order as ν shrinks.

# %%
nu = np.array(sw.nu_list)
err = np.array(sw.final_errors)
slopes = np.diff(np.log(err)) / np.diff(np.log(nu))
print("local slopes:", np.round(slopes, 3))
print(f"last/first = {sw.reduction:.4f}, global rate = {sw.rate:.3f}")
