# %% [markdown]
# # Disagreement decay
#
# When the price relaxes much faster than beliefs, the disagreement
# d = (L - M)/2 obeys d' = -(e^{cd} - 1) V. Both solution branches are explicit.

# %%
import numpy as np

from nlob import hydro, master
from nlob.model import ModelParams

c, V = 1.0, 1.0
for d0 in (-1.0, 1.0):
    t, closed, ode, err = hydro.compare(d0, c, V, 10.0, 1e-3)
    print(f"d0={d0:+}: branch={hydro.HydroSolution.from_d0(d0, c, V).branch}  max err={err.max():.2e}")

# %% [markdown]
# The master equation with the price sped up 100x tracks the reduced equation.

# %%
base = ModelParams(c=1.0)
Veq = hydro.equilibrium_V(0.0, base)
params = base.replace(C_lambda=Veq, C_mu=Veq)
traj = master.integrate(master.initial_state(0.0, params, 0.5), params, horizon=3.0, dt=2e-4,
                        stride=1000, fast_factor=100.0)
d = 0.5 * (traj.L() - traj.M())
closed = hydro.d_closed_form(np.array(traj.times), hydro.HydroSolution.from_d0(0.5, 1.0, Veq))
for t, a, b in zip(traj.times, d, closed):
    print(f"t={t:.1f}  master d={a:.6f}  closed form={b:.6f}")
