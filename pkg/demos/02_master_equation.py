# %% [markdown]
# # Price distribution and beliefs together
#
# The Kolmogorov equations for p_n(t) are coupled to the belief equations. A
# news jump moves L; the system relaxes and the integral of motion
# I = L + M + sum n p_n changes only by the jump.

# %%
import numpy as np

from nlob import ModelParams, NewsSequence, hydro, master

base = ModelParams(c=1.0)
V = hydro.equilibrium_V(0.0, base)
params = base.replace(C_lambda=V, C_mu=V)
state = master.initial_state(0.0, params)
news = NewsSequence(l_events=((1.0, -2.0),))
traj = master.integrate(state, params, news, horizon=6.0, dt=5e-4, stride=500)

# %%
for t, L, M, I, p in zip(traj.times, traj.L(), traj.M(), traj.integrals(), traj.states):
    print(f"t={t:4.2f}  L={L:+.4f}  M={M:+.4f}  mean price={p.dist.mean():+.4f}  I={I:+.6f}")
print("scheme used:", traj.scheme)

# %% [markdown]
# After the jump I settles at -2, so beliefs and price meet at I/3.

# %%
final = traj.final
print("L, M, price ->", final.slow.L, final.slow.M, final.dist.mean(), " I/3 =", traj.integrals()[-1] / 3)
traj.to_csv("master_demo.csv")
