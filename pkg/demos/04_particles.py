# %% [markdown]
# # N particles and propagation of chaos
#
# Each particle is an ask level; the beliefs feel the particles only through
# empirical averages. As N grows the empirical law approaches the
# master-equation solution with squared error O(1/N).

# %%
from nlob import hydro, master, particle
from nlob.model import ModelParams

base = ModelParams(c=1.0)
V = hydro.equilibrium_V(0.0, base)
params = base.replace(C_lambda=V, C_mu=V)
p0 = master.initial_state(0.0, params, point_mass=True).dist
report = particle.convergence_experiment([50, 200, 800], params, p0, 0.5, -0.5, horizon=2.0, R=8, seed=0)
for row in report.rows:
    print(f"N={row.N:4d}  sup err={row.sup_err:.3e} +/- {row.stderr:.1e}  N*err={row.N * row.sup_err:.3f}")

# %% [markdown]
# Every executed market order is logged; bucketing gives a volume series.

# %%
ens = particle.init_ensemble(500, p0, 0.5, -0.5, seed=1)
ens, log = particle.advance(ens, params, 1e-3, 2.0)
starts, counts = particle.volume_series(log, 0.25, 0.0, 2.0)
print(list(zip(starts.tolist(), counts.tolist())))
