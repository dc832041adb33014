# %% [markdown]
# # The frozen-belief equilibrium
#
# With L and M held at a common value s, the ask level is a birth-death chain
# whose stationary law is a discrete Gaussian centred on s.

# %%
import math

from nlob import ModelParams, equilibrium, hydro

params = ModelParams(c=1.0)
m = equilibrium.stationary_pi(0.3, params)
print("window", m.dist.window_lo, m.dist.window_hi)
print("pi(0)/pi(1) =", m.dist[0] / m.dist[1], " e^{c(2s-1)}... =", math.exp(1.0 * (1 - 2 * 0.3)))

# %% [markdown]
# The normalizer has two independent evaluations: a plain lattice sum and a
# Jacobi theta series in complex arithmetic.

# %%
for c in (0.05, 1.0, 5.0):
    print(c, equilibrium.theta_normalizer_direct(0.3, c), equilibrium.theta_normalizer_series(0.3, c))

# %% [markdown]
# Detailed balance holds to roundoff, and disagreement d rescales both
# expected taker rates by e^{cd}.

# %%
print("detailed balance residual", equilibrium.detailed_balance_residual(m, params))
V = hydro.equilibrium_V(0.3, params)
for d in (-1.0, 0.0, 1.0):
    el, em = equilibrium.disagreement_expectations(0.3, d, params)
    print(f"d={d:+.1f}  E lambda/V = {el / V:.6f}  e^(cd) = {math.exp(d):.6f}")

# %% [markdown]
# Feller scale points grow like e^{cn^2}; the entrance sum still converges.

# %%
rep = equilibrium.feller_objects(0.0, 1.0, 20)
print("log x_20 =", rep.scale.log_x[-1], " entrance sum =", rep.entrance_sum, "+/-", rep.tail_bound)
