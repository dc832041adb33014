# %% [markdown]
# # Diffusive limits
#
# The Ehrenfest urn and the discrete OU chain both converge, after rescaling,
# to the Ornstein-Uhlenbeck generator f'' - 2cx f'.

# %%
import numpy as np

from nlob import limits

print("Ehrenfest N=50, TV to Gaussian:", limits.ehrenfest_gaussian_tv(50))
for row in limits.scaling_table(functions=("gauss", "cos"), xs=(0.5,)):
    print(row)

# %% [markdown]
# The continuum price with relaxing beliefs: L - M closes, L + M is fixed,
# and X fluctuates around s with variance 1/(2c).

# %%
path = limits.simulate_continuum(0.0, 1.0, -1.0, 1.0, 0.005, 200.0, seed=4)
print("final L, M:", path.L[-1], path.M[-1])
print("sample variance of X (t > 20):", path.X[path.t > 20].var(), " target 0.5")
