# %% [markdown]
# # A news shock with N = 1000 traders
#
# Bulls revise L down by A ticks, then partly back up by A/2 after an
# exponential wait. Conservation of I predicts the new resting price -A/3 ticks,
# then -A/6 ticks after the rebound.

# %%
import numpy as np

from nlob import particle

res = particle.run_fig2_scenario(seed=1)
cfg = res.config
print(res.header())
print("second jump at t =", round(res.second_jump_time, 1))

# %%
def level(t0, t1):
    sel = (res.t > t0) & (res.t <= t1)
    return res.price_mean[sel].mean()

print("before shock       ", round(level(0, cfg.t_shock), 3))
print("before rebound     ", round(level(res.second_jump_time - 500, res.second_jump_time), 3),
      " predicted", -cfg.A * cfg.tick / 3)
print("end of run         ", round(level(cfg.horizon - 500, cfg.horizon), 3),
      " predicted", -cfg.A * cfg.tick / 6)

# %% [markdown]
# Volume drops after this shock: with L below M the taker intensities scale by
# e^{cd} < 1. Shocking M instead (shock_target="M") produces the volume spike.

# %%
pre = res.volume[res.bucket_start < cfg.t_shock].mean()
post = res.volume[np.searchsorted(res.bucket_start, cfg.t_shock)]
print("volume per bucket: pre", round(pre), " first after shock", post)
alt = particle.run_fig2_scenario(seed=1, config=particle.Fig2Config(shock_target="M"))
print("with an M shock:  first after shock", alt.volume[np.searchsorted(alt.bucket_start, cfg.t_shock)])
