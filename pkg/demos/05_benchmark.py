"""
Where one iteration spends its time
===================================

Per-block timing for growing layer sizes, next to the two operation
count terms: layer products (L N^3) and pair sums (N_vec^2 N_s^2).
"""

# %%
import dataclasses

from simcr.harness import benchmark_iteration, load_config

cfg = load_config("configs/reference.ini")
for r in benchmark_iteration(cfg, repeats=3, sizes=(25, 49, 100)):
    print(f"N={r['N']:>3}  L*N^3={r['layer_term']:>8}  total {r['total_ms']:7.2f} ms "
          f"(P {r['P_ms']:.2f}, phi {r['phi_ms']:.2f}, psi {r['psi_ms']:.2f})")

# %% [markdown]
# With 16-QAM on two streams there are 256 transmit vectors and the pair
# sums take over at small N.

# %%
big = dataclasses.replace(cfg, signaling=dataclasses.replace(cfg.signaling, order=16))
for r in benchmark_iteration(big, repeats=1, sizes=(25,)):
    print(f"M=16 N=25: pair term {r['pair_term']}, pair sum {r['pair_sum_ms']:.2f} ms, total {r['total_ms']:.1f} ms")
