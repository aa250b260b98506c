"""
Cutoff rate, mutual information and gradients
=============================================

The scalar BPSK case has a closed form; a random small instance shows
the analytic gradients against central differences.
"""

# %%
import numpy as np

from simcr.gradients import directional_fd_error, gradient_bundle
from simcr.objective import cutoff_rate, mutual_information_mc, objective_f, pair_distances, pairwise_distances
from simcr.signaling import build_constellation, build_differences, enumerate_vectors
from simcr.wavefield import DesignPoint, evaluate_cascades, receive_cascade, transmit_cascade

bpsk = enumerate_vectors(build_constellation("PSK", 2), 1)
one = np.ones((1, 1), dtype=complex)
f = objective_f(pairwise_distances(one, one, build_differences(bpsk)), 1.0)
print("f = %.12f  (2 + 2/e = %.12f)" % (f, 2 + 2 / np.e))
print("R0 = %.6f bits" % cutoff_rate(f, 2))
mi, se = mutual_information_mc(one, one, bpsk, 1.0, np.random.default_rng(1), 5000)
print("MI = %.4f +/- %.4f bits (never below R0)" % (mi, se))

# %% [markdown]
# Gradient check on a random 8-atom, two-layer instance. The perturbation
# contract is f(x + h d) - f(x - h d) ~= 4 h Re<g, d>.

# %%
rng = np.random.default_rng(2)
cn = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
W = [cn(8, 2), cn(8, 8) / 3]
U = [cn(2, 8), cn(8, 8) / 3]
G = cn(8, 8) / 3
diffs = build_differences(enumerate_vectors(build_constellation("QAM", 4), 2))
x = DesignPoint(cn(2, 2), [np.exp(1j * rng.uniform(0, 6.3, 8)) for _ in range(2)],
                [np.exp(1j * rng.uniform(0, 6.3, 8)) for _ in range(2)])
cache = evaluate_cascades(x, W, U, G)
d = pair_distances(cache.H, x.P, diffs)
s2 = d.mean() / 4
g = gradient_bundle(x, W, U, G, cache, d, diffs, s2)


def f_phi1(v):
    H = receive_cascade(x.psi, U) @ G @ transmit_cascade([v, x.phi[1]], W)
    return objective_f(pairwise_distances(H, x.P, diffs), s2)


print("phi^1 relative FD error: %.1e" % directional_fd_error(f_phi1, x.phi[0], g.grad_phi[0], cn(8)))
