"""
Geometry, diffraction and the inter-SIM channel
===============================================

Builds the reference layout, inspects one Rayleigh-Sommerfeld
propagation matrix and draws a spatially correlated channel.
"""

# %%
import numpy as np

from simcr.channel import PathLossModel, correlation_pair, path_gain_linear, path_loss_db, sample_channel
from simcr.geometry import SimGeometry, build_all_propagation

geom = SimGeometry()
print(geom)

# %% [markdown]
# Every layer is a 7x7 grid at half-wavelength pitch. The first transmit
# layer sits half a wavelength in front of the antennas.

# %%
prop = build_all_propagation(geom)
W1, W2 = prop.W[0], prop.W[1]
print("W^1 shape", W1.shape, "W^2 shape", W2.shape)
print("|W^2| min / max: %.3f / %.3f" % (np.abs(W2).min(), np.abs(W2).max()))
# nearest neighbours couple much more strongly than far corners
print("on-axis coupling |W^2[0, 0]| = %.3f" % abs(W2[0, 0]))

# %%
model = PathLossModel(wavelength=geom.wavelength)
print("path loss at 300 m: %.2f dB" % path_loss_db(model, geom.link_distance))
beta = path_gain_linear(model, geom.link_distance)

corr = correlation_pair(geom, "sinc")
ch = sample_channel(np.random.default_rng(0), corr, beta, seed=0)
print("G shape", ch.G.shape, " mean |G|^2 / beta = %.3f" % (np.mean(np.abs(ch.G) ** 2) / beta))
