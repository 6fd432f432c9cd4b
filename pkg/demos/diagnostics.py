"""The computable quantities behind the recovery guarantees.

Prints the local coherence matrix of the DFT against the redundant Haar
frame, the level sparsities and κ̃ of a test signal, and the quantity
B̃(Δ) for its support.
"""
import numpy as np

from framecs.diagnostics import b_tilde, kappa_tilde, local_coherence
from framecs.signals import random_piecewise_constant, support
from framecs.transforms import dft_matrix, haar_frame_redundant, wavelet_levels

p = 6
n = 2 ** p
V, D = dft_matrix(n), haar_frame_redundant(p)
M = wavelet_levels(p).boundaries                 # dyadic frequency bands
N = wavelet_levels(p, frame=True).boundaries

lc = local_coherence(V, D, M, N)
np.set_printoptions(precision=3, suppress=True, linewidth=120)
print("local coherences mu[k, l]:")
print(lc.mu)

x = random_piecewise_constant(n, 5, np.random.default_rng(3))
delta = support(D @ x)
edges = np.concatenate(([0], N))
s = np.histogram(delta, bins=edges + 0.5)[0]
print("level sparsities s:", s)
print("kappa_tilde:       ", kappa_tilde(D, delta, N, trials=500, seed=0))
print(f"B~(Delta) = {b_tilde(D, delta, N).value:.4f}")
