"""What the regularization and the negativity measure look like.

    python demos/02_regularization.py

The mobility uses a_eps(s) = eps + max(0, s), so it stays at least eps even
where a height dips below zero.  Separately, chi_delta measures how negative
a profile gets: it vanishes for s >= 0 and grows like -s for very negative s.
"""

import numpy as np

import twofilm as tf

# %% a_eps is piecewise linear and never drops below eps.
s = np.array([-1.0, -0.01, 0.0, 0.01, 1.0])
print("a_0.1(s) =", tf.a_eps(0.1, s))

# %% chi_delta and its first two derivatives at a few points.  The family is
# built once from a tabulated bump and cached.
family = tf.default_mollifier()
for delta in (1.0, 0.1, 0.01):
    x = np.array([-2.0, -1.0, -0.5, 0.0]) * delta
    print(f"delta={delta:<5} chi={family(delta, x)}  chi'={family(delta, x, 1)}")

# %% Two bounds worth seeing numerically: chi_delta stays within delta of
# max(-x, 0), and its slope never exceeds 1 in size.
xs = np.linspace(-3.0, 0.0, 10_001)
for delta in (1.0, 0.1, 0.01):
    gap = np.abs(family(delta, xs) - np.maximum(-xs, 0.0)).max()
    slope = np.abs(family(delta, xs, 1)).max()
    print(f"delta={delta:<5} max|chi - max(-x,0)| / delta = {gap / delta:.3f}   max|chi'| = {slope:.3f}")

# %% Applied to a dipping profile, the integral of chi_delta(f) over the
# domain shrinks as delta grows (the dip is seen less sharply) and tends to
# the integral of the negative part of f as delta -> 0.
L, n = 1.0, 24
basis = tf.SpectralBasis.build(L, n)
x = basis.nodes
f = 0.05 + 0.1 * np.cos(2 * np.pi * x)
F = tf.project(f, basis)
f_nodes = tf.synthesize(F, basis)
print("int f_- dx      =", float(basis.quad.integrate(np.maximum(-f_nodes, 0.0))))
for delta in (0.1, 0.01, 0.001):
    print(f"int chi_{delta}(f) =", float(basis.quad.integrate(family(delta, f_nodes))))
