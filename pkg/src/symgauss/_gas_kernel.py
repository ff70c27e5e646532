"""Compiled single-particle Metropolis sweeps for the eigenvalue gas.

Random numbers are drawn outside (counter-based generator) and passed in,
which keeps chains bit-reproducible independent of numba's own RNG.
Potential codes: 0 = Q, 1 = SW, 2 = S.
"""

import math

import numba as nb
import numpy as np


@nb.njit(cache=True)
def potential_term(kind, x, coef):
    # coef * (x^2 | log^2 x | arccosh^2 x)
    if kind == 0:
        return coef * x * x
    if kind == 1:
        lx = math.log(x)
        return coef * lx * lx
    ax = math.acosh(x)
    return coef * ax * ax


@nb.njit(cache=True)
def propose(kind, old, z):
    """Return (new position, log Jacobian of the move)."""
    if kind == 0:
        return old + z, 0.0
    if kind == 1:
        # random walk in log x
        return old * math.exp(z), z
    # random walk in log(x - 1)
    return 1.0 + (old - 1.0) * math.exp(z), z


@nb.njit(cache=True)
def delta_log_density(x, i, new, kind, coef, beta):
    """log p(x with x_i -> new) - log p(x); -inf on a collision."""
    old = x[i]
    d = potential_term(kind, old, coef) - potential_term(kind, new, coef)
    for j in range(x.shape[0]):
        if j != i:
            dn = abs(new - x[j])
            if dn == 0.0:
                return -np.inf
            d += beta * (math.log(dn) - math.log(abs(old - x[j])))
    return d


@nb.njit(cache=True)
def run_sweeps(x, kind, coef, beta, step, normals, uniforms, out, stride):
    """Sweep over all particles once per row of ``normals``.

    Writes a copy of ``x`` into ``out`` every ``stride`` sweeps (as many as
    fit) and returns the number of accepted moves.
    """
    nsweeps, n = normals.shape
    accepted = 0
    k = 0
    for s in range(nsweeps):
        for i in range(n):
            new, logjac = propose(kind, x[i], step * normals[s, i])
            if kind == 1 and not new > 0.0:
                continue
            if kind == 2 and not new > 1.0:
                continue
            d = delta_log_density(x, i, new, kind, coef, beta)
            if d == -np.inf:
                continue
            if math.log(uniforms[s, i]) < d + logjac:
                x[i] = new
                accepted += 1
        if (s + 1) % stride == 0 and k < out.shape[0]:
            out[k, :] = x
            k += 1
    return accepted
