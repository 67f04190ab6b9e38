"""White-in-time chaos moments in d = 1 via the resolvent of the pair motion.

For white-in-time noise with spatial covariance
Lambda(x) = H (2H - 1) |x|^(2H - 2), H > 1/2, the n-th chaos second moment
is m_n(t) = E[(int_0^t Lambda(Z_s) ds)^n / n!] where Z is the difference of
two independent Brownian motions.  Its time Laplace transform at rate one is

    int_0^inf e^-t m_n(t) dt = L_n(0),
    L_0 = 1,   L_n(y) = int_R exp(-|y - z|) / 2 * Lambda(z) L_{n-1}(z) dz,

and homogeneity gives m_n(t) = L_n(0) t^(nH) / Gamma(nH + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from ..errors import PreconditionError


@dataclass(frozen=True)
class ResolventGrid:
    """Nodes on [0, Y]: z = v^k on [0, 1] absorbs the origin singularity of Lambda."""

    H: float
    y_max: float = 40.0
    n_inner: int = 8001
    n_outer: int = 16001

    def nodes(self):
        if not 0.5 < self.H < 1.0:
            raise PreconditionError("the resolvent route needs 1/2 < H < 1")
        kappa = self.H * (2 * self.H - 1)
        k = 1.0 / (2 * self.H - 1)
        v = np.linspace(0.0, 1.0, self.n_inner)
        z_in = v ** k
        # Lambda(z) dz/dv = kappa k exactly under z = v^k
        w_in = np.full_like(v, kappa * k)
        z_out = np.linspace(1.0, self.y_max, self.n_outer)
        w_out = kappa * z_out ** (2 * self.H - 2)
        return (v, z_in, w_in), (z_out, z_out, w_out)


def _segment_cumulative(x, f):
    """Left cumulative integral on one segment, starting at zero."""
    return cumulative_simpson(f, x=x, initial=0.0)


def _apply(grid, g_in, g_out):
    """One resolvent step on the two-segment grid; returns new values at the nodes."""
    (v, z_in, w_in), (x_out, z_out, w_out) = grid
    out = []
    # A(y) = int_0^y e^z Lambda g dz, built from the left
    a_in = _segment_cumulative(v, np.exp(z_in) * w_in * g_in)
    a_out = a_in[-1] + _segment_cumulative(x_out, np.exp(z_out) * w_out * g_out)
    # T(y) = int_y^Y e^-z Lambda g dz, built from the right so no cancellation
    t_out = _segment_cumulative(-x_out[::-1], (np.exp(-z_out) * w_out * g_out)[::-1])[::-1]
    t_in = t_out[0] + _segment_cumulative(-v[::-1], (np.exp(-z_in) * w_in * g_in)[::-1])[::-1]
    c = t_in[0]
    for z, a, tt in ((z_in, a_in, t_in), (z_out, a_out, t_out)):
        out.append(0.5 * (np.exp(-z) * a + np.exp(z) * tt + np.exp(-z) * c))
    return out


def resolvent_coefficients(H: float, n_max: int, grid: ResolventGrid | None = None) -> np.ndarray:
    """L_n(0) for n = 0..n_max."""
    grid = grid or ResolventGrid(H)
    nodes = grid.nodes()
    g_in = np.ones_like(nodes[0][1])
    g_out = np.ones_like(nodes[1][1])
    coeffs = [1.0]
    for _ in range(n_max):
        g_in, g_out = _apply(nodes, g_in, g_out)
        coeffs.append(float(g_in[0]))
    return np.array(coeffs)


def white_moment_resolvent(n: int, t: float, H: float, grid: ResolventGrid | None = None) -> float:
    """E[u_n(t)^2] for d = 1, white time, 1/2 < H < 1."""
    L = resolvent_coefficients(H, n, grid)[n]
    return L * math.exp(n * H * math.log(t) - math.lgamma(n * H + 1))
