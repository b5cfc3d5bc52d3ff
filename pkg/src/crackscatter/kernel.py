"""The 2x2 Wiener-Hopf kernel and its first-order asymptotic factorization.

The kernel K = L * G_M couples the two crack-opening transforms, with

    G_M = [[1, z^-M lam^N], [z^M lam^N, 1]].

At zero offset G_M = F has the exact canonical factorization F- F+ built
from the scalar factors of G1 = 1 + lam^N and G2 = 1 - lam^N.  For M != 0
the conjugated kernel F-^-1 G_M F+^-1 = I + N_M is split additively,
N_M = N- + N+, and the first-order factors

    K- = L- F- (I + N-),      K+ = L+ (I + N+) F+

reproduce K up to the quadratic error N- N+, of size eps^2 with
eps = sup |lam^N sin(xi M / 2)| on the unit circle.

Probe radii for residual estimation are pulled toward the circle when the
annulus of analyticity is thinner than the requested offset; the truncated
Laurent series lose their accuracy near the ring edge, while on the circle
itself the one-sided limits converge fastest.
"""

from __future__ import annotations

import math

import numpy as np

from .circle import ContourGrid, SplitMatrix, additive_split
from .factors import GFactorization, factor_L
from .lattice import CrackGeometry, LatticeSymbols

__all__ = [
    "FactorizedKernel",
    "MatrixKernel",
    "epsilon_magnitude",
    "mat2_inv",
    "mat2_mul",
]


def mat2_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...jk->...ik", a, b)


def mat2_inv(m: np.ndarray) -> np.ndarray:
    """Adjugate inverse of a batch of 2x2 matrices."""
    m = np.asarray(m, dtype=complex)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / det[..., None, None]


def _pack(a11, a12, a21, a22) -> np.ndarray:
    a11, a12, a21, a22 = np.broadcast_arrays(a11, a12, a21, a22)
    return np.stack([np.stack([a11, a12], axis=-1),
                     np.stack([a21, a22], axis=-1)], axis=-2)


def epsilon_magnitude(sym: LatticeSymbols, N: int, M: int,
                      node_count: int = 4096) -> float:
    """Small parameter eps = sup_T |lam^N sin(xi M / 2)|."""
    if M == 0:
        return 0.0
    theta = 2.0 * np.pi * np.arange(node_count) / node_count
    lam = sym.lam(np.exp(1j * theta))
    return float(np.max(np.abs(lam ** N * np.sin(theta * M / 2.0))))


class MatrixKernel:
    """Unfactorized kernel K = L * G_M and its building blocks."""

    def __init__(self, sym: LatticeSymbols, geometry: CrackGeometry):
        self.sym = sym
        self.geometry = geometry

    def G_M(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        lamN = self.sym.lam(z) ** self.geometry.N
        zM = z ** self.geometry.M
        one = np.ones_like(lamN)
        return _pack(one, lamN / zM, lamN * zM, one)

    def F(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        lamN = self.sym.lam(z) ** self.geometry.N
        one = np.ones_like(lamN)
        return _pack(one, lamN, lamN, one)

    def K(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.sym.L(z)[..., None, None] * self.G_M(z)


class FactorizedKernel:
    """First-order factorization K = K- K+ (exact for M = 0).

    Attributes
    ----------
    residual_estimate : float
        sup-norm of K - K- K+ over the probe set (circle nodes plus two
        rings inside the annulus of analyticity).
    epsilon : float
        Size of the perturbation driving the asymptotic error.
    """

    def __init__(self, kernel: MatrixKernel, node_count: int = 4096,
                 route: str = "auto", refine: bool = True,
                 delta_off: float = 1e-3, probe_count: int = 256):
        self.kernel = kernel
        self.sym = kernel.sym
        self.geometry = kernel.geometry
        self.gf = GFactorization(self.sym, self.geometry.N,
                                 node_count=node_count, route=route, refine=refine)
        self.node_count = self.gf.node_count
        self.epsilon = epsilon_magnitude(self.sym, self.geometry.N,
                                         self.geometry.M, min(self.node_count, 8192))
        self._n_split: SplitMatrix | None = None
        if self.geometry.M != 0:
            self._n_split = additive_split(ContourGrid(self._sample_N_M()))
        # probe radii stay a quarter ring-width away from the ring edge
        margin = min(math.log(min(self.sym.Rminus, 1.0 / self.sym.RL)),
                     -math.log(max(self.sym.Rplus, self.sym.RL)))
        self.probe_delta = min(delta_off, 0.25 * margin)
        self.residual_estimate = self._residual_estimate(probe_count)

    # -- pieces ---------------------------------------------------------

    def _sample_N_M(self) -> np.ndarray:
        bf = self.gf.boundary_factors()
        nodes, g1p, g1m = bf["nodes"], bf["G1+"], bf["G1-"]
        g2p, g2m = bf["G2+"], bf["G2-"]
        lamN = self.sym.lam(nodes) ** self.geometry.N
        zM = nodes ** self.geometry.M
        g1 = 1.0 + lamN
        g2 = 1.0 - lamN
        even = lamN * (2.0 - zM - 1.0 / zM)
        odd = lamN * (zM - 1.0 / zM)
        return _pack(-even / (2.0 * g1),
                     g1p * g2m * odd / (2.0 * g1 * g2),
                     -g1m * g2p * odd / (2.0 * g1 * g2),
                     even / (2.0 * g2))

    def N_M(self, z) -> np.ndarray:
        """Perturbation matrix of the conjugated kernel, I + N_M = F-^-1 G_M F+^-1."""
        z = np.asarray(z, dtype=complex)
        lamN = self.sym.lam(z) ** self.geometry.N
        zM = z ** self.geometry.M
        g1 = 1.0 + lamN
        g2 = 1.0 - lamN
        g1p = self.gf.factor_G(z, 1, "plus")
        g1m = self.gf.factor_G(z, 1, "minus")
        g2p = self.gf.factor_G(z, 2, "plus")
        g2m = self.gf.factor_G(z, 2, "minus")
        even = lamN * (2.0 - zM - 1.0 / zM)
        odd = lamN * (zM - 1.0 / zM)
        return _pack(-even / (2.0 * g1),
                     g1p * g2m * odd / (2.0 * g1 * g2),
                     -g1m * g2p * odd / (2.0 * g1 * g2),
                     even / (2.0 * g2))

    def _n_side(self, z: np.ndarray, side: str) -> np.ndarray:
        """Additive N_M parts, recovered through N_M minus the opposite part
        near the far edge of the series' ring (same idea as factor_G)."""
        zf = np.atleast_1d(z)
        edge = self.sym.RL ** -0.45
        weak = (np.abs(zf) > edge) if side == "minus" else (np.abs(zf) < 1.0 / edge)
        out = np.empty(zf.shape + (2, 2), dtype=complex)
        strong = ~weak
        if np.any(strong):
            out[strong] = (self._n_split.minus(zf[strong]) if side == "minus"
                           else self._n_split.plus(zf[strong]))
        if np.any(weak):
            zw = zf[weak]
            other = (self._n_split.plus(zw) if side == "minus"
                     else self._n_split.minus(zw))
            out[weak] = self.N_M(zw) - other
        out = out.reshape(z.shape + (2, 2))
        return out

    def N_plus(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self._n_split is None:
            return np.zeros(z.shape + (2, 2), dtype=complex)
        return self._n_side(z, "plus")

    def N_minus(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self._n_split is None:
            return np.zeros(z.shape + (2, 2), dtype=complex)
        return self._n_side(z, "minus")

    def F_factor(self, z, side: str) -> np.ndarray:
        """Canonical factors of F: F- rows carry G1-, G2-; F+ columns G1+, G2+."""
        z = np.asarray(z, dtype=complex)
        s = 1.0 / math.sqrt(2.0)
        if side == "minus":
            g1m = self.gf.factor_G(z, 1, "minus")
            g2m = self.gf.factor_G(z, 2, "minus")
            return s * _pack(g1m, g2m, g1m, -g2m)
        if side == "plus":
            g1p = self.gf.factor_G(z, 1, "plus")
            g2p = self.gf.factor_G(z, 2, "plus")
            return s * _pack(g1p, g1p, g2p, -g2p)
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")

    def F_factor_inv(self, z, side: str) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        s = 1.0 / math.sqrt(2.0)
        if side == "minus":
            ig1 = 1.0 / self.gf.factor_G(z, 1, "minus")
            ig2 = 1.0 / self.gf.factor_G(z, 2, "minus")
            return s * _pack(ig1, ig1, ig2, -ig2)
        if side == "plus":
            ig1 = 1.0 / self.gf.factor_G(z, 1, "plus")
            ig2 = 1.0 / self.gf.factor_G(z, 2, "plus")
            return s * _pack(ig1, ig2, ig1, -ig2)
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")

    # -- factors ----------------------------------------------------------

    def Kminus(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        lm = np.asarray(factor_L(self.sym, z, "minus"))
        fm = self.F_factor(z, "minus")
        out = lm[..., None, None] * fm
        if self._n_split is not None:
            eye = np.eye(2, dtype=complex)
            out = mat2_mul(out, eye + self.N_minus(z))
        return out

    def Kplus(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        lp = np.asarray(factor_L(self.sym, z, "plus"))
        fp = self.F_factor(z, "plus")
        if self._n_split is not None:
            eye = np.eye(2, dtype=complex)
            fp = mat2_mul(eye + self.N_plus(z), fp)
        return lp[..., None, None] * fp

    def Kminus_inv(self, z) -> np.ndarray:
        return mat2_inv(self.Kminus(z))

    def Kplus_inv(self, z) -> np.ndarray:
        return mat2_inv(self.Kplus(z))

    def Kminus_ring(self, rho: float, n: int) -> np.ndarray:
        """K-(z) at the n contour points rho*exp(2 pi i j/n), in O(n log n).

        Valid for rho inside the minus domain (rho <= 1 in practice; rho = 1
        gives the boundary limit from inside).
        """
        nodes = rho * np.exp(2j * np.pi * np.arange(n) / n)
        bf = self.gf.ring_factors(rho, n)
        s = 1.0 / math.sqrt(2.0)
        fm = s * _pack(bf["G1-"], bf["G2-"], bf["G1-"], -bf["G2-"])
        lm = np.asarray(factor_L(self.sym, nodes, "minus"))
        out = lm[..., None, None] * fm
        if self._n_split is not None:
            nm, _ = self._n_split.ring_values(rho, n)
            out = mat2_mul(out, np.eye(2, dtype=complex) + nm)
        return out

    # -- diagnostics --------------------------------------------------------

    def _residual_estimate(self, probe_count: int) -> float:
        per_ring = max(probe_count // 4, 8)
        ang = 2.0 * np.pi * (np.arange(per_ring) + 0.37) / per_ring
        radii = [1.0, math.exp(-self.probe_delta), math.exp(self.probe_delta)]
        worst = 0.0
        for rho in radii:
            z = rho * np.exp(1j * ang)
            resid = self.kernel.K(z) - mat2_mul(self.Kminus(z), self.Kplus(z))
            worst = max(worst, float(np.max(np.abs(resid))))
        return worst
