"""Scalar factorizations on the unit circle.

Three families of factors feed the matrix kernel:

* L = h/r with the explicit factors
      L+(z) = CL sqrt(1 - zh/z) / sqrt(1 - zr/z),   L-(z) = L+(1/z),
  analytic and zero-free outside/inside the ring of branch points.

* The elementary symbol  F(z; zF) = Q(z) - 2 + 4 sin^2(phi/2)
                                  = zF^-1 (1 - zF z)(1 - zF/z)
  with |zF(phi)| < 1, split as F+- = zF^(-1/2)(1 - zF z^-+1).

* G1 = 1 + lam^N and G2 = 1 - lam^N.  For even N = 2*NN these collapse to
  Chebyshev products,
      G1 = 2 lam^NN T_NN(Q/2) = K prod_n F(z; zF(phi_{n-1})),
      G2 = lam^NN r h U_(NN-1)(Q/2) = K r h prod_n F(z; zF(phi_n)),
  with K = lam^NN, so the only numerical split left is the log projection
  of lam^NN.  For odd N the symbols are split numerically as a whole.

Factor constants are not normalised at infinity (the closed forms carry
zF^(-1/2)-type prefactors), so cross-route comparisons are made up to a
single multiplicative constant.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .circle import ContourGrid, SplitFunction, multiplicative_split
from .lattice import ComplexFrequency, LatticeSymbols, symbol_Q

__all__ = [
    "GFactorization",
    "chebyshev_G",
    "elementary_F",
    "factor_F_elementary",
    "factor_L",
    "refined_node_count",
    "z_F",
]


def factor_L(sym: LatticeSymbols, z, side: str):
    """Explicit factors of L = h/r:  L+ analytic for |z| > RL, L- inside."""
    z = np.asarray(z, dtype=complex)
    if side == "plus":
        w = 1.0 / z
    elif side == "minus":
        w = z
    else:
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    out = sym.CL * np.sqrt(1.0 - sym.zh * w) / np.sqrt(1.0 - sym.zr * w)
    return out if out.ndim else complex(out)


def z_F(phi: float, omega: ComplexFrequency) -> complex:
    """Inner zero of Q(z) - 2 + 4 sin^2(phi/2); equals zh at phi=0, zr at pi."""
    c = 2.0 - omega.value ** 2 + 4.0 * math.sin(phi / 2.0) ** 2
    disc = cmath.sqrt(c * c - 4.0)
    r1 = (c + disc) / 2.0
    r2 = (c - disc) / 2.0
    return r1 if abs(r1) < abs(r2) else r2


def elementary_F(z, zF: complex):
    """F(z; zF) = zF^-1 (1 - zF z)(1 - zF/z)."""
    z = np.asarray(z, dtype=complex)
    out = (1.0 - zF * z) * (1.0 - zF / z) / zF
    return out if out.ndim else complex(out)


def factor_F_elementary(z, zF: complex, side: str):
    """Split factors F+- (z; zF) = zF^(-1/2) (1 - zF z^-+1)."""
    z = np.asarray(z, dtype=complex)
    pref = zF ** -0.5
    if side == "plus":
        out = pref * (1.0 - zF / z)
    elif side == "minus":
        out = pref * (1.0 - zF * z)
    else:
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    return out if out.ndim else complex(out)


def refined_node_count(sym: LatticeSymbols, node_count: int,
                       cap: int = 1 << 20) -> int:
    """Grid size large enough to resolve the omega2-thin analyticity ring.

    Laurent coefficients of the lattice symbols decay like exp(-k d) with
    d = -log RL, so the tail below ~1e-14 needs roughly  80 / d  samples.
    """
    d = -math.log(sym.RL)
    need = min(cap, max(node_count, int(80.0 / d) + 1))
    n = 256
    while n < need:
        n *= 2
    return n


def chebyshev_G(sym: LatticeSymbols, z, which: int, N: int):
    """Closed product form of G1 = 1 + lam^N or G2 = 1 - lam^N (N even)."""
    if N % 2 != 0:
        raise ValueError("closed Chebyshev product form requires even N")
    NN = N // 2
    z = np.asarray(z, dtype=complex)
    K = sym.lam(z) ** NN
    if which == 1:
        out = K
        for n in range(1, NN + 1):
            out = out * elementary_F(z, z_F((2 * n - 1) * math.pi / (2 * NN), sym.omega))
    elif which == 2:
        out = K * sym.r(z) * sym.h(z)
        for n in range(1, NN):
            out = out * elementary_F(z, z_F(n * math.pi / NN, sym.omega))
    else:
        raise ValueError(f"which must be 1 or 2, got {which}")
    return out if out.ndim else complex(out)


class GFactorization:
    """Plus/minus factors of G1 = 1 + lam^N and G2 = 1 - lam^N.

    route='closed' (even N only) uses the Chebyshev product of elementary
    factors together with a numerical log-projection split of K = lam^(N/2);
    route='numeric' splits the symbols whole.  route='auto' picks closed for
    even N.

    The evaluators are valid on their side's domain including the one-sided
    limit on the unit circle.
    """

    def __init__(self, sym: LatticeSymbols, N: int,
                 node_count: int = 4096, route: str = "auto",
                 refine: bool = True):
        if route not in ("auto", "closed", "numeric"):
            raise ValueError(f"unknown route {route!r}")
        if route == "auto":
            route = "closed" if N % 2 == 0 else "numeric"
        if route == "closed" and N % 2 != 0:
            raise ValueError("closed route requires even N; use route='numeric'")
        self.sym = sym
        self.N = N
        self.route = route
        self.node_count = refined_node_count(sym, node_count) if refine else node_count
        nodes = np.exp(2j * np.pi * np.arange(self.node_count) / self.node_count)
        lam = sym.lam(nodes)

        if route == "closed":
            NN = N // 2
            self.zF_list1 = [z_F((2 * n - 1) * math.pi / (2 * NN), sym.omega)
                             for n in range(1, NN + 1)]
            self.zF_list2 = [z_F(n * math.pi / NN, sym.omega)
                             for n in range(1, NN)]
            self.K_split = multiplicative_split(ContourGrid(lam ** NN))
            # constant making Jplus * Jminus = r h exactly
            rho = 2.0
            zr, zh = sym.zr, sym.zh
            j0 = ((zr * zh) ** -0.25) ** 2 * (
                np.sqrt(1.0 - zr / rho) * np.sqrt(1.0 - zh / rho)
                * np.sqrt(1.0 - zr * rho) * np.sqrt(1.0 - zh * rho))
            cJ = complex(sym.r(rho) * sym.h(rho) / j0)
            roots = np.array([1.0, 1j, -1.0, -1j])
            self._cJ_half = complex(roots[np.argmin(np.abs(roots - np.sqrt(cJ)))])
            if abs(self._cJ_half ** 2 - cJ) > 1e-10:
                raise ValueError(f"J normalisation drifted off a unit root: {cJ}")
        else:
            self.zF_list1 = []
            self.zF_list2 = []
            self.G1_split = multiplicative_split(ContourGrid(1.0 + lam ** N))
            self.G2_split = multiplicative_split(ContourGrid(1.0 - lam ** N))

    def factor_J(self, z, side: str):
        """Split factors of J = r h (branch points of both h and r)."""
        z = np.asarray(z, dtype=complex)
        w = 1.0 / z if side == "plus" else z
        out = (self._cJ_half * (self.sym.zr * self.sym.zh) ** -0.25
               * np.sqrt(1.0 - self.sym.zr * w) * np.sqrt(1.0 - self.sym.zh * w))
        return out if out.ndim else complex(out)

    def _closed_eval(self, z, which: int, side: str):
        K = self.K_split.plus(z) if side == "plus" else self.K_split.minus(z)
        out = np.asarray(K, dtype=complex).copy()
        if which == 1:
            for zf in self.zF_list1:
                out = out * factor_F_elementary(z, zf, side)
        else:
            out = out * self.factor_J(z, side)
            for zf in self.zF_list2:
                out = out * factor_F_elementary(z, zf, side)
        return out

    def G(self, z, which: int):
        """The symbol itself, 1 +- lam^N."""
        lamN = self.sym.lam(z) ** self.N
        return 1.0 + lamN if which == 1 else 1.0 - lamN

    def _direct_eval(self, z, which: int, side: str):
        if self.route == "closed":
            return self._closed_eval(z, which, side)
        split = self.G1_split if which == 1 else self.G2_split
        return split.plus(z) if side == "plus" else split.minus(z)

    def factor_G(self, z, which: int, side: str):
        """Factor evaluation, stable through the whole analyticity ring.

        The truncated series representing the numeric split degrades near
        the far edge of its side's ring; there the factor is recovered from
        the symbol divided by the opposite (well-converged) factor.
        """
        if which not in (1, 2):
            raise ValueError(f"which must be 1 or 2, got {which}")
        if side not in ("plus", "minus"):
            raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
        z = np.asarray(z, dtype=complex)
        zf = np.atleast_1d(z)
        edge = self.sym.RL ** -0.45   # series kept to half the ring margin
        weak = (np.abs(zf) > edge) if side == "minus" else (np.abs(zf) < 1.0 / edge)
        if not np.any(weak):
            out = self._direct_eval(zf, which, side)
        else:
            out = np.empty(zf.shape, dtype=complex)
            strong = ~weak
            if np.any(strong):
                out[strong] = self._direct_eval(zf[strong], which, side)
            other = "plus" if side == "minus" else "minus"
            zw = zf[weak]
            out[weak] = np.asarray(self.G(zw, which)) / self._direct_eval(zw, which, other)
        out = out.reshape(z.shape)
        return out if z.ndim else complex(out)

    def ring_factors(self, rho: float = 1.0, n: int | None = None) -> dict[str, np.ndarray]:
        """All four factors at the n points rho*exp(2 pi i j / n), vectorised.

        rho = 1 gives the one-sided boundary limits on the circle.
        """
        if n is None:
            n = self.node_count
        nodes = rho * np.exp(2j * np.pi * np.arange(n) / n)
        if self.route == "closed":
            km, kp = self.K_split.ring_values(rho, n)
            g1p = kp.copy()
            g1m = km.copy()
            for zf in self.zF_list1:
                g1p *= factor_F_elementary(nodes, zf, "plus")
                g1m *= factor_F_elementary(nodes, zf, "minus")
            g2p = kp * self.factor_J(nodes, "plus")
            g2m = km * self.factor_J(nodes, "minus")
            for zf in self.zF_list2:
                g2p *= factor_F_elementary(nodes, zf, "plus")
                g2m *= factor_F_elementary(nodes, zf, "minus")
        else:
            g1m, g1p = self.G1_split.ring_values(rho, n)
            g2m, g2p = self.G2_split.ring_values(rho, n)
        return {"nodes": nodes, "G1+": g1p, "G1-": g1m, "G2+": g2p, "G2-": g2m}

    def boundary_factors(self) -> dict[str, np.ndarray]:
        """Factors at the grid nodes (one-sided limits on the circle)."""
        return self.ring_factors(1.0, self.node_count)
