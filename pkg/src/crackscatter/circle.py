"""Cauchy projectors and function splitting on the unit circle.

Everything here rests on one observation: for f analytic in an annulus
around |z| = 1, the Cauchy projectors

    (P+ f)(z) = +(1/2 pi i) oint f(a)/(z - a) da     (|z| > 1)
    (P- f)(z) = -(1/2 pi i) oint f(a)/(z - a) da     (|z| < 1)

split the Laurent series of f into its negative-power part (analytic
outside, vanishing at infinity) and its nonnegative-power part (analytic
inside, constants land on the minus side).  On a uniform grid the
trapezoidal discretisation of the projector is algebraically identical to
truncating the FFT estimate of the Laurent coefficients, so splits are
built once per sample set via the FFT and evaluated anywhere afterwards,
including one-sided limits on the circle itself.

Multiplicative splits g = g+ g- are additive splits of log g; the winding
number of g along the contour must vanish for log g to close up.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from numpy.polynomial import polynomial as P

logger = logging.getLogger(__name__)

DEFAULT_NODE_COUNT = 4096
DEFAULT_DELTA_OFF = 1e-3

__all__ = [
    "ContourGrid",
    "SplitFunction",
    "SplitMatrix",
    "additive_split",
    "cauchy_project",
    "multiplicative_split",
    "winding_number",
]


class ContourGrid:
    """Samples of a scalar or 2x2-matrix function on uniform circle nodes.

    Parameters
    ----------
    samples : array, shape (n,) or (n, 2, 2)
        Function values at the nodes exp(2 pi i j / n).
    """

    def __init__(self, samples: np.ndarray):
        samples = np.asarray(samples, dtype=complex)
        n = samples.shape[0]
        if n < 256 or (n & (n - 1)) != 0:
            raise ValueError(f"node count must be a power of two >= 256, got {n}")
        if samples.ndim not in (1, 3) or (samples.ndim == 3 and samples.shape[1:] != (2, 2)):
            raise ValueError(f"samples must have shape (n,) or (n,2,2), got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        self.samples = samples
        self.node_count = n
        self.nodes = np.exp(2j * np.pi * np.arange(n) / n)

    @classmethod
    def from_function(cls, fn, node_count: int = DEFAULT_NODE_COUNT) -> "ContourGrid":
        nodes = np.exp(2j * np.pi * np.arange(node_count) / node_count)
        return cls(np.asarray(fn(nodes), dtype=complex))

    @property
    def is_matrix(self) -> bool:
        return self.samples.ndim == 3


def cauchy_project(grid: ContourGrid, z, side: str,
                   delta_off: float = DEFAULT_DELTA_OFF):
    """Trapezoidal Cauchy projector +-(1/2 pi i) oint f(a)/(z-a) da.

    The plus side is meant for |z| > 1 and the minus side for |z| < 1;
    requesting the opposite region evaluates the analytic continuation
    across the contour and is flagged with a warning.  Points closer than
    delta_off to the contour are rejected.
    """
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(np.abs(z) - 1.0) < delta_off):
        raise ValueError(f"evaluation within delta_off = {delta_off} of the contour")
    if side == "plus" and np.any(np.abs(z) < 1.0):
        logger.warning("plus projection requested inside the circle: "
                       "returning the analytic continuation")
    if side == "minus" and np.any(np.abs(z) > 1.0):
        logger.warning("minus projection requested outside the circle: "
                       "returning the analytic continuation")
    a = grid.nodes
    f = grid.samples
    zz = z[..., None]  # broadcast over nodes in the last axis
    w = a / (zz - a) / grid.node_count
    if grid.is_matrix:
        out = np.einsum("...j,jkl->...kl", w, f)
    else:
        out = (w * f).sum(axis=-1)
    if side == "minus":
        out = -out
    return out if out.ndim else complex(out)


def winding_number(samples: np.ndarray) -> float:
    """Winding of a nonvanishing sample loop, from discrete phase increments."""
    s = np.asarray(samples)
    ratios = np.roll(s, -1) / s
    return float(np.angle(ratios).sum() / (2.0 * np.pi))


def _unwrapped_log(samples: np.ndarray) -> np.ndarray:
    """log of the samples with the phase accumulated continuously."""
    inc = np.angle(np.roll(samples, -1) / samples)
    phase = np.angle(samples[0]) + np.concatenate(([0.0], np.cumsum(inc[:-1])))
    return np.log(np.abs(samples)) + 1j * phase


def _laurent_split(samples: np.ndarray):
    """FFT Laurent coefficients, split into (minus, plus) parts.

    minus: ascending coefficients of z^0, z^1, ... (analytic inside),
    plus : ascending coefficients of z^-1, z^-2, ... (analytic outside).
    """
    n = samples.shape[0]
    c = np.fft.fft(samples, axis=0) / n
    minus = c[: n // 2]
    plus = c[: n // 2 - 1 : -1]  # c_{-1}, c_{-2}, ..., c_{-n/2+1}
    return minus, plus


def _trim(coeffs: np.ndarray, rtol: float = 1e-15) -> np.ndarray:
    mag = np.abs(coeffs)
    while mag.ndim > 1:
        mag = mag.max(axis=-1)
    top = mag.max() if mag.size else 0.0
    if top == 0.0:
        return coeffs[:1]
    keep = np.nonzero(mag > rtol * top)[0]
    return coeffs[: int(keep[-1]) + 1] if keep.size else coeffs[:1]


def _tail_estimate(minus: np.ndarray, plus: np.ndarray) -> float:
    """Spectral error heuristic: mass of the top octave of the spectrum."""
    est = 0.0
    for c in (minus, plus):
        mag = np.abs(c)
        while mag.ndim > 1:
            mag = mag.max(axis=-1)
        k = len(mag)
        if k >= 8:
            est = max(est, float(mag[(3 * k) // 4:].sum()))
    return est


def _eval_ascending(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = P.polyval(z, coeffs, tensor=True)
    if coeffs.ndim == 3 and out.ndim > 2:  # (2,2,...) -> (...,2,2)
        out = np.moveaxis(out, (0, 1), (-2, -1))
    return out


class SplitFunction:
    """Additive or multiplicative plus/minus split of a scalar circle function.

    plus(z) is analytic outside the unit circle (vanishing at infinity for
    additive splits, normalised to 1 there for multiplicative splits);
    minus(z) is analytic inside.  Evaluation on |z| = 1 returns the
    one-sided boundary limit from the side of analyticity.
    """

    def __init__(self, kind: str, minus_coeffs: np.ndarray, plus_coeffs: np.ndarray,
                 node_count: int):
        self.kind = kind
        self._minus = _trim(minus_coeffs)
        self._plus = _trim(plus_coeffs)
        self.node_count = node_count
        self.err_estimate = _tail_estimate(self._minus, self._plus)

    def _plus_series(self, z):
        w = 1.0 / np.asarray(z, dtype=complex)
        val = _eval_ascending(self._plus, w)
        if self._plus.ndim == 3:
            return val * w[..., None, None]
        return w * val

    def _minus_series(self, z):
        return _eval_ascending(self._minus, np.asarray(z, dtype=complex))

    def plus(self, z):
        out = self._plus_series(z)
        if self.kind == "multiplicative":
            out = np.exp(out)
        return out if np.ndim(out) else complex(out)

    def minus(self, z):
        out = self._minus_series(z)
        if self.kind == "multiplicative":
            out = np.exp(out)
        return out if np.ndim(out) else complex(out)

    def boundary_parts(self) -> tuple[np.ndarray, np.ndarray]:
        """One-sided limits of (minus, plus) at all grid nodes, via the FFT."""
        return self.ring_values(1.0, self.node_count)

    def ring_values(self, rho: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(minus, plus) parts at the n points rho * exp(2 pi i j / n).

        Coefficients beyond n fold onto their alias; the result is the exact
        value of the stored series at every ring node, in O(n log n).  The
        ring must lie inside the part's domain of convergence (for boundary
        limits take rho = 1).
        """
        tail = self._minus.shape[1:]
        pad = (-1,) + (1,) * len(tail)

        spec = np.zeros((n,) + tail, dtype=complex)
        k = np.arange(len(self._minus))
        np.add.at(spec, k % n, self._minus * (rho ** k).reshape(pad))
        minus_v = np.fft.ifft(spec, axis=0) * n

        spec = np.zeros((n,) + tail, dtype=complex)
        k = np.arange(1, len(self._plus) + 1)
        np.add.at(spec, (-k) % n, self._plus * (rho ** (-k.astype(float))).reshape(pad))
        plus_v = np.fft.ifft(spec, axis=0) * n

        if self.kind == "multiplicative":
            return np.exp(minus_v), np.exp(plus_v)
        return minus_v, plus_v


class SplitMatrix(SplitFunction):
    """Entrywise additive split of a 2x2 matrix circle function."""

    def __init__(self, minus_coeffs: np.ndarray, plus_coeffs: np.ndarray,
                 node_count: int):
        super().__init__("additive", minus_coeffs, plus_coeffs, node_count)


def additive_split(grid: ContourGrid):
    """Split f = f+ + f- by Cauchy projection (entrywise for matrices)."""
    minus, plus = _laurent_split(grid.samples)
    if grid.is_matrix:
        return SplitMatrix(minus, plus, grid.node_count)
    return SplitFunction("additive", minus, plus, grid.node_count)


def multiplicative_split(grid: ContourGrid, ind_tol: float = 1e-6) -> SplitFunction:
    """Split g = g+ g- with g+(inf) = 1, via the log projection.

    Requires g nonvanishing on the contour with winding number zero.
    """
    if grid.is_matrix:
        raise ValueError("multiplicative splits are defined for scalar symbols only")
    s = grid.samples
    if np.any(np.abs(s) == 0.0):
        raise ValueError("symbol vanishes on the contour; cannot factorise")
    ind = winding_number(s)
    if abs(ind) > ind_tol:
        raise ValueError(f"nonzero winding number ind g = {ind:.3e}; "
                         "canonical factorisation does not exist")
    minus, plus = _laurent_split(_unwrapped_log(s))
    return SplitFunction("multiplicative", minus, plus, grid.node_count)
