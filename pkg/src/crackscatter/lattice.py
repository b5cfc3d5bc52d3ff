"""Square-lattice symbols for the two-crack scattering problem.

Out-of-plane lattice waves on the integer grid obey the discrete Helmholtz
equation; after a discrete Fourier transform in x the physics is carried by
a handful of complex functions of the transform variable z:

    Q(z)   = 4 - z - 1/z - omega^2        (transformed Helmholtz symbol)
    h(z)   = sqrt(Q - 2),  r(z) = sqrt(Q + 2)
    lam(z) = (r - h)/(r + h)              (|lam| < 1 off the branch cuts)

The two pairs of branch points (zh, 1/zh) and (zr, 1/zr) are the zeros of
Q - 2 and Q + 2.  A small positive dissipation omega2 pushes zh and zr off
the unit circle, which keeps every symbol analytic on an annulus around
|z| = 1 and makes the half-range transforms converge.

Branch discipline: h and r are evaluated through their factored forms

    h(z) = zh^(-1/2) sqrt(1 - zh z) sqrt(1 - zh/z)

whose principal-branch cuts are the segment [0, zh] and the ray from 1/zh
to infinity; neither crosses the unit circle.  The residual sign ambiguity
is fixed by requiring |lam| < 1 at a real reference point outside the unit
circle.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

PASS_BAND_MAX = 2.0 * math.sqrt(2.0)

__all__ = [
    "BranchCutError",
    "ComplexFrequency",
    "ConvergenceError",
    "CrackGeometry",
    "IncidentWave",
    "LatticeSymbols",
    "PassBandError",
    "branch_points",
    "delta_plus",
    "incident_cod",
    "solve_wavenumber",
    "symbol_Q",
]


class PassBandError(ValueError):
    """Frequency outside the interval where the lattice carries the wave."""


class BranchCutError(ValueError):
    """Evaluation point too close to a branch cut to pick a branch."""


class ConvergenceError(RuntimeError):
    """An iterative solve stopped without reaching its tolerance."""


@dataclass(frozen=True)
class ComplexFrequency:
    """Nondimensional driving frequency omega1 + i*omega2.

    omega2 > 0 is the (small) dissipation that regularises the transforms;
    it is capped at 0.1 to stay in the vanishing-dissipation regime.
    """

    omega1: float
    omega2: float = 1e-3

    def __post_init__(self) -> None:
        if not self.omega1 > 0.0:
            raise ValueError(f"omega1 must be positive, got {self.omega1}")
        if not 0.0 < self.omega2 <= 0.1:
            raise ValueError(f"omega2 must lie in (0, 0.1], got {self.omega2}")

    @property
    def value(self) -> complex:
        return complex(self.omega1, self.omega2)


@dataclass(frozen=True)
class CrackGeometry:
    """Two semi-infinite cracks: rows (0,1) for x >= 0 and (N, N+1) for x >= M.

    N >= 1 is the vertical separation in rows; M is the horizontal offset of
    the second crack tip (any sign).  The x >= M convention for the second
    crack is the one consistent with the x+M shift used in the transformed
    boundary conditions and the kernel entries z^(-M), z^(+M).
    """

    N: int
    M: int = 0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"row separation N must be >= 1, got {self.N}")


def symbol_Q(z, omega: ComplexFrequency):
    """Transformed Helmholtz symbol Q(z) = 4 - z - 1/z - omega^2."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ZeroDivisionError("Q(z) is singular at z = 0")
    w = omega.value
    out = 4.0 - z - 1.0 / z - w * w
    return out if out.ndim else complex(out)


def branch_points(omega: ComplexFrequency) -> tuple[complex, complex]:
    """Zeros (zh, zr) of Q - 2 and Q + 2 with modulus < 1.

    Each pair of zeros is reciprocal: z + 1/z = 2 - omega^2 (for zh) and
    z + 1/z = 6 - omega^2 (for zr); the root inside the unit circle is
    returned.  For omega2 > 0 neither root lies on the circle.
    """
    w2 = omega.value ** 2

    def _inner_root(c: complex) -> complex:
        # z^2 - c z + 1 = 0, pick |z| < 1
        disc = cmath.sqrt(c * c - 4.0)
        r1 = (c + disc) / 2.0
        r2 = (c - disc) / 2.0
        return r1 if abs(r1) < abs(r2) else r2

    zh = _inner_root(2.0 - w2)
    zr = _inner_root(6.0 - w2)
    return zh, zr


def solve_wavenumber(omega: ComplexFrequency, theta: float,
                     tol: float = 1e-13, max_iter: int = 100) -> complex:
    """Complex wavenumber k of the incident wave at angle theta.

    Solves omega^2 = 4 sin^2(k cos(theta)/2) + 4 sin^2(k sin(theta)/2) by
    bisection on the real dispersion relation followed by Newton iteration
    in the complex plane.  Returns k with Re k >= 0 and Im k > 0.
    """
    if not 0.0 < omega.omega1 < PASS_BAND_MAX:
        raise PassBandError(
            f"omega1 = {omega.omega1} outside the pass band (0, {PASS_BAND_MAX:.6f})")
    c, s = math.cos(theta), math.sin(theta)
    w = omega.value

    def resid(k):
        return w * w - 4.0 * (np.sin(k * c / 2.0) ** 2 + np.sin(k * s / 2.0) ** 2)

    def dresid(k):
        return -2.0 * (np.sin(k * c) * c + np.sin(k * s) * s)

    # real seed at omega2 = 0: scan for the first bracket, then bisect
    w1sq = omega.omega1 ** 2
    real_resid = lambda kk: w1sq - 4.0 * (math.sin(kk * c / 2.0) ** 2
                                          + math.sin(kk * s / 2.0) ** 2)
    kmax = math.pi * math.sqrt(2.0)
    grid = np.linspace(1e-9, kmax, 2048)
    vals = np.array([real_resid(kk) for kk in grid])
    crossings = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(crossings) == 0:
        raise PassBandError(
            f"no propagating wavenumber for omega1 = {omega.omega1} at theta = {theta}")
    lo, hi = grid[crossings[0]], grid[crossings[0] + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if real_resid(lo) * real_resid(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    k = complex(0.5 * (lo + hi), 0.0)

    for _ in range(max_iter):
        f = resid(k)
        if abs(f) < tol:
            break
        df = dresid(k)
        if df == 0:
            raise ConvergenceError("dispersion derivative vanished during Newton")
        k = k - f / df
    else:
        raise ConvergenceError(
            f"wavenumber Newton did not converge: |residual| = {abs(resid(k)):.3e}")
    if k.real < -1e-12 or k.imag <= 0.0:
        raise ConvergenceError(
            f"wavenumber left the physical branch: k = {k}")
    return complex(max(k.real, 0.0), k.imag)


@dataclass(frozen=True)
class IncidentWave:
    """Incident plane lattice wave A exp(i kx x + i ky y).

    Attributes
    ----------
    A : complex
        Amplitude (carried uniformly through both crack rows).
    theta : float
        Incidence angle in (-pi, pi].
    k : complex
        Wavenumber with Re k >= 0, Im k > 0.
    kx, ky : complex
        Components k cos(theta), k sin(theta).
    zP : complex
        Transform-plane pole exp(i k cos(theta)) of the incident forcing.
    """

    A: complex
    theta: float
    k: complex
    kx: complex
    ky: complex
    zP: complex
    omega: ComplexFrequency

    @classmethod
    def from_angle(cls, omega: ComplexFrequency, theta: float,
                   amplitude: complex = 1.0) -> "IncidentWave":
        if not -math.pi < theta <= math.pi:
            raise ValueError(f"theta must lie in (-pi, pi], got {theta}")
        k = solve_wavenumber(omega, theta)
        kx = k * math.cos(theta)
        ky = k * math.sin(theta)
        wave = cls(A=complex(amplitude), theta=theta, k=k, kx=kx, ky=ky,
                   zP=cmath.exp(1j * kx), omega=omega)
        if wave.dispersion_residual >= 1e-12:
            raise ConvergenceError(
                f"dispersion residual {wave.dispersion_residual:.3e} >= 1e-12")
        return wave

    @property
    def dispersion_residual(self) -> float:
        w = self.omega.value
        return abs(w * w - 4.0 * (np.sin(self.kx / 2.0) ** 2
                                  + np.sin(self.ky / 2.0) ** 2))


def incident_cod(wave: IncidentWave, geometry: CrackGeometry, x, row: int):
    """Incident crack-opening displacement on row 1 (y=0/1) or row 2 (y=N/N+1).

    Row 2 is indexed by the shifted coordinate (lattice site x + M); the extra
    phase exp(i k (M cos(theta) + N sin(theta))) carries the offset of the
    second crack.
    """
    x = np.asarray(x, dtype=float)
    base = wave.A * np.exp(1j * wave.kx * x) * (np.exp(1j * wave.ky) - 1.0)
    if row == 1:
        out = base
    elif row == 2:
        out = base * np.exp(1j * (geometry.M * wave.kx + geometry.N * wave.ky))
    else:
        raise ValueError(f"row must be 1 or 2, got {row}")
    return out if out.ndim else complex(out)


def delta_plus(z, zP: complex, tol: float = 1e-10):
    """One-sided delta transform z/(z - zP), analytic for |z| > |zP|."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z - zP) < tol):
        raise ZeroDivisionError(f"evaluation within {tol} of the pole z_P = {zP}")
    out = z / (z - zP)
    return out if out.ndim else complex(out)


def _dist_to_segment(z: np.ndarray, a: complex, b: complex) -> np.ndarray:
    d = b - a
    t = np.clip(((z - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(z - (a + t * d))


def _dist_to_ray(z: np.ndarray, a: complex) -> np.ndarray:
    # ray from a through infinity, direction a/|a|
    d = a / abs(a)
    t = np.maximum(((z - a) * np.conj(d)).real, 0.0)
    return np.abs(z - (a + t * d))


class LatticeSymbols:
    """Branch points, annulus geometry and branch-fixed h, r, lam, eta.

    Parameters
    ----------
    omega : ComplexFrequency
    wave : IncidentWave, optional
        When given, the annulus of the half transforms (R+, R-) is derived
        from the incident decay rates and the full annulus ordering
        max(R+, RL) < 1 < min(R-, 1/RL) is enforced at construction.
        Without a wave the lam-regularity ring (RL, 1/RL) is used.
    """

    def __init__(self, omega: ComplexFrequency, wave: IncidentWave | None = None,
                 delta_cut: float = 1e-10):
        self.omega = omega
        self.delta_cut = delta_cut
        self.zh, self.zr = branch_points(omega)
        self.RL = max(abs(self.zh), abs(self.zr))
        if wave is not None:
            k2 = wave.k.imag
            self.Rplus = math.exp(-k2 * math.cos(wave.theta))
            self.Rminus = math.exp(k2)
        else:
            self.Rplus = self.RL
            self.Rminus = 1.0 / self.RL
        if not max(self.Rplus, self.RL) < 1.0 < min(self.Rminus, 1.0 / self.RL):
            raise ValueError(
                "empty annulus of analyticity: "
                f"R+ = {self.Rplus:.6f}, R- = {self.Rminus:.6f}, RL = {self.RL:.6f}")

        # fix the residual branch signs at a real reference point outside T
        rho = 2.0
        self._sign_h = 1.0
        lam_ref = self._lam_raw(np.asarray(rho, dtype=complex))
        if abs(lam_ref) >= 1.0:
            self._sign_h = -1.0

        # CL makes Lplus * Lminus = h/r; snap to a fourth root of zr/zh
        cl0 = (self.zr / self.zh) ** 0.25
        prod0 = cl0 ** 2 * (np.sqrt(1.0 - self.zh / rho) / np.sqrt(1.0 - self.zr / rho)
                            * np.sqrt(1.0 - self.zh * rho) / np.sqrt(1.0 - self.zr * rho))
        target = self.h(rho) / self.r(rho)
        c = complex(target / prod0)
        roots = np.array([1.0, 1j, -1.0, -1j])
        snap = roots[np.argmin(np.abs(roots - np.sqrt(c)))]
        if abs(snap ** 2 - c) > 1e-10:
            raise ValueError(f"CL normalisation drifted off a unit root: c = {c}")
        self.CL = complex(cl0 * snap)

    # -- branch machinery ---------------------------------------------------

    def _check_cuts(self, z: np.ndarray) -> None:
        d = np.minimum.reduce([
            _dist_to_segment(z, 0.0, self.zh),
            _dist_to_segment(z, 0.0, self.zr),
            _dist_to_ray(z, 1.0 / self.zh),
            _dist_to_ray(z, 1.0 / self.zr),
        ])
        if np.any(d < self.delta_cut):
            raise BranchCutError(
                f"evaluation within {self.delta_cut} of a branch cut")

    def _sqrt_pair(self, z: np.ndarray, zb: complex) -> np.ndarray:
        # sqrt(Q -+ 2) through zb^(-1/2) sqrt(1 - zb z) sqrt(1 - zb / z)
        return (zb ** -0.5) * np.sqrt(1.0 - zb * z) * np.sqrt(1.0 - zb / z)

    def h(self, z):
        """sqrt(Q - 2), cuts along [0, zh] and the ray beyond 1/zh."""
        z = np.asarray(z, dtype=complex)
        self._check_cuts(z)
        out = self._sign_h * self._sqrt_pair(z, self.zh)
        return out if out.ndim else complex(out)

    def r(self, z):
        """sqrt(Q + 2), cuts along [0, zr] and the ray beyond 1/zr."""
        z = np.asarray(z, dtype=complex)
        self._check_cuts(z)
        out = self._sqrt_pair(z, self.zr)
        return out if out.ndim else complex(out)

    def lam(self, z):
        """lam = (r - h)/(r + h) with |lam| < 1 off the cuts."""
        z = np.asarray(z, dtype=complex)
        self._check_cuts(z)
        hh = self._sign_h * self._sqrt_pair(z, self.zh)
        rr = self._sqrt_pair(z, self.zr)
        out = (rr - hh) / (rr + hh)
        return out if out.ndim else complex(out)

    def _lam_raw(self, z):
        hh = self._sign_h * self._sqrt_pair(z, self.zh)
        rr = self._sqrt_pair(z, self.zr)
        return (rr - hh) / (rr + hh)

    def Q(self, z):
        return symbol_Q(z, self.omega)

    def eta(self, z):
        """eta = -i log(lam), principal branch; Im eta > 0 where |lam| < 1."""
        lam = self.lam(z)
        out = -1j * np.log(lam)
        return out if np.ndim(out) else complex(out)

    def L(self, z):
        """Scalar kernel L = h/r."""
        z = np.asarray(z, dtype=complex)
        out = self.h(z) / self.r(z)
        return out if np.ndim(out) else complex(out)
