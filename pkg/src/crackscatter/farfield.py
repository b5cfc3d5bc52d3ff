"""Stationary-phase far fields of the diffracted wave.

In the angular variable z = exp(-i xi) the inversion integrals become
oscillatory integrals with phases

    phi2(xi) =  eta(xi) sin(theta) - xi cos(theta)     (y >= N+1)
    phi1(xi) = -eta(xi) sin(theta) - xi cos(theta)     (y <= 0)

where eta(xi) = -i log lam(e^{-i xi}) satisfies cos(eta) = varpi - cos(xi),
varpi = 2 - omega^2/2.  For R xi_h >> 1 the integrals localise at the
interior saddle xi_s with phi'(xi_s) = 0 and the leading term carries the
universal 1/sqrt(R) prefactor

    integral g e^{i R phi} dxi ~ g(xi_s) e^{i R phi(xi_s)}
                                  sqrt(2 pi / (-i R phi''(xi_s))).

The row amplitudes are the kernel-minus combinations

    K(z) = a^T K-(z) K-^{-1}(z_P) f,     G(z) = b^T K-(z) K-^{-1}(z_P) f,

with a = (0,1)^T selecting the upper face and b = (1,0)^T the lower.  The
incident pole at xi_P = -k cos(Theta) is deliberately not included, so the
result is the diffracted (cylindrical) part only; observation angles where
the saddle collides with the pole are flagged, not repaired.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import ComplexFrequency, PassBandError
from .solver import SpectralSolution

__all__ = ["FarField", "FarFieldSample", "SaddleData", "saddle_point"]

SADDLE_TOL = 1e-12
SADDLE_RESIDUAL_GATE = 1e-10
FAR_FIELD_MIN_RXI = 10.0
QUADRANT_BOUNDARIES = (0.25 * math.pi, 0.75 * math.pi, 1.25 * math.pi, 1.75 * math.pi)


@dataclass(frozen=True)
class SaddleData:
    """One stationary point of the far-field phase."""

    theta: float
    branch: int          # 2 for the upper region, 1 for the lower
    xi_s: complex
    eta_s: complex
    phi_2nd: complex     # d^2 phi / d xi^2 at the saddle
    residual: float      # |sin xi / sqrt(1 - (varpi - cos xi)^2) -+ cot theta|


@dataclass(frozen=True)
class FarFieldSample:
    theta: float
    R: float
    value: complex
    saddle: SaddleData
    flags: tuple[str, ...] = field(default=())


def _eta_of_xi(varpi: complex, xi):
    """eta with cos(eta) = varpi - cos(xi), Re eta >= 0, Im eta >= 0."""
    c = varpi - np.cos(xi)
    eta = np.arccos(c + 0j)
    # keep the branch that lam = e^{i eta} has |lam| <= 1
    flip = np.imag(eta) < 0
    eta = np.where(flip, -eta, eta)
    return eta if np.ndim(eta) else complex(eta)


def _phi_prime(varpi: complex, xi: complex, branch: int, theta: float) -> complex:
    eta = _eta_of_xi(varpi, xi)
    etap = -cmath.sin(xi) / cmath.sin(eta)
    s = 1.0 if branch == 2 else -1.0
    return s * etap * math.sin(theta) - math.cos(theta)


def _phi_prime2(varpi: complex, xi: complex, branch: int, theta: float) -> complex:
    eta = _eta_of_xi(varpi, xi)
    se, ce = cmath.sin(eta), cmath.cos(eta)
    sx = cmath.sin(xi)
    etapp = -cmath.cos(xi) / se - sx * sx * ce / (se ** 3)
    s = 1.0 if branch == 2 else -1.0
    return s * etapp * math.sin(theta)


def saddle_point(theta: float, omega: ComplexFrequency) -> SaddleData:
    """Saddle of the far-field phase for observation angle theta in (0, 2 pi).

    The closed form Xi = arccos((varpi + tau)/2) with
    tau = sec(2 theta) (varpi +- sqrt(varpi^2 sin^2 2theta + 4 cos^2 2theta))
    seeds a complex Newton iteration; near the quadrant boundaries, where
    sec(2 theta) blows up, a dense scan of the saddle equation seeds instead.
    The sign of Re xi_s follows the quadrant rules of the two phase branches.
    """
    if not 0.0 < omega.omega1 < 2.0:
        raise PassBandError(
            f"far-field branch implemented for omega1 in (0, 2); got {omega.omega1}")
    theta = float(theta) % (2.0 * math.pi)
    if min(abs(theta - b) for b in (0.0, math.pi, 2.0 * math.pi)) < 1e-9:
        raise ValueError("theta on the region boundary (sin theta = 0)")
    branch = 2 if theta < math.pi else 1
    w = omega.value
    varpi = 2.0 - 0.5 * w * w

    # quadrant sign of Re xi_s
    if branch == 2:
        sign = -1.0 if theta < 0.5 * math.pi else 1.0
    else:
        sign = 1.0 if theta < 1.5 * math.pi else -1.0

    candidates: list[complex] = []
    c2t = math.cos(2.0 * theta)
    if abs(c2t) > 1e-4:
        root = cmath.sqrt(varpi * varpi * math.sin(2.0 * theta) ** 2
                          + 4.0 * math.cos(2.0 * theta) ** 2)
        for pm in (1.0, -1.0):
            tau = (varpi + pm * root) / c2t
            xi0 = cmath.acos(0.5 * (varpi + tau))
            candidates.append(sign * xi0)
            candidates.append(-sign * xi0)
    # dense-scan seed (also the alternate path near quadrant boundaries)
    grid = sign * np.linspace(1e-3, math.pi - 1e-3, 721)
    vals = np.abs([_phi_prime(varpi, x, branch, theta) for x in grid])
    candidates.append(complex(grid[int(np.argmin(vals))]))

    # polish each candidate; among converged saddles of the right sign keep
    # the dominant one (smallest Im phi, i.e. least-damped contribution)
    best = None
    sgn_phase = 1.0 if branch == 2 else -1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for xi0 in candidates:
            xi = xi0
            try:
                for _ in range(60):
                    fp = _phi_prime(varpi, xi, branch, theta)
                    if abs(fp) < SADDLE_TOL:
                        break
                    fpp = _phi_prime2(varpi, xi, branch, theta)
                    if fpp == 0 or not np.isfinite(fpp):
                        break
                    step = fp / fpp
                    if not np.isfinite(step) or abs(step) > 1.0:
                        break
                    xi = xi - step
            except (ZeroDivisionError, OverflowError, ValueError):
                continue
            if abs(xi.imag) > 1.0 or not math.copysign(1.0, xi.real) == sign:
                continue
            res = abs(_phi_prime(varpi, xi, branch, theta))
            if res > 1e-9:
                continue
            phi = (sgn_phase * _eta_of_xi(varpi, xi) * math.sin(theta)
                   - xi * math.cos(theta))
            key = (round(phi.imag, 9), res)
            if best is None or key < best[1]:
                best = (xi, key)
    if best is None:
        raise ArithmeticError(f"no admissible saddle for theta = {theta}")
    xi_s = best[0]
    eta_s = _eta_of_xi(varpi, xi_s)
    phi2nd = _phi_prime2(varpi, xi_s, branch, theta)
    if abs(phi2nd) < 1e-12:
        raise ArithmeticError(f"degenerate saddle (phi'' = 0) at theta = {theta}")
    # residual in the explicit cot(theta) form
    se = cmath.sqrt(1.0 - (varpi - cmath.cos(xi_s)) ** 2)
    pm = 1.0 if branch == 2 else -1.0
    residual = abs(cmath.sin(xi_s) / se + pm / math.tan(theta))
    return SaddleData(theta=theta, branch=branch, xi_s=xi_s, eta_s=eta_s,
                      phi_2nd=phi2nd, residual=residual)


class FarField:
    """Stationary-phase evaluation of the diffracted field of one solution."""

    def __init__(self, solution: SpectralSolution, delta_pole_deg: float = 5.0):
        self.solution = solution
        self.sym = solution.sym
        self.geometry = solution.geometry
        self.wave = solution.wave
        self.delta_pole = math.radians(delta_pole_deg)
        # branch-point angle xi_h (zh = e^{i xi_h}) and pole angle xi_P
        self.xi_h = complex(-1j * cmath.log(self.sym.zh))
        self.xi_P = complex(-self.wave.k * math.cos(self.wave.theta))
        w = self.sym.omega.value
        self.varpi = 2.0 - 0.5 * w * w

    # row amplitudes ---------------------------------------------------------

    def amplitude_K(self, z) -> complex | np.ndarray:
        """a^T K-(z) K-^{-1}(z_P) f: upper-face amplitude (row selector (0,1))."""
        km = self.solution.fk.Kminus(z)
        out = np.einsum("...ij,j->...i", km, self.solution._gP)[..., 1]
        return out if np.ndim(out) else complex(out)

    def amplitude_G(self, z) -> complex | np.ndarray:
        """b^T K-(z) K-^{-1}(z_P) f: lower-face amplitude (row selector (1,0))."""
        km = self.solution.fk.Kminus(z)
        out = np.einsum("...ij,j->...i", km, self.solution._gP)[..., 0]
        return out if np.ndim(out) else complex(out)

    # far field ----------------------------------------------------------------

    def pole_angles(self) -> tuple[float, float]:
        """Observation angles where the saddle meets the incident pole."""
        th = abs(self.wave.theta)
        return th, 2.0 * math.pi - th

    def sample(self, theta: float, R: float) -> FarFieldSample:
        """Leading-order diffracted field at polar observation point (R, theta)."""
        sd = saddle_point(theta, self.sym.omega)
        z_s = cmath.exp(-1j * sd.xi_s)
        amp = (self.amplitude_K(z_s) if sd.branch == 2
               else self.amplitude_G(z_s))
        return self._assemble_sample(sd, amp, float(R))

    def sample_batch(self, thetas, Rs) -> list[FarFieldSample]:
        """Vectorised sampling: one saddle solve per angle, batched amplitudes."""
        thetas = np.asarray(thetas, dtype=float)
        Rs = np.broadcast_to(np.asarray(Rs, dtype=float), thetas.shape)
        saddles = [saddle_point(th, self.sym.omega) for th in thetas]
        z_s = np.array([cmath.exp(-1j * sd.xi_s) for sd in saddles])
        branch = np.array([sd.branch for sd in saddles])
        amps = np.empty(len(saddles), dtype=complex)
        if np.any(branch == 2):
            amps[branch == 2] = np.atleast_1d(self.amplitude_K(z_s[branch == 2]))
        if np.any(branch == 1):
            amps[branch == 1] = np.atleast_1d(self.amplitude_G(z_s[branch == 1]))
        out = []
        for sd, amp, R in zip(saddles, amps, Rs):
            out.append(self._assemble_sample(sd, amp, float(R)))
        return out

    def _assemble_sample(self, sd: SaddleData, amp: complex, R: float) -> FarFieldSample:
        theta = sd.theta
        flags = []
        if R * self.xi_h.real < FAR_FIELD_MIN_RXI:
            flags.append("near-field")
        if any(abs(theta - pa) < self.delta_pole for pa in self.pole_angles()):
            flags.append("pole-proximity")
        if any(abs(theta - qb) < math.radians(2.0) for qb in QUADRANT_BOUNDARIES):
            flags.append("quadrant-boundary")
        xi_s, eta_s = sd.xi_s, sd.eta_s
        C0A = self.wave.A * self.solution.C0
        sqrt_fac = cmath.sqrt(2.0 * math.pi / (-1j * R * sd.phi_2nd))
        if sd.branch == 2:
            phi = eta_s * math.sin(theta) - xi_s * math.cos(theta)
            num = (amp * cmath.exp(-1j * eta_s * self.geometry.N)
                   * cmath.exp(1j * xi_s * self.geometry.M))
            den = ((cmath.exp(1j * (xi_s - self.xi_P)) - 1.0)
                   * (1.0 - cmath.exp(1j * eta_s)))
        else:
            phi = -eta_s * math.sin(theta) - xi_s * math.cos(theta)
            num = amp * cmath.exp(1j * eta_s)
            den = ((1.0 - cmath.exp(1j * (xi_s - self.xi_P)))
                   * (1.0 - cmath.exp(1j * eta_s)))
        value = (C0A / (2.0 * math.pi)) * num / den \
            * cmath.exp(1j * R * phi) * sqrt_fac
        return FarFieldSample(theta=theta, R=R, value=complex(value),
                              saddle=sd, flags=tuple(flags))

    def quadrature_reference(self, x: int, y: int,
                             node_count: int = 1 << 17) -> complex:
        """Brute-force contour quadrature of the inversion integral at (x, y).

        Trapezoidal sum on the unit circle; spectrally accurate for the
        integer-point integrand and independent of the stationary-phase
        approximation it is used to check.
        """
        rd = self.solution.ring(1.0, node_count)
        vals = self.solution.row_transform_ring(rd, int(y))
        return complex(np.mean(vals * rd.nodes ** int(x)))
