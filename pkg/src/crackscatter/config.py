"""Flat-JSON run configuration with strict key checking."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

from .direct import GridSpec
from .lattice import ComplexFrequency, CrackGeometry, IncidentWave, PASS_BAND_MAX

__all__ = ["ConfigError", "RunConfig", "load_config"]

# fixed exclusion bands of the comparison harness (degrees)
DELTA_POLE_DEG = 5.0
DELTA_QUADRANT_DEG = 2.0
DELTA_REGION_DEG = 3.0


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass(frozen=True)
class RunConfig:
    omega1: float = 0.35
    omega2: float = 1e-3
    ThetaDeg: float = 45.0
    A: complex = 1.0
    N: int = 4
    M: int = 0
    nodeCount: int = 4096
    deltaOff: float = 1e-3
    Ngrid: int = 200
    Npml: int = 60
    sigmaMax: float = 1.0
    circleRadius: float = 70.0
    thetaStepDeg: float = 1.0
    outputDir: str = "out"

    def validate(self) -> None:
        errs = []
        if not 0.0 < self.omega1 < PASS_BAND_MAX:
            errs.append(f"omega1: must lie in (0, {PASS_BAND_MAX:.6f}), got {self.omega1}")
        if not 0.0 < self.omega2 <= 0.1:
            errs.append(f"omega2: must lie in (0, 0.1], got {self.omega2}")
        if not -90.0 < self.ThetaDeg < 90.0:
            errs.append(f"ThetaDeg: transform annulus needs cos(Theta) > 0, so "
                        f"ThetaDeg must lie in (-90, 90), got {self.ThetaDeg}")
        if self.N < 1:
            errs.append(f"N: must be >= 1, got {self.N}")
        n = self.nodeCount
        if n < 256 or (n & (n - 1)) != 0:
            errs.append(f"nodeCount: must be a power of two >= 256, got {n}")
        if not 0.0 < self.deltaOff < 0.5:
            errs.append(f"deltaOff: must lie in (0, 0.5), got {self.deltaOff}")
        if self.thetaStepDeg <= 0.0:
            errs.append(f"thetaStepDeg: must be positive, got {self.thetaStepDeg}")
        if self.Ngrid < 8:
            errs.append(f"Ngrid: must be >= 8, got {self.Ngrid}")
        if not 0 <= self.Npml < self.Ngrid:
            errs.append(f"Npml: must lie in [0, Ngrid), got {self.Npml}")
        if self.circleRadius + self.Npml > self.Ngrid:
            errs.append("circleRadius: circle reaches into the absorbing layer "
                        f"(circleRadius + Npml must be <= Ngrid = {self.Ngrid})")
        if self.N + 2 > self.Ngrid - 1:
            errs.append(f"N: crack rows 0..{self.N + 1} do not fit the grid")
        if self.sigmaMax < 0:
            errs.append(f"sigmaMax: must be >= 0, got {self.sigmaMax}")
        if errs:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errs))

    # -- derived objects ------------------------------------------------------

    @property
    def theta(self) -> float:
        return math.radians(self.ThetaDeg)

    def frequency(self) -> ComplexFrequency:
        return ComplexFrequency(self.omega1, self.omega2)

    def wave(self) -> IncidentWave:
        return IncidentWave.from_angle(self.frequency(), self.theta, self.A)

    def geometry(self) -> CrackGeometry:
        return CrackGeometry(N=self.N, M=self.M)

    def gridspec(self) -> GridSpec:
        return GridSpec(ngrid=self.Ngrid, npml=self.Npml,
                        sigma_max=self.sigmaMax, circle_radius=self.circleRadius)

    # -- serialisation ----------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.A, complex):
            d["A"] = [self.A.real, self.A.imag] if self.A.imag else self.A.real
        return d

    def hash(self) -> str:
        """Provenance hash of the physics content (outputDir excluded)."""
        d = self.to_dict()
        d.pop("outputDir", None)
        payload = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def replace(self, **kw) -> "RunConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        cfg = RunConfig(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        clean = dict(data)
        if "A" in clean and isinstance(clean["A"], (list, tuple)):
            if len(clean["A"]) != 2:
                raise ConfigError("A: expected a number or [re, im] pair")
            clean["A"] = complex(clean["A"][0], clean["A"][1])
        int_fields = {"N", "M", "nodeCount", "Ngrid", "Npml"}
        for k, v in clean.items():
            if k in int_fields:
                if not isinstance(v, int) or isinstance(v, bool):
                    raise ConfigError(f"{k}: expected an integer, got {v!r}")
            elif k == "outputDir":
                if not isinstance(v, str):
                    raise ConfigError(f"outputDir: expected a string, got {v!r}")
            elif k == "A":
                if not isinstance(v, (int, float, complex)):
                    raise ConfigError(f"A: expected a number or [re, im] pair")
            else:
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise ConfigError(f"{k}: expected a number, got {v!r}")
        cfg = cls(**clean)
        cfg.validate()
        return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must contain a JSON object")
    return RunConfig.from_dict(data)
