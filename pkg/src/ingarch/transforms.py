"""Bijections between constrained model parameters and unconstrained space.

alpha0 maps through log; the feedback weights and probability-type
dispersions map through scaled log-odds on (l, u) (default (0, 1); kappa uses
(-1, 1)); the negative-binomial dispersion maps through log. Sampling and
optimization both run in the unconstrained space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .core import IngarchSpec
from .count_dists import Family, InvalidParameterError


class BoundaryValueError(ValueError):
    """A parameter sits exactly on a transform bound (maps to +-inf)."""


@dataclass(frozen=True)
class CoordTransform:
    """One coordinate's map: 'log' for positives, 'logit' for (lo, hi)."""

    name: str
    kind: str
    lo: float = 0.0
    hi: float = 1.0

    def forward(self, value: float) -> float:
        if self.kind == "log":
            if value <= 0.0:
                raise BoundaryValueError(f"{self.name}={value} not in (0, inf)")
            return float(np.log(value))
        z = (value - self.lo) / (self.hi - self.lo)
        if not (0.0 < z < 1.0):
            raise BoundaryValueError(
                f"{self.name}={value} not inside ({self.lo}, {self.hi})"
            )
        return float(logit(z))

    def inverse(self, u: float) -> float:
        if self.kind == "log":
            with np.errstate(over="ignore"):
                return float(np.exp(u))
        return float(self.lo + (self.hi - self.lo) * expit(u))

    def dvalue_du(self, u: float) -> float:
        """Derivative of the constrained value w.r.t. its unconstrained one."""
        if self.kind == "log":
            with np.errstate(over="ignore"):
                return float(np.exp(u))
        s = expit(u)
        return float((self.hi - self.lo) * s * (1.0 - s))


class ParamTransform:
    """Coordinate-wise transform for a model of given family and orders."""

    def __init__(self, family: Family, p: int, q: int):
        self.family = family
        self.p = p
        self.q = q
        coords = [CoordTransform("alpha0", "log")]
        coords += [CoordTransform(f"alpha{i}", "logit") for i in range(1, p + 1)]
        coords += [CoordTransform(f"beta{j}", "logit") for j in range(1, q + 1)]
        if family is Family.HGEOM:
            coords.append(CoordTransform("phi", "logit"))
        elif family is Family.GP:
            coords.append(CoordTransform("kappa", "logit", lo=-1.0, hi=1.0))
        elif family is Family.NB:
            coords.append(CoordTransform("n", "log"))
        self.coords = coords

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.coords]

    def to_unconstrained(self, packed) -> np.ndarray:
        packed = np.asarray(packed, dtype=float)
        if packed.shape != (self.dim,):
            raise InvalidParameterError(
                f"expected {self.dim} parameters, got {packed.shape}"
            )
        return np.array([c.forward(v) for c, v in zip(self.coords, packed)])

    def to_constrained(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise InvalidParameterError(f"expected {self.dim} coordinates, got {u.shape}")
        return np.array([c.inverse(v) for c, v in zip(self.coords, u)])

    def jacobian_diag(self, u) -> np.ndarray:
        """d(constrained)/d(unconstrained), one entry per coordinate."""
        u = np.asarray(u, dtype=float)
        return np.array([c.dvalue_du(v) for c, v in zip(self.coords, u)])

    def log_abs_det_jacobian(self, u) -> float:
        return float(np.sum(np.log(self.jacobian_diag(u))))


def spec_transform(spec: IngarchSpec) -> ParamTransform:
    return ParamTransform(spec.family, spec.p, spec.q)


def to_unconstrained(spec: IngarchSpec) -> np.ndarray:
    """Unconstrained coordinates of a spec (log-Jacobian via ParamTransform)."""
    return spec_transform(spec).to_unconstrained(spec.packed())


def to_constrained(u, family: Family, p: int, q: int) -> IngarchSpec:
    """Spec from unconstrained coordinates.

    The result always satisfies the per-parameter range constraints; the
    hurdle-geometric joint link condition alpha0 >= 1 - phi is not implied
    and is checked path-wise by the likelihood instead.
    """
    packed = ParamTransform(family, p, q).to_constrained(u)
    return IngarchSpec.from_packed(family, p, q, packed)
