"""Asymptotic constants for product tails and discounted ruin probabilities.

With ``g = E[Y^alpha]`` and ``kappa = g + theta d1 E[phi2(Y) Y^alpha]``:

* ``P[XY > x] / F̄(x) -> kappa``
* ``P[X_i Y_1...Y_i > x] / F̄(x) -> g^(i-1) kappa``
* ``Psi(x, n) / F̄(x) -> kappa (1 - g^n) / (1 - g)``  (``n kappa`` when g = 1)
* ``Psi(x) / F̄(x) -> kappa / (1 - g)``  when g < 1
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, HypothesisError, ModelError, NumericalError
from .marginals import PointMass, Uniform, power_moment
from .sarmanov import SarmanovModel, twisted_law

UNIT_MOMENT_TOL = 1e-12
CROSS_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class AsymptoticConstants:
    e_y_alpha: float
    kernel_moment: float
    d1: float
    theta: float
    kappa: float
    alpha: float
    twisted_moment: float

    def as_dict(self) -> dict:
        return asdict(self)


def kernel_power_moment(model: SarmanovModel, p: float) -> float:
    """E[phi2(Y) Y^p]; closed form for FGM over Uniform(0, b) and point masses."""
    G = model.G
    if model.is_fgm and isinstance(G, PointMass):
        return 0.0
    if model.is_fgm and isinstance(G, Uniform):
        # ∫ (1 - 2y/b) y^p dy/b over (0, b)
        return -p * G.b**p / ((p + 1.0) * (p + 2.0))
    return G.expect(lambda y: float(model.phi2(y)) * y**p)


@lru_cache(maxsize=256)
def _constants(model: SarmanovModel) -> AsymptoticConstants:
    model.require_valid()
    alpha = model.F.alpha
    g = power_moment(model.G, alpha)
    km = kernel_power_moment(model, alpha)
    kappa = g + model.theta * model.d1 * km
    if not kappa > 0:
        raise ModelError(f"Breiman constant kappa={kappa:.6g} is not positive; the asymptotic is vacuous")
    twisted = twisted_law(model).power_moment(alpha)
    if abs(twisted - kappa) > CROSS_CHECK_TOL:
        raise NumericalError(f"kappa={kappa!r} disagrees with the twisted alpha-moment {twisted!r}")
    return AsymptoticConstants(g, km, model.d1, model.theta, kappa, alpha, twisted)


def breiman_constant(model: SarmanovModel) -> AsymptoticConstants:
    """All ingredients of the product-tail constant, cross-checked against the twisted law."""
    return _constants(model)


def geometric_factor(g: float, n: int) -> float:
    """(1 - g^n)/(1 - g), or n when g is 1 to within 1e-12 relative."""
    if abs(g - 1.0) <= UNIT_MOMENT_TOL:
        return float(n)
    d = g - 1.0
    if g > 0 and abs(d) < 0.5:
        # (g^n - 1)/(g - 1) without cancellation near g = 1
        return math.expm1(n * math.log1p(d)) / d
    return (1.0 - g**n) / (1.0 - g)


def finite_horizon_factor(model: SarmanovModel, n: int) -> float:
    """Predicted limit of Psi(x, n) / F̄(x)."""
    if n < 1:
        raise DomainError("horizon n must be at least 1")
    c = _constants(model)
    return geometric_factor(c.e_y_alpha, int(n)) * c.kappa


def infinite_horizon_factor(model: SarmanovModel) -> float:
    """Predicted limit of Psi(x) / F̄(x); needs E[Y^alpha] < 1."""
    c = _constants(model)
    if not c.e_y_alpha < 1.0:
        raise HypothesisError(f"E[Y^α] < 1 fails: E[Y^α] = {c.e_y_alpha:.6g}")
    return c.kappa / (1.0 - c.e_y_alpha)


def predicted_tail_H_i(model: SarmanovModel, i: int, x):
    """g^(i-1) kappa F̄(x): the first-order approximation of P[X_i Y_1...Y_i > x]."""
    if i < 1:
        raise DomainError("term index i must be at least 1")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < model.F.x_m):
        raise DomainError("x must be at least x_m")
    c = _constants(model)
    out = c.e_y_alpha ** (i - 1) * c.kappa * model.F.tail(x_arr)
    return float(out) if out.ndim == 0 else out


def horizon_factor(model: SarmanovModel, horizon) -> float:
    """Predicted constant for a horizon tag: 'product', an integer n, or 'inf'."""
    if horizon in ("product", 0, None):
        return _constants(model).kappa
    if horizon in ("inf", "infinite", math.inf):
        return infinite_horizon_factor(model)
    return finite_horizon_factor(model, int(horizon))
