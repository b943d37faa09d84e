"""Monte Carlo and quadrature estimators for product tails and ruin probabilities.

Two estimator families:

``crude``
    Simulate i.i.d. Sarmanov pairs and average exceedance indicators.
``conditional``
    Draw only discount factors and integrate each loss out against its
    exact conditional law given its own discount factor. Because pairs are
    independent across periods, ``P[X_i Y_1...Y_i > x | Y_1..Y_i]`` equals
    ``P[X_i > x / (Y_1...Y_i) | Y_i]``, which is available in closed form.
    The result estimates ``sum_i P[X_i Y_1...Y_i > x]``; it approximates a
    ruin probability only in the large-x regime.

Every estimator splits its samples into 100 batches. Batch ``b`` draws from
its own stream keyed by ``(seed, b)`` and the standard error comes from the
spread of batch means, so results depend only on the seed, never on the
worker count.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ._numerics import batch_sizes, map_ordered, substreams
from .asymptotics import breiman_constant, horizon_factor, kernel_power_moment
from .errors import DomainError, HypothesisError, NumericalError
from .sarmanov import SarmanovModel

N_BATCHES = 100
METHODS = ("crude", "conditional")


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n_samples: int
    method: str
    seed: int
    truncation_index: Optional[int] = None
    remainder_bound: Optional[float] = None

    def interval(self, z: float = 1.959963984540054) -> tuple[float, float]:
        return self.value - z * self.stderr, self.value + z * self.stderr

    def as_dict(self) -> dict:
        return asdict(self)


def _check_method(method: str) -> str:
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    return method


def _batched(
    kernel: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    seed: int,
    workers: int,
) -> tuple[float, float]:
    """Mean and batch-means standard error of per-sample values produced by ``kernel``."""
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    n_batches = min(N_BATCHES, int(n_samples))
    sizes = batch_sizes(n_samples, n_batches)
    streams = substreams(seed, n_batches)
    sums = np.array(map_ordered(lambda b: float(np.sum(kernel(streams[b], sizes[b]))), range(n_batches), workers))
    sizes = np.asarray(sizes, dtype=float)
    value = float(sums.sum() / n_samples)
    if n_batches < 2:
        return value, 0.0
    means = sums / sizes
    return value, float(np.std(means, ddof=1) / math.sqrt(n_batches))


# --------------------------------------------------------------------------
# exact oracles
# --------------------------------------------------------------------------


def closed_form_product_tail(model: SarmanovModel, x: float) -> Optional[float]:
    """Closed form of P[XY > x] for Pareto-type F, FGM kernels and G on (0, b] with x >= x_m b.

    Returns None outside that family.
    """
    F, G = model.F, model.G
    if not (model.is_fgm and F.sv.form == "I" and math.isfinite(G.upper) and x >= F.x_m * G.upper):
        return None
    a = F.alpha
    kappa = breiman_constant(model).kappa
    second = kernel_power_moment(model, 2 * a)
    return F.x_m**a * x**-a * kappa + model.theta * F.x_m ** (2 * a) * x ** (-2 * a) * second


def exact_product_tail(model: SarmanovModel, x: float) -> float:
    """P[XY > x] by integrating the conditional tail of X against G.

    When the closed form applies the two routes must agree to 1e-10
    relative, and the closed form is returned.
    """
    model.require_valid()
    x = float(x)
    if x < model.F.x_m:
        raise DomainError("exact product tail needs x >= x_m")
    G = model.G
    y_cut = x / model.F.x_m  # above this y, x/y < x_m and X exceeds surely
    if G.is_atomic:
        quad = float(model.conditional_tail(G.lower, x / G.lower))
    else:
        body = G.expect(lambda y: float(model.conditional_tail(y, x / y)), upper=y_cut, epsabs=0.0, epsrel=1e-11)
        quad = body + float(G.tail(y_cut))
    closed = closed_form_product_tail(model, x)
    if closed is None:
        return quad
    if abs(closed - quad) > 1e-10 * abs(closed):
        raise NumericalError(f"closed form {closed!r} and quadrature {quad!r} disagree at x={x}")
    return closed


# --------------------------------------------------------------------------
# Monte Carlo estimators
# --------------------------------------------------------------------------


def product_tail_mc(
    model: SarmanovModel, x: float, method: str, n_samples: int, seed: int, workers: int = 1
) -> MCEstimate:
    """Estimate P[XY > x]."""
    _check_method(method)
    model.require_valid()

    if method == "crude":

        def kernel(rng, m):
            xs, ys = model.draw(rng, m)
            return (xs * ys > x).astype(float)

    else:

        def kernel(rng, m):
            y = model.G.sample(rng, m)
            return model.conditional_tail(y, x / y)

    value, se = _batched(kernel, n_samples, seed, workers)
    return MCEstimate(value, se, int(n_samples), method, int(seed))


def _conditional_terms(model: SarmanovModel, x: float, horizon: int, rng, m: int, only_last: bool):
    """Per-path sum of conditional term probabilities for i = 1..horizon.

    Discount factors are drawn period by period, so a shorter horizon sees
    the same leading draws as a longer one.
    """
    zeta = np.ones(m)
    total = np.zeros(m)
    for i in range(1, horizon + 1):
        y = model.G.sample(rng, m)
        zeta = zeta * y
        if only_last and i < horizon:
            continue
        total += model.conditional_tail(y, x / zeta)
    return total


def estimate_H_i(model: SarmanovModel, i: int, x: float, n_samples: int, seed: int, workers: int = 1) -> MCEstimate:
    """Unbiased conditional estimate of P[X_i Y_1...Y_i > x]."""
    if i < 1:
        raise DomainError("term index i must be at least 1")
    model.require_valid()
    value, se = _batched(lambda rng, m: _conditional_terms(model, x, int(i), rng, m, True), n_samples, seed, workers)
    return MCEstimate(value, se, int(n_samples), "conditional", int(seed))


def _crude_paths(model: SarmanovModel, x: float, horizon: int, rng, m: int) -> np.ndarray:
    zeta = np.ones(m)
    s = np.zeros(m)
    hit = np.zeros(m, dtype=bool)
    for _ in range(horizon):
        xs, ys = model.draw(rng, m)
        zeta = zeta * ys
        s = s + xs * zeta
        hit |= s > x
    return hit.astype(float)


def estimate_finite_ruin(
    model: SarmanovModel, x: float, n: int, method: str, n_samples: int, seed: int, workers: int = 1
) -> MCEstimate:
    """Psi(x, n) by crude path simulation, or the conditional sum of term tails."""
    _check_method(method)
    if n < 1:
        raise DomainError("horizon n must be at least 1")
    model.require_valid()
    if method == "crude":
        kernel = lambda rng, m: _crude_paths(model, x, int(n), rng, m)  # noqa: E731
    else:
        kernel = lambda rng, m: _conditional_terms(model, x, int(n), rng, m, False)  # noqa: E731
    value, se = _batched(kernel, n_samples, seed, workers)
    return MCEstimate(value, se, int(n_samples), method, int(seed))


def check_infinite_hypotheses(model: SarmanovModel) -> None:
    const = breiman_constant(model)
    if not const.e_y_alpha < 1.0:
        raise HypothesisError(f"E[Y^α] < 1 fails: E[Y^α] = {const.e_y_alpha:.6g}")
    mean_log, _ = model.G.log_moments()
    if not mean_log < 0.0:
        raise HypothesisError(f"E[log Y] < 0 fails: E[log Y] = {mean_log:.6g}")


def loss_power_moment(model: SarmanovModel, p: float) -> float:
    """E[(XY)^p] under the joint law: E[X^p]E[Y^p] + theta E[phi1(X)X^p] E[phi2(Y)Y^p]."""
    F = model.F
    ex = F.expect(lambda v: v**p)
    ey = model.G.power_moment(p)
    if model.theta == 0:
        return ex * ey
    ex_k = F.expect(lambda v: float(model.phi1(v)) * v**p)
    ey_k = kernel_power_moment(model, p)
    return ex * ey + model.theta * ex_k * ey_k


@dataclass(frozen=True)
class Truncation:
    index: int
    bound: float
    p: float
    rho: float
    loss_moment: float


def truncation_plan(model: SarmanovModel, x: float, tail_tol: float, p: Optional[float] = None) -> Truncation:
    """Smallest N with x^-p E[(XY)^p] rho^N / (1 - rho) <= tail_tol kappa F̄(x), rho = E[Y^p].

    Valid for p in (0, min(alpha, 1)) because t -> t^p is subadditive there.
    """
    if not tail_tol > 0:
        raise DomainError("tail_tol must be positive")
    alpha = model.F.alpha
    if p is None:
        p = min(alpha, 1.0) / 2.0
    if not 0.0 < p < min(alpha, 1.0):
        raise DomainError("truncation exponent p must lie in (0, min(alpha, 1))")
    rho = model.G.power_moment(p)
    if not rho < 1.0:
        raise HypothesisError(f"E[Y^p] < 1 fails for p={p:g}: E[Y^p] = {rho:.6g}")
    ezp = loss_power_moment(model, p)
    kappa = breiman_constant(model).kappa
    target = tail_tol * kappa * float(model.F.tail(x))
    scale = x**-p * ezp / (1.0 - rho)
    n = max(1, math.ceil(math.log(target / scale) / math.log(rho))) if scale > target else 1
    return Truncation(int(n), scale * rho**n, p, rho, ezp)


def estimate_infinite_ruin(
    model: SarmanovModel,
    x: float,
    n_samples: int,
    tail_tol: float,
    seed: int,
    workers: int = 1,
    method: str = "conditional",
    p: Optional[float] = None,
) -> MCEstimate:
    """Psi(x) via a horizon N chosen so the discarded tail is provably small."""
    _check_method(method)
    model.require_valid()
    check_infinite_hypotheses(model)
    plan = truncation_plan(model, x, tail_tol, p)
    est = estimate_finite_ruin(model, x, plan.index, method, n_samples, seed, workers)
    return MCEstimate(est.value, est.stderr, est.n_samples, method, int(seed), plan.index, plan.bound)


# --------------------------------------------------------------------------
# convergence table
# --------------------------------------------------------------------------

CURVE_COLUMNS = ("x", "estimate", "stderr", "tail_F", "ratio", "predicted", "rel_err")


@dataclass(frozen=True)
class CurveRow:
    x: float
    estimate: float
    stderr: float
    tail_F: float
    ratio: float
    predicted: float
    rel_err: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in CURVE_COLUMNS)


def ratio_curve(
    model: SarmanovModel,
    x_grid: Sequence[float],
    horizon="product",
    method: str = "exact",
    n_samples: int = 100_000,
    seed: int = 0,
    tail_tol: float = 0.01,
    workers: int = 1,
) -> list[CurveRow]:
    """Estimate / F̄(x) against its predicted limit along an increasing x grid.

    ``horizon`` is ``'product'``, a positive integer n, or ``'inf'``;
    ``method`` is ``'exact'`` (product only), ``'crude'`` or ``'conditional'``.
    """
    xs = [float(v) for v in x_grid]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise DomainError("x grid must be strictly increasing")
    predicted = horizon_factor(model, horizon)
    rows = []
    for x in xs:
        if horizon in ("product", 0, None):
            if method == "exact":
                est, se = exact_product_tail(model, x), 0.0
            else:
                r = product_tail_mc(model, x, method, n_samples, seed, workers)
                est, se = r.value, r.stderr
        elif method == "exact":
            raise DomainError("exact evaluation is only available for the product tail")
        elif horizon in ("inf", "infinite"):
            r = estimate_infinite_ruin(model, x, n_samples, tail_tol, seed, workers, method)
            est, se = r.value, r.stderr
        else:
            r = estimate_finite_ruin(model, x, int(horizon), method, n_samples, seed, workers)
            est, se = r.value, r.stderr
        fbar = float(model.F.tail(x))
        ratio = est / fbar
        rows.append(CurveRow(x, est, se, fbar, ratio, predicted, abs(ratio - predicted) / predicted))
    return rows
