# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

"""
Shooting solver for the reduced system

    U' = -lam U (1 - U) + (1 - U V) (1 - (1 - U) W)
    V' = lam V (1 - U)
    W' = -lam W U

started at U(0) = 1/2, V(0) = W(0) = eps. For lam < 4 exactly one eps
sends the trajectory into the saddle (1, 1, 0); smaller values blow up
through U = 1, larger ones through V = 1. The saddle orbit gives
F = U V and G = (1 - U) W on x >= 0 and the whole line by G(x) = F(-x),
W(x) = V(-x), from which the overlap and the weight are integrated.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Callable, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union)

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import config
from .exceptions import (
    ContractError, NoSolutionError, NumericalFailureError, ParameterError,
    PrecisionError)

__all__ = ['TrajectoryPoint', 'BasinKind', 'BasinClass', 'NoSolution',
           'OdeDiagnostics', 'OdeSolution', 'Shooting', 'rhs', 'integrate',
           'integrate_classify', 'scan_basins', 'find_epsilon0',
           'reconstruct_solution', 'compute_alpha', 'compute_weight',
           'solve_ode']

logger = logging.getLogger(__name__)

LAMBDA_CRITICAL = 4.0
# largest double below 1, alpha stays there when 1 - alpha underflows
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class TrajectoryPoint:
    x: float
    U: float
    V: float
    W: float

    @property
    def F(self) -> float:
        return self.U * self.V

    @property
    def G(self) -> float:
        return (1 - self.U) * self.W

    @property
    def saddle_distance(self) -> float:
        """Sup distance to the saddle (1, 1, 0)"""
        return max(abs(1 - self.U), abs(1 - self.V), abs(self.W))


class BasinKind(Enum):
    """Fate of a trajectory started at some eps"""
    ESCAPED_V = 'escaped_v'
    ESCAPED_U = 'escaped_u'
    UNDETERMINED = 'undetermined'


@dataclass(frozen=True)
class BasinClass:
    kind: BasinKind
    x_hit: Optional[float] = None
    x_max: Optional[float] = None
    final_point: Optional[TrajectoryPoint] = None


@dataclass(frozen=True)
class NoSolution:
    """Answer of :func:`solve_ode` in the recovery regime lam >= 4"""
    lam: float
    reason: str = ("lambda >= 4: U'(0) <= 1 - lambda/4 - F(0) < 0 for every "
                   "eps > 0, the trajectory can not reach the saddle")


class Shooting(NamedTuple):
    epsilon0: float
    bracket_width: float


@dataclass
class OdeDiagnostics:
    bisection_width: float
    x_T: float
    saddle_distance: float
    uv_distance: float = 0.0
    tail_estimate: float = 0.0
    tail_warning: bool = False
    alpha_nested: Optional[float] = None
    one_minus_alpha: Optional[float] = None


@dataclass(eq=False)
class OdeSolution:
    """
    Saddle orbit sampled on the uniform grid ``x`` of [0, x_T].

    ``alpha``, ``beta_p`` and ``beta_u`` stay None until
    :func:`compute_alpha` and :func:`compute_weight` fill them.
    """
    lam: float
    epsilon0: float
    x: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)
    dense: Callable = field(repr=False)
    diagnostics: OdeDiagnostics
    alpha: Optional[float] = None
    beta_p: Optional[float] = None
    beta_u: Optional[float] = None

    @property
    def x_T(self) -> float:
        return float(self.x[-1])

    @property
    def F(self) -> np.ndarray:
        return self.U * self.V

    @property
    def G(self) -> np.ndarray:
        return (1 - self.U) * self.W

    @property
    def trajectory(self) -> List[TrajectoryPoint]:
        return [TrajectoryPoint(float(x), float(u), float(v), float(w))
                for x, u, v, w in zip(self.x, self.U, self.V, self.W)]

    @property
    def beta(self) -> Optional[float]:
        if self.beta_p is None or self.beta_u is None:
            return None
        return self.beta_p + self.beta_u

    def _half_line(self, x: np.ndarray):
        """(U, V, W) for x >= 0, saddle asymptotics beyond x_T"""
        inside = x <= self.x_T
        U = np.interp(x, self.x, self.U)
        V = np.interp(x, self.x, self.V)
        W = np.interp(x, self.x, self.W)
        if not np.all(inside):
            tau = x[~inside] - self.x_T
            # stable modes at (1, 1, 0): 1-U and 1-V at rate 1, W at lam
            U[~inside] = 1 - (1 - self.U[-1]) * np.exp(-tau)
            V[~inside] = 1 - (1 - self.V[-1]) * np.exp(-tau)
            W[~inside] = self.W[-1] * np.exp(-self.lam * tau)
        return U, V, W

    def profile(self, x) -> Tuple[np.ndarray, ...]:
        """
        Evaluate the full-line solution
        :param x: real or array of reals
        :return: arrays (F, G, V, W) at x
        """
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        U, V, W = self._half_line(np.abs(x))
        F, G = U * V, (1 - U) * W
        negative = x < 0
        F[negative], G[negative] = G[negative], F[negative].copy()
        V[negative], W[negative] = W[negative], V[negative].copy()
        return F, G, V, W

    def cdf_x(self, x) -> np.ndarray:
        """Law of the planted message X, P[X < x] = F(x)"""
        return self.profile(x)[0]

    def cdf_y(self, x) -> np.ndarray:
        """Law of Y = min(eta - X, X'), P[Y < x] = 1 - (1 - F(x)) W(x)"""
        F, _, _, W = self.profile(x)
        return 1 - (1 - F) * W


def _derivatives(U, V, W, lam: float):
    dU = -lam * U * (1 - U) + (1 - U * V) * (1 - (1 - U) * W)
    dV = lam * V * (1 - U)
    dW = -lam * W * U
    return dU, dV, dW


def rhs(point: TrajectoryPoint, lam: float) -> Tuple[float, float, float]:
    """Right-hand side of the reduced system at a point"""
    return _derivatives(point.U, point.V, point.W, lam)


def _u_event(x, y, lam):
    return y[0] - 1


def _v_event(x, y, lam):
    return y[1] - 1


for _event in (_u_event, _v_event):
    _event.terminal = True
    _event.direction = 1


def _check_lambda(lam: float) -> None:
    if not np.isfinite(lam) or lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam!r}")


def integrate(lam: float, epsilon: float, x_max: float, dense: bool = False,
              t_eval: Optional[np.ndarray] = None,
              rtol: Optional[float] = None):
    """
    Integrate from U = 1/2, V = W = epsilon until U or V crosses 1 or x_max
    :param lam: planted rate
    :param epsilon: initial value of V and W
    :param x_max: end of the integration interval
    :param dense: keep the dense interpolant in ``sol``
    :param t_eval: optional output grid
    :param rtol: relative tolerance, defaults to ode.rtol
    :return: the scipy integration result, events in ``t_events``
    :raises NumericalFailureError: if the step size underflows
    """
    rtol = config.get_float('ode', 'rtol') if rtol is None else rtol
    atol = config.get_float('ode', 'atol')
    if t_eval is not None:
        t_eval = t_eval[t_eval <= x_max]
    result = solve_ivp(
        lambda x, y, lam: _derivatives(y[0], y[1], y[2], lam),
        (0.0, x_max), [0.5, epsilon, epsilon], method='DOP853',
        rtol=rtol, atol=atol, events=(_u_event, _v_event), args=(lam,),
        dense_output=dense, t_eval=t_eval)
    if result.status == -1:
        raise NumericalFailureError(result.message, float(result.t[-1]),
                                    result.y[:, -1])
    return result


def _escape_time_at_zero(lam: float) -> float:
    # V = W = 0 leaves U' = 1 - lam U (1 - U), integrated in closed form
    a = math.sqrt((1 - lam / 4) / lam)
    return math.atan(1 / (2 * a)) / (lam * a)


def integrate_classify(lam: float, epsilon: float, x_max: float,
                       rtol: Optional[float] = None) -> BasinClass:
    """
    Classify the trajectory started at epsilon by its first crossing.

    :param lam: planted rate
    :param epsilon: initial value in [0, 1]
    :param x_max: integration horizon
    :param rtol: relative tolerance of the integrator
    :return: EscapedV, EscapedU or Undetermined at x_max
    :raises ParameterError: for invalid arguments
    :raises NumericalFailureError: if the integrator fails
    """
    _check_lambda(lam)
    if not 0 <= epsilon <= 1:
        raise ParameterError(f"epsilon must lie in [0, 1], got {epsilon!r}")
    if not x_max > 0:
        raise ParameterError(f"x_max must be positive, got {x_max!r}")
    if epsilon == 1:
        return BasinClass(BasinKind.ESCAPED_V, x_hit=0.0)
    if epsilon == 0 and lam < LAMBDA_CRITICAL:
        x_hit = _escape_time_at_zero(lam)
        if x_hit <= x_max:
            return BasinClass(BasinKind.ESCAPED_U, x_hit=x_hit)
    result = integrate(lam, epsilon, x_max, rtol=rtol)
    u_hits, v_hits = result.t_events
    if len(u_hits) and (not len(v_hits) or u_hits[0] <= v_hits[0]):
        return BasinClass(BasinKind.ESCAPED_U, x_hit=float(u_hits[0]))
    if len(v_hits):
        return BasinClass(BasinKind.ESCAPED_V, x_hit=float(v_hits[0]))
    final = result.y[:, -1]
    return BasinClass(
        BasinKind.UNDETERMINED, x_max=x_max,
        final_point=TrajectoryPoint(float(result.t[-1]), *map(float, final)))


def _x_max_schedule(lam: float) -> Iterator[float]:
    x_max = (config.get_float('ode', 'x_max_scale') / lam
             + config.get_float('ode', 'x_max_offset'))
    cap = config.get_float('ode', 'x_max_cap')
    while x_max < cap:
        yield x_max
        x_max *= 2
    yield cap


def _classify_resolved(lam: float, epsilon: float,
                       rtol: Optional[float]) -> BasinClass:
    """Classify, doubling x_max while the answer is Undetermined"""
    basin = None
    for x_max in _x_max_schedule(lam):
        basin = integrate_classify(lam, epsilon, x_max, rtol=rtol)
        if basin.kind != BasinKind.UNDETERMINED:
            break
    return basin


def scan_basins(lam: float, epsilons: Sequence[float],
                rtol: Optional[float] = None) -> List[BasinClass]:
    """Classify every eps of a grid"""
    return [_classify_resolved(lam, float(eps), rtol) for eps in epsilons]


def find_epsilon0(lam: float, rtol: Optional[float] = None) -> Shooting:
    """
    Bisect on eps between the U basin [0, eps0) and the V basin (eps0, 1].

    :param lam: planted rate in (0, 4)
    :param rtol: relative tolerance of the integrator
    :return: (eps0, bracket width)
    :raises NoSolutionError: if lam >= 4
    :raises ContractError: if the bracket ends classify alike
    """
    _check_lambda(lam)
    if lam >= LAMBDA_CRITICAL:
        raise NoSolutionError(lam)
    lo, hi = 0.0, 1.0
    lo_kind = _classify_resolved(lam, lo, rtol).kind
    hi_kind = _classify_resolved(lam, hi, rtol).kind
    if lo_kind != BasinKind.ESCAPED_U or hi_kind != BasinKind.ESCAPED_V:
        raise ContractError(
            f"Bracket ends classify as {lo_kind.value} and {hi_kind.value}")
    resolution = 4 * np.finfo(np.float64).eps
    shots = 0
    while hi - lo > resolution * hi:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        basin = _classify_resolved(lam, mid, rtol)
        shots += 1
        logger.debug("lambda=%g shot eps=%.17g -> %s", lam, mid,
                     basin.kind.value)
        match basin.kind:
            case BasinKind.ESCAPED_V:
                hi = mid
            case BasinKind.ESCAPED_U:
                lo = mid
            case BasinKind.UNDETERMINED:
                # still at the saddle at the x_max cap, mid is on the orbit
                lo = hi = mid
    shooting = Shooting(0.5 * (lo + hi), hi - lo)
    logger.info("lambda=%g: eps0=%.17g after %d shots (bracket %.3g)", lam,
                shooting.epsilon0, shots, shooting.bracket_width)
    return shooting


def reconstruct_solution(lam: float, epsilon0: float,
                         bracket_width: float = 0.0,
                         rtol: Optional[float] = None) -> OdeSolution:
    """
    Follow the eps0 trajectory as long as it can be trusted.

    The trajectories at the two bracket ends are integrated alongside; the
    grid is cut at the first point that is within ode.saddle_tolerance of
    the saddle, or at the last point where the two bracket trajectories
    still agree to ode.divergence_ratio times the saddle distance.

    :param lam: planted rate in (0, 4)
    :param epsilon0: result of :func:`find_epsilon0`
    :param bracket_width: width of the final bisection bracket
    :param rtol: relative tolerance of the integrator
    :return: the solution on [0, x_T], alpha and beta not yet computed
    :raises PrecisionError: if the trusted part ends far from the saddle
    """
    _check_lambda(lam)
    if lam >= LAMBDA_CRITICAL:
        raise NoSolutionError(lam)
    step = config.get_float('ode', 'grid_step')
    half_width = max(bracket_width, 4 * np.finfo(np.float64).eps
                     * epsilon0) / 2
    x_max = next(_x_max_schedule(lam))
    runs = [integrate(lam, eps, x_max, dense=True, rtol=rtol)
            for eps in (epsilon0, epsilon0 - half_width,
                        epsilon0 + half_width)]
    x_end = min(float(run.t[-1]) for run in runs)
    grid = step * np.arange(int(math.floor(x_end / step)) + 1)
    middle, low, high = (run.sol(grid) for run in runs)
    distance = np.max(np.abs(middle - np.array([[1.0], [1.0], [0.0]])),
                      axis=0)
    divergence = np.max(np.abs(high - low), axis=0)
    ratio = config.get_float('ode', 'divergence_ratio')
    untrusted = np.flatnonzero(divergence > ratio * distance)
    last = untrusted[0] - 1 if untrusted.size else grid.size - 1
    arrived = np.flatnonzero(
        distance < config.get_float('ode', 'saddle_tolerance'))
    if arrived.size and arrived[0] <= last:
        last = arrived[0]
    x_reachable = float(grid[max(last, 0)])
    # W decays at rate lam only and its tail is exact, so small lam may
    # stop with W far from 0; only U and V have to be near the saddle
    uv_distance = np.max(np.abs(middle[:2] - 1.0), axis=0)
    if (last < 1
            or uv_distance[last] > config.get_float('ode', 'saddle_reach')):
        raise PrecisionError(
            f"lambda={lam}: trajectory leaves with U, V at distance "
            f"{uv_distance[max(last, 0)]:.3g} from the saddle", x_reachable)
    keep = slice(0, last + 1)
    logger.info("lambda=%g: x_T=%g, saddle distance %.3g (U, V %.3g)", lam,
                x_reachable, distance[last], uv_distance[last])
    return OdeSolution(
        lam=lam, epsilon0=epsilon0, x=grid[keep],
        U=middle[0, keep].copy(), V=middle[1, keep].copy(),
        W=middle[2, keep].copy(), dense=runs[0].sol,
        diagnostics=OdeDiagnostics(
            bisection_width=bracket_width, x_T=x_reachable,
            saddle_distance=float(distance[last]),
            uv_distance=float(uv_distance[last])))


def _alpha_integrand(solution: OdeSolution) -> Callable[[float], float]:
    def integrand(x):
        U, V, W = solution.dense(x)
        F, G = U * V, (1 - U) * W
        return (1 - F) * (1 - G) * V * W
    return integrand


def compute_alpha(solution: OdeSolution,
                  tolerance: Optional[float] = None) -> float:
    """
    alpha = 1 - 2 int_0^inf (1 - F)(1 - G) V W dx

    The integral runs adaptively over [0, x_T]; beyond x_T the integrand
    decays at rate 1 + lam and is added in closed form.

    Close to lam = 4 the integral is of order eps0 squared and 1 - alpha
    drops below the spacing of doubles near 1. The diagnostics keep
    ``one_minus_alpha`` at full relative precision and alpha is held at
    the largest double below 1.

    :param solution: reconstructed solution, alpha is stored on it
    :param tolerance: absolute and relative quadrature tolerance
    :return: alpha
    """
    if tolerance is None:
        tolerance = config.get_float('ode', 'quad_tolerance')
    integrand = _alpha_integrand(solution)
    integral, _ = quad(integrand, 0.0, solution.x_T, epsabs=tolerance,
                       epsrel=tolerance, limit=2000)
    tail = float(integrand(solution.x_T)) / (1 + solution.lam)
    diagnostics = solution.diagnostics
    diagnostics.tail_estimate = tail
    diagnostics.tail_warning = bool(
        tail > config.get_float('ode', 'tail_warning') * integral)
    if diagnostics.tail_warning:
        logger.warning("lambda=%g: alpha tail correction %.3g exceeds the "
                       "warning level", solution.lam, tail)
    one_minus_alpha = 2 * (integral + tail)
    diagnostics.one_minus_alpha = one_minus_alpha
    solution.alpha = min(1 - one_minus_alpha, _BELOW_ONE)
    return solution.alpha


def _trapezoid_weights(size: int, step: float) -> np.ndarray:
    weights = np.full(size, step)
    weights[0] = weights[-1] = step / 2
    return weights


def compute_weight(solution: OdeSolution,
                   lam: Optional[float] = None) -> Tuple[float, float]:
    """
    Limiting weight per vertex split into planted and un-planted edges.

    Both components are nested integrals over the full-line profile,

        beta_p = int f(x) int_0^inf lam t e^{-lam t} (1 - F(t - x)) dt dx
        beta_u = int g(y) int_0^inf t (1 - F(t - y)) W(t - y) dt dy

    with f = (1 - F)(1 - G) V the density of X and
    g = (1 - F)((1 - G) V W - lam (G - W)) the density of Y. On a uniform
    grid the inner integrals of all outer points are one discrete
    correlation. The same machinery gives ``alpha_nested`` =
    P[eta < X + X'], a cross-check of :func:`compute_alpha`.

    :param solution: reconstructed solution, beta_p and beta_u are stored
    :param lam: planted rate, defaults to the solution's
    :return: (beta_p, beta_u)
    """
    lam = solution.lam if lam is None else lam
    step = config.get_float('ode', 'grid_step')
    outer = int(round(config.get_float('ode', 'outer_cutoff') / step))
    inner = outer + int(round(config.get_float('ode', 'tail_cutoff') / step))
    s = step * np.arange(-outer, inner + outer + 1)
    F, G, V, W = solution.profile(s)
    x = slice(0, 2 * outer + 1)
    density_x = (1 - F[x]) * (1 - G[x]) * V[x]
    density_y = (1 - F[x]) * ((1 - G[x]) * V[x] * W[x]
                              - lam * (G[x] - W[x]))
    t = step * np.arange(inner + 1)
    t_weights = _trapezoid_weights(t.size, step)
    x_weights = _trapezoid_weights(2 * outer + 1, step)

    def nested(density, survival, kernel):
        # entry m of the correlation is the inner integral at x = (outer-m) h
        inner_values = np.correlate(survival, kernel * t_weights,
                                    'valid')[::-1]
        return float(np.sum(x_weights * density * inner_values))

    beta_p = nested(density_x, 1 - F, lam * t * np.exp(-lam * t))
    beta_u = nested(density_y, (1 - F) * W, t)
    solution.diagnostics.alpha_nested = nested(
        density_x, 1 - F, lam * np.exp(-lam * t))
    solution.beta_p, solution.beta_u = beta_p, beta_u
    logger.info("lambda=%g: beta_p=%.10g beta_u=%.10g", lam, beta_p, beta_u)
    return beta_p, beta_u


def solve_ode(lam: float,
              rtol: Optional[float] = None) -> Union[OdeSolution, NoSolution]:
    """
    Full pipeline: shoot, reconstruct, integrate alpha and beta
    :param lam: planted rate
    :param rtol: relative tolerance of the integrator
    :return: the solution, or NoSolution for lam >= 4
    """
    _check_lambda(lam)
    if lam >= LAMBDA_CRITICAL:
        return NoSolution(lam)
    epsilon0, width = find_epsilon0(lam, rtol=rtol)
    solution = reconstruct_solution(lam, epsilon0, width, rtol=rtol)
    compute_alpha(solution)
    compute_weight(solution)
    return solution
