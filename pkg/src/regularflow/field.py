"""Euler velocity field and densities reconstructed along characteristics.

On a regular scenario the map x -> y(t, x) is strictly increasing, so each
image point carries exactly one particle and the velocity field
u(t, y(t, x)) = dy/dt is single-valued.  Two densities are maintained side by
side: the composition rho0(x(t, y)), which solves the transport equation, and
the pushforward rho0(x) / |dy/dx|, which solves the continuity equation and
conserves mass.  Both are reported with their own residuals rather than
picking one.

Field evaluation refuses times at or beyond the first detected collision:
past that point the flow is no longer invertible and every quantity here
loses its meaning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import quadrature, simulator
from .errors import (
    HypothesisViolated,
    InvalidParameter,
    NotRegular,
    OutOfImage,
)
from .regularity import (
    COLLISION,
    EQUALITY_BAND,
    INCONCLUSIVE,
    REGULAR,
    Verdict,
    _minimize_pair_margin,
)
from .scenario import (
    EULER_GLOBAL,
    OneGap,
    Smooth1D,
    TwoGap,
    central_difference,
)

INVERT_TOL = 1e-12
JACOBIAN_FLOOR = 1e-14
STENCIL_FRAC = 5e-4
_CACHE_NODES = 2049


def _scalar_force(force):
    if isinstance(force, Smooth1D):
        return force.f

    def f(y):
        return float(np.asarray(force(y), dtype=float).reshape(-1)[0])

    return f


@dataclass
class FieldGrid:
    """Field samples along the deformed particle grid.

    Row block k holds the image points y(times[k], x_i) of the initial grid,
    the velocity and both densities there, and pointwise PDE residuals from
    local central-difference stencils (nan where the stencil would leave the
    image or the prepared time range).
    """

    times: List[float]
    y: List[np.ndarray]
    u: List[np.ndarray]
    rho_transport: List[np.ndarray]
    rho_pushforward: List[np.ndarray]
    residual_euler: List[np.ndarray]
    residual_continuity: List[np.ndarray]

    def mass(self, k):
        """Integral of the pushforward density over the image at times[k]."""
        return float(np.trapezoid(self.rho_pushforward[k], self.y[k]))


@dataclass
class BoundaryTrack:
    """Trajectories of the two material endpoints of a 1D region."""

    times: np.ndarray
    L: np.ndarray
    R: np.ndarray


class FlowMap:
    """Queryable 1D flow (t, x) -> (y, v) with regularity gating.

    Gap and constant forces evaluate in closed form; smooth forces combine a
    dense cached ensemble (for vectorized grid queries, Jacobians and
    bracketing) with per-label high-accuracy integrations for bisection
    probes.  ``ensure_regular`` refuses times at or past the first collision
    detected on [0, horizon].
    """

    def __init__(self, scenario, horizon, cache_nodes=_CACHE_NODES):
        if scenario.dim != 1:
            raise InvalidParameter("FlowMap supports one-dimensional scenarios")
        horizon = float(horizon)
        if not math.isfinite(horizon) or horizon <= 0.0:
            raise InvalidParameter("FlowMap needs a finite positive horizon")
        self.scenario = scenario
        self.horizon = horizon
        self.x_lo = scenario.domain.lower[0]
        self.x_hi = scenario.domain.upper[0]
        force = scenario.force
        if isinstance(force, (OneGap, TwoGap)):
            self.mode = "gap"
            self.const = None
        else:
            self.const = simulator._constant_force_value(scenario, horizon)
            self.mode = "const" if self.const is not None else "numeric"
        self._gap_cache = {}
        self._ivp_cache = {}
        self._dense = None
        self._t_cache = {}
        self._cache_nodes = cache_nodes
        self._regular_until = None

    # -- regularity gate ----------------------------------------------------

    def regular_until(self):
        """First detected collision time on [0, horizon], or +inf."""
        if self._regular_until is None:
            report = simulator.detect_collisions_1d(self.scenario,
                                                    horizon=self.horizon)
            self._regular_until = report.t_first if report.found else math.inf
        return self._regular_until

    def ensure_regular(self, t):
        t = float(t)
        if t < 0.0:
            raise InvalidParameter("time must be nonnegative")
        if t > self.horizon * (1.0 + 1e-12):
            raise InvalidParameter(
                f"time {t} exceeds the prepared horizon {self.horizon}")
        bound = self.regular_until()
        if t >= bound:
            raise NotRegular(
                f"the flow collides at t = {bound}; the field is undefined "
                f"at t = {t}")

    # -- pointwise states ---------------------------------------------------

    def state(self, t, x):
        t = float(t)
        x = float(x)
        if self.mode == "gap":
            traj = self._gap_cache.get(x)
            if traj is None:
                traj = simulator.propagate_piecewise_1d(self.scenario, x)
                if len(self._gap_cache) > 200000:
                    self._gap_cache.clear()
                self._gap_cache[x] = traj
            return traj.position(t), traj.velocity(t)
        if self.mode == "const":
            v0 = float(self.scenario.init.velocity(x))
            m = float(self.scenario.init.mass(x))
            a = self.const / m
            return x + v0 * t + 0.5 * a * t * t, v0 + a * t
        sol = self._ivp_cache.get(x)
        if sol is None:
            sol = self._integrate_single(x)
            if len(self._ivp_cache) > 20000:
                self._ivp_cache.clear()
            self._ivp_cache[x] = sol
        y, v = sol(t)
        return float(y), float(v)

    def position(self, t, x):
        return self.state(t, x)[0]

    def velocity(self, t, x):
        return self.state(t, x)[1]

    def boundaries(self, t):
        return self.position(t, self.x_lo), self.position(t, self.x_hi)

    def _integrate_single(self, x):
        force = self.scenario.force
        f = force.f if isinstance(force, Smooth1D) else force
        m = float(self.scenario.init.mass(x))

        def rhs(t, s):
            return (s[1], float(f(s[0])) / m)

        v0 = float(self.scenario.init.velocity(x))
        sol = solve_ivp(rhs, (0.0, self.horizon), (x, v0), method="DOP853",
                        rtol=simulator.RTOL, atol=simulator.ATOL,
                        dense_output=True)
        if not sol.success:
            raise InvalidParameter(
                f"single-particle integration failed at label {x}: {sol.message}")
        return sol.sol

    # -- dense cache for smooth forces --------------------------------------

    def _dense_flow(self):
        if self._dense is None:
            xs = np.linspace(self.x_lo, self.x_hi, self._cache_nodes)
            self._dense = simulator.NumericFlow1D(
                self.scenario, xs, self.horizon)
        return self._dense

    def _splines(self, t):
        t = float(t)
        hit = self._t_cache.get(t)
        if hit is not None:
            return hit
        dense = self._dense_flow()
        ys, vs = dense.states(t)
        spl_y = CubicSpline(dense.xs, ys)
        spl_v = CubicSpline(dense.xs, vs)
        hit = (spl_y, spl_v)
        if len(self._t_cache) > 4096:
            self._t_cache.clear()
        self._t_cache[t] = hit
        return hit

    def jacobian(self, t, x, step=None):
        """dy/dx at fixed t, by the cached spline for smooth forces and by a
        narrow central difference of the closed form otherwise."""
        if self.mode == "numeric":
            spl_y, _ = self._splines(t)
            return float(spl_y(float(x), 1))
        h = step or max(1e-6 * (self.x_hi - self.x_lo), 1e-9)
        xc = min(max(float(x), self.x_lo + h), self.x_hi - h)
        return (self.position(t, xc + h) - self.position(t, xc - h)) / (2.0 * h)

    def grid_states(self, t, xs):
        """Vectorized (y, v) over an array of labels at one time."""
        if self.mode == "numeric":
            spl_y, spl_v = self._splines(t)
            return spl_y(xs), spl_v(xs)
        out_y = np.empty(len(xs))
        out_v = np.empty(len(xs))
        for i, x in enumerate(xs):
            out_y[i], out_v[i] = self.state(t, float(x))
        return out_y, out_v

    def bracket(self, t, y):
        """Label interval bracketing the preimage of y at time t; widened by
        one cache node each side to absorb integration-accuracy mismatch."""
        if self.mode == "numeric":
            dense = self._dense_flow()
            ys, _ = dense.states(t)
            k = int(np.searchsorted(ys, y))
            lo = max(k - 2, 0)
            hi = min(k + 1, len(ys) - 1)
            return float(dense.xs[lo]), float(dense.xs[hi])
        return self.x_lo, self.x_hi


def _flow_for(scenario, t, flow):
    if flow is not None:
        return flow
    return FlowMap(scenario, horizon=max(float(t), 1e-9) * (1.0 + 1e-9))


def invert_flow_1d(scenario, t, y, flow=None, tol=INVERT_TOL):
    """Label x with y(t, x) = y, by monotone bisection.

    Smooth forces first solve on the cached spline and polish the root with
    Newton steps against the true flow, falling back to plain bisection if
    the polish stalls.  Raises OutOfImage when y lies outside [L(t), R(t)]
    and NotRegular when the bracketing probes are not increasing (the flow
    has folded) or t is past the first detected collision.
    """
    t = float(t)
    y = float(y)
    flow = _flow_for(scenario, t, flow)
    if t > 0.0:
        flow.ensure_regular(t)
    L, R = flow.boundaries(t)
    slack = 1e-9 * max(1.0, R - L)
    if y < L - slack or y > R + slack:
        raise OutOfImage(
            f"y = {y} is outside the image [{L}, {R}] at t = {t}")
    if R < L - slack:
        raise NotRegular("the material endpoints have crossed")
    y = min(max(y, L), R)
    lo, hi = flow.bracket(t, y)
    y_lo = flow.position(t, lo)
    y_hi = flow.position(t, hi)
    if y_lo > y_hi + slack:
        raise NotRegular(
            f"flow is not increasing across [{lo}, {hi}] at t = {t}")
    if y <= y_lo:
        return lo
    if y >= y_hi:
        return hi
    x_hat = _polished_spline_root(flow, t, y, lo, hi)
    if x_hat is not None:
        return x_hat
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if flow.position(t, mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _polished_spline_root(flow, t, y, lo, hi, max_newton=4):
    """Spline presolve plus Newton polish against the true flow; None when
    not applicable or when the polish leaves the bracket."""
    if flow.mode != "numeric":
        return None
    spl_y, _ = flow._splines(t)
    f_lo = float(spl_y(lo)) - y
    f_hi = float(spl_y(hi)) - y
    if not (f_lo <= 0.0 <= f_hi):
        return None
    x = brentq(lambda xx: float(spl_y(xx)) - y, lo, hi, xtol=1e-13)
    pad = 1e-7 * max(hi - lo, 1.0)
    for _ in range(max_newton):
        err = flow.position(t, x) - y
        if abs(err) <= 1e-11 * max(1.0, abs(y)):
            return min(max(x, flow.x_lo), flow.x_hi)
        jac = float(spl_y(x, 1))
        if not math.isfinite(jac) or jac <= JACOBIAN_FLOOR:
            return None
        x_new = x - err / jac
        if not lo - pad <= x_new <= hi + pad:
            return None
        x = min(max(x_new, flow.x_lo), flow.x_hi)
    return None


def reconstruct_velocity(scenario, t, y, flow=None):
    """u(t, y): the velocity of the unique particle sitting at y at time t."""
    flow = _flow_for(scenario, t, flow)
    x = invert_flow_1d(scenario, t, y, flow=flow)
    return flow.velocity(t, x)


def _density0(scenario):
    rho0 = scenario.init.density
    if rho0 is None:
        return lambda x: 1.0
    return rho0


def _rho_pushforward_at(scenario, flow, t, x):
    rho0 = _density0(scenario)
    jac = abs(flow.jacobian(t, x))
    return float(rho0(x)) / max(jac, JACOBIAN_FLOOR)


#############################################################
# Window residuals
#############################################################


def _window_grids(t_window, y_window, n_t, n_y):
    t0, t1 = map(float, t_window)
    y0, y1 = map(float, y_window)
    if not (t1 > t0 >= 0.0):
        raise InvalidParameter("time window must satisfy 0 <= t0 < t1")
    if not y1 > y0:
        raise InvalidParameter("space window must satisfy y0 < y1")
    if n_t < 3 or n_y < 3:
        raise InvalidParameter("windows need at least 3 nodes per axis")
    return np.linspace(t0, t1, n_t), np.linspace(y0, y1, n_y)


def euler_residual(scenario, t_window, y_window, n_t=9, n_y=9, flow=None):
    """Max |du/dt + u du/dy - F(y)| on the interior of a space-time window.

    The field u is reconstructed pointwise by flow inversion; derivatives are
    second-order central differences on the window grid, so the returned
    value decays like h^2 on smooth regular scenarios.  Returns the maximum
    and its (t, y) location.
    """
    ts, ys = _window_grids(t_window, y_window, n_t, n_y)
    flow = _flow_for(scenario, ts[-1], flow)
    flow.ensure_regular(ts[-1])
    f = _scalar_force(scenario.force)
    u = np.empty((len(ts), len(ys)))
    for j, t in enumerate(ts):
        for i, y in enumerate(ys):
            u[j, i] = reconstruct_velocity(scenario, float(t), float(y),
                                           flow=flow)
    h_t = ts[1] - ts[0]
    h_y = ys[1] - ys[0]
    du_dt = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2.0 * h_t)
    du_dy = (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * h_y)
    fy = np.array([float(f(float(y))) for y in ys[1:-1]])
    res = du_dt + u[1:-1, 1:-1] * du_dy - fy[None, :]
    k = int(np.argmax(np.abs(res)))
    j, i = divmod(k, res.shape[1])
    return float(np.abs(res[j, i])), (float(ts[j + 1]), float(ys[i + 1]))


def continuity_residual(scenario, t_window, y_window, n_t=9, n_y=9, flow=None):
    """Central-difference defects of both density laws on a window.

    Returns (max transport defect, max continuity defect): the transport form
    d rho/dt + u d rho/dy for the composition density and the divergence form
    d rho/dt + d(u rho)/dy for the pushforward density.
    """
    ts, ys = _window_grids(t_window, y_window, n_t, n_y)
    flow = _flow_for(scenario, ts[-1], flow)
    flow.ensure_regular(ts[-1])
    rho0 = _density0(scenario)
    u = np.empty((len(ts), len(ys)))
    rho_t = np.empty_like(u)
    rho_p = np.empty_like(u)
    for j, t in enumerate(ts):
        for i, y in enumerate(ys):
            x = invert_flow_1d(scenario, float(t), float(y), flow=flow)
            u[j, i] = flow.velocity(float(t), x)
            rho_t[j, i] = float(rho0(x))
            rho_p[j, i] = _rho_pushforward_at(scenario, flow, float(t), x)
    h_t = ts[1] - ts[0]
    h_y = ys[1] - ys[0]

    def d_dt(a):
        return (a[2:, 1:-1] - a[:-2, 1:-1]) / (2.0 * h_t)

    def d_dy(a):
        return (a[1:-1, 2:] - a[1:-1, :-2]) / (2.0 * h_y)

    transport = d_dt(rho_t) + u[1:-1, 1:-1] * d_dy(rho_t)
    continuity = d_dt(rho_p) + d_dy(u * rho_p)
    return float(np.max(np.abs(transport))), float(np.max(np.abs(continuity)))


#############################################################
# Boundary tracking and field sampling
#############################################################


def track_boundary(scenario, horizon, n_out=257, flow=None):
    """Newton trajectories of the material endpoints y(t, x_lo), y(t, x_hi)."""
    if scenario.dim != 1:
        raise InvalidParameter("track_boundary needs a one-dimensional scenario")
    horizon = float(horizon)
    flow = flow or FlowMap(scenario, horizon=horizon)
    times = np.linspace(0.0, horizon, n_out)
    lo = np.array([flow.position(float(t), flow.x_lo) for t in times])
    hi = np.array([flow.position(float(t), flow.x_hi) for t in times])
    return BoundaryTrack(times=times, L=lo, R=hi)


class _StencilEval:
    """Cheap u and pushforward-density evaluator for residual stencils.

    Smooth forces answer from per-time splines over the dense cache; gap and
    constant forces invert the closed form directly.  Queries outside the
    image or the regular range come back as nan.
    """

    def __init__(self, scenario, flow):
        self.scenario = scenario
        self.flow = flow
        self.rho0 = _density0(scenario)

    def _locate(self, t, y):
        flow = self.flow
        try:
            flow.ensure_regular(t)
            if flow.mode == "numeric":
                spl_y, spl_v = flow._splines(t)
                y_lo = float(spl_y(flow.x_lo))
                y_hi = float(spl_y(flow.x_hi))
                if not y_lo <= y <= y_hi:
                    return None
                x = brentq(lambda xx: float(spl_y(xx)) - y,
                           flow.x_lo, flow.x_hi, xtol=1e-13)
                return x, float(spl_v(x)), float(spl_y(x, 1))
            x = invert_flow_1d(self.scenario, t, y, flow=flow)
            return x, flow.velocity(t, x), flow.jacobian(t, x)
        except (OutOfImage, NotRegular, InvalidParameter):
            return None

    def u_at(self, t, y):
        hit = self._locate(t, y)
        return math.nan if hit is None else hit[1]

    def u_rho_at(self, t, y):
        hit = self._locate(t, y)
        if hit is None:
            return math.nan, math.nan
        x, v, jac = hit
        rho = float(self.rho0(x)) / max(abs(jac), JACOBIAN_FLOOR)
        return v, rho


def sample_field(scenario, times=None, horizon=None, n_times=9, flow=None):
    """FieldGrid along the deformed initial grid at the requested times.

    The y-grid at each time is the image of the scenario's label grid, where
    u and both densities are direct particle data; the residual columns use
    local central-difference stencils around each sample (nan where a stencil
    leg leaves the image or t = 0 admits no centered difference).
    """
    if scenario.dim != 1:
        raise InvalidParameter("sample_field needs a one-dimensional scenario")
    if times is None:
        if horizon is None:
            horizon = scenario.horizon
        if not math.isfinite(horizon):
            raise InvalidParameter(
                "sample_field needs explicit times or a finite horizon")
        times = np.linspace(0.0, float(horizon), n_times)
    times = np.asarray(sorted(float(t) for t in times), dtype=float)
    if times[0] < 0.0:
        raise InvalidParameter("sample times must be nonnegative")
    t_max = float(times[-1])
    dt = STENCIL_FRAC * max(1.0, t_max)
    if flow is None:
        flow = FlowMap(scenario, horizon=(t_max + 2.0 * dt) * (1.0 + 1e-9))
    flow.ensure_regular(t_max)
    rho0 = _density0(scenario)
    xs = scenario.grid_1d()
    rho0_vals = np.array([float(rho0(float(x))) for x in xs])
    ev = _StencilEval(scenario, flow)
    f = _scalar_force(scenario.force)

    grid = FieldGrid(times=[], y=[], u=[], rho_transport=[],
                     rho_pushforward=[], residual_euler=[],
                     residual_continuity=[])
    for t in times:
        t = float(t)
        ys, vs = flow.grid_states(t, xs)
        ys = np.asarray(ys, dtype=float)
        vs = np.asarray(vs, dtype=float)
        jac = np.array([flow.jacobian(t, float(x)) for x in xs])
        rho_p = rho0_vals / np.maximum(np.abs(jac), JACOBIAN_FLOOR)
        span = max(float(ys[-1] - ys[0]), 1.0)
        dy = STENCIL_FRAC * span
        res_e = np.full(len(xs), math.nan)
        res_c = np.full(len(xs), math.nan)
        if t - dt >= 0.0:
            for i, y in enumerate(ys):
                y = float(y)
                u_tp, rho_tp = ev.u_rho_at(t + dt, y)
                u_tm, rho_tm = ev.u_rho_at(t - dt, y)
                u_yp, rho_yp = ev.u_rho_at(t, y + dy)
                u_ym, rho_ym = ev.u_rho_at(t, y - dy)
                du_dt = (u_tp - u_tm) / (2.0 * dt)
                du_dy = (u_yp - u_ym) / (2.0 * dy)
                res_e[i] = du_dt + vs[i] * du_dy - float(f(y))
                drho_dt = (rho_tp - rho_tm) / (2.0 * dt)
                dflux_dy = (u_yp * rho_yp - u_ym * rho_ym) / (2.0 * dy)
                res_c[i] = drho_dt + dflux_dy
        grid.times.append(t)
        grid.y.append(ys)
        grid.u.append(vs)
        grid.rho_transport.append(rho0_vals.copy())
        grid.rho_pushforward.append(rho_p)
        grid.residual_euler.append(res_e)
        grid.residual_continuity.append(res_c)
    return grid


def write_field_csv(grid, path):
    """Dump a FieldGrid as CSV rows ordered by time, then label."""
    with open(path, "w") as fh:
        fh.write("t,y,u,rho_transport,rho_pushforward,res_euler,res_continuity\n")
        for k, t in enumerate(grid.times):
            for i in range(len(grid.y[k])):
                fh.write(",".join(repr(float(col)) for col in (
                    t, grid.y[k][i], grid.u[k][i], grid.rho_transport[k][i],
                    grid.rho_pushforward[k][i], grid.residual_euler[k][i],
                    grid.residual_continuity[k][i])) + "\n")


#############################################################
# Global smooth solvability of the Euler equation
#############################################################


def check_euler_global(force, velocity, velocity_deriv=None, force_deriv=None,
                       cutoff=10.0, n_x=17, n_y=17):
    """Global-in-time smooth solvability of the compressible Euler system
    built from these characteristics, for unit masses on the line.

    Requires v >= 0 and F > 0 (C^2); decides on the sign of the flight-time
    derivative over the truncation [-X, X].  A Regular verdict whose worst
    margin sits against the truncation boundary is downgraded to
    Inconclusive, since the line continues past the sampled range.
    """
    X = float(cutoff)
    if not (math.isfinite(X) and X > 0.0):
        raise InvalidParameter("cutoff must be positive and finite")
    f = force if callable(force) else None
    if f is None:
        raise InvalidParameter("check_euler_global needs a callable force")
    df = force_deriv
    if df is None:
        df = force.df if isinstance(force, Smooth1D) else central_difference(f)
    dv = velocity_deriv or central_difference(velocity)
    for x in np.linspace(-X, X, 129):
        if float(velocity(float(x))) < 0.0:
            raise HypothesisViolated("initial velocity must be nonnegative",
                                     criterion=EULER_GLOBAL, witness=float(x))
    for z in np.linspace(-X, X, 257):
        if float(f(float(z))) <= 0.0:
            raise HypothesisViolated("force must be strictly positive",
                                     criterion=EULER_GLOBAL, witness=float(z))
    profile = quadrature.energy_profile(force=f, velocity=velocity,
                                        velocity_deriv=dv)
    m_one = lambda x: 1.0
    dm_zero = lambda x: 0.0

    def margin(x, y):
        return -quadrature.dT_dx_by_parts(profile, x, y, velocity, dv,
                                          m_one, dm_zero, f, df)

    rng = np.random.default_rng(912699)
    min_val, xy = _minimize_pair_margin(margin, -X, X, X, n_x, n_y, rng)
    band = EQUALITY_BAND * max(1.0, abs(min_val))
    if min_val < -band:
        return Verdict(outcome=COLLISION, criterion=EULER_GLOBAL,
                       margin=min_val,
                       witness={"x": xy[0], "y": xy[1]},
                       reason="characteristics cross; no global smooth solution")
    h_x = 2.0 * X / max(n_x - 1, 1)
    at_edge = xy[0] <= -X + h_x or xy[1] >= X - h_x
    if min_val > band and not at_edge:
        return Verdict(outcome=REGULAR, criterion=EULER_GLOBAL, margin=min_val)
    reason = ("worst margin sits against the truncation boundary"
              if at_edge and min_val > band else
              "margin inside the equality band")
    return Verdict(outcome=INCONCLUSIVE, criterion=EULER_GLOBAL,
                   margin=min_val, witness={"x": xy[0], "y": xy[1]},
                   reason=reason)
