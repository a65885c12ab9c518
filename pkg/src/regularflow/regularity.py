"""Analytic no-collision criteria.

Each checker evaluates one criterion and returns a Verdict carrying the
outcome, a signed margin (distance to the decision boundary in the
criterion's own units), a witness for collisions, and diagnostics.  Grid
quantifiers ("for all x, y") are evaluated on tensor grids, refined with
random probes near the worst point, and polished by a short pattern search.

Closed-form criteria compare exactly.  Quadrature-backed criteria report
Inconclusive inside a narrow equality band, since strict and non-strict
inequalities cannot be told apart at roundoff scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import quadrature, simulator
from .errors import (
    HypothesisViolated,
    InternalInconsistency,
    InvalidParameter,
    SingularBoundary,
    TurningPoint,
)
from .scenario import (
    Annulus,
    CENTRAL_FLIGHT,
    CONSTANT_PAIR,
    Central,
    ConstantVec,
    HALFSPACE_STEP,
    HalfSpaceStep,
    LINEAR_SPECTRUM,
    Linear,
    MONOTONE_FORCE,
    ONE_GAP_GENERAL,
    ONE_GAP_SLOPE,
    ONE_GAP_ZERO_V,
    OneGap,
    SMOOTH_GENERAL,
    SMOOTH_POSITIVE_V,
    Smooth1D,
    TWO_GAP_BOUND,
    TwoGap,
)

REGULAR = "Regular"
COLLISION = "Collision"
INCONCLUSIVE = "Inconclusive"

EQUALITY_BAND = 1e-9
TOL_PARALLEL = 1e-10
TOL_EIG = 1e-10
_MICRO = 1e-7

IFF_CRITERIA = frozenset({
    SMOOTH_POSITIVE_V,
    SMOOTH_GENERAL,
    ONE_GAP_ZERO_V,
    ONE_GAP_GENERAL,
    TWO_GAP_BOUND,
    CONSTANT_PAIR,
    HALFSPACE_STEP,
})


@dataclass
class Verdict:
    outcome: str
    criterion: str
    margin: Optional[float] = None
    witness: Optional[dict] = None
    reason: str = ""
    diagnostics: dict = field(default_factory=dict)


@dataclass
class GapDiagnostics:
    """Closed-form ingredients of the gap-force analysis."""

    D: Callable[[float], float]
    T_A: Callable[[float], float]
    T_B: Optional[Callable[[float], float]] = None
    s: Optional[Callable[[float], float]] = None
    beta: Optional[float] = None
    alpha: Optional[float] = None
    final_velocity_profile: Optional[Callable[[float], float]] = None


#############################################################
# Grid minimization helpers
#############################################################


def _minimize_pair_margin(fn, x_lo, x_hi, y_hi, n_x, n_y, rng,
                          refine=64, polish=20):
    """Minimum of fn(x, y) over x in [x_lo, x_hi], y in (x, y_hi].

    Tensor scan, then random probes around the worst cell, then a pattern
    search with halving steps.  Deterministic given the rng.
    """
    tiny = 1e-12 * max(y_hi - x_lo, 1.0)
    best_val, best_xy = math.inf, (x_lo, y_hi)
    xs = np.linspace(x_lo, x_hi, n_x)
    for x in xs:
        x = float(x)
        span = y_hi - x
        if span <= tiny:
            continue
        for j in range(1, n_y + 1):
            y = x + span * j / n_y
            val = fn(x, y)
            if val < best_val:
                best_val, best_xy = val, (x, y)
    hx = (x_hi - x_lo) / max(n_x - 1, 1)
    hy = (y_hi - x_lo) / max(n_y, 1)
    for _ in range(refine):
        x = float(np.clip(best_xy[0] + rng.uniform(-hx, hx), x_lo, x_hi))
        y = float(np.clip(best_xy[1] + rng.uniform(-hy, hy), x + tiny, y_hi))
        if y <= x:
            continue
        val = fn(x, y)
        if val < best_val:
            best_val, best_xy = val, (x, y)
    sx, sy = hx / 2, hy / 2
    for _ in range(polish):
        improved = False
        x0, y0 = best_xy
        for cand in ((x0 - sx, y0), (x0 + sx, y0), (x0, y0 - sy), (x0, y0 + sy)):
            x = float(np.clip(cand[0], x_lo, x_hi))
            y = float(np.clip(cand[1], x + tiny, y_hi))
            if y <= x:
                continue
            val = fn(x, y)
            if val < best_val:
                best_val, best_xy = val, (x, y)
                improved = True
        if not improved:
            sx, sy = sx / 2, sy / 2
    return best_val, best_xy


def _minimize_line_margin(fn, lo, hi, n, polish=20):
    """Minimum of fn(x) over [lo, hi]: grid scan plus halving pattern search."""
    xs = np.linspace(lo, hi, n)
    vals = [fn(float(x)) for x in xs]
    k = int(np.argmin(vals))
    best_val, best_x = vals[k], float(xs[k])
    step = (hi - lo) / max(n - 1, 1) / 2
    for _ in range(polish):
        improved = False
        for cand in (best_x - step, best_x + step):
            x = float(np.clip(cand, lo, hi))
            val = fn(x)
            if val < best_val:
                best_val, best_x = val, x
                improved = True
        if not improved:
            step /= 2
    return best_val, best_x


def _band_verdict(criterion, min_val, witness_xy, scale=1.0, strict=True,
                  diagnostics=None, collision_witness=None):
    """Outcome from a quadrature-backed margin minimum with equality band."""
    band = EQUALITY_BAND * max(scale, abs(min_val))
    diagnostics = diagnostics or {}
    if min_val > band:
        return Verdict(outcome=REGULAR, criterion=criterion, margin=min_val,
                       diagnostics=diagnostics)
    if min_val < -band:
        witness = collision_witness or {}
        witness.setdefault("x", witness_xy[0])
        if witness_xy[1] is not None:
            witness.setdefault("y", witness_xy[1])
        return Verdict(outcome=COLLISION, criterion=criterion, margin=min_val,
                       witness=witness, diagnostics=diagnostics)
    return Verdict(
        outcome=INCONCLUSIVE, criterion=criterion, margin=min_val,
        reason="margin inside the equality band; strict and non-strict "
               "inequalities are indistinguishable here",
        diagnostics=diagnostics,
    )


def _pair_rng(scenario, salt):
    return np.random.default_rng(912600 + salt + sum(scenario.samples))


#############################################################
# Smooth 1D criteria
#############################################################


def _require_unit_mass(scenario):
    for x in scenario.grid_1d():
        if abs(float(scenario.init.mass(float(x))) - 1.0) > 1e-12:
            raise HypothesisViolated(
                "this criterion assumes unit particle mass",
                criterion=SMOOTH_POSITIVE_V, witness=float(x))


def check_smooth_positive_v(scenario, n_x=17, n_y=17):
    """Strictly-positive-velocity criterion for a smooth 1D force.

    Flight times to every downstream point must strictly decrease in the
    particle label; equivalently the expression

        1/v(x) + (v v' - F)(x) / (2 sqrt(2)) * I(x, y),
        I = integral_x^y (H0(x) - U(z))^(-3/2) dz

    stays nonnegative.  Evaluated as -dT/dx on an (x, y) grid up to the
    scenario cutoff.
    """
    force = scenario.force
    if not isinstance(force, Smooth1D):
        raise InvalidParameter("check_smooth_positive_v needs a smooth 1D force")
    _require_unit_mass(scenario)
    v = scenario.init.velocity
    dv = scenario.init.velocity_deriv
    for x in scenario.grid_1d():
        if float(v(float(x))) <= 0.0:
            raise HypothesisViolated(
                "initial velocity must be strictly positive",
                criterion=SMOOTH_POSITIVE_V, witness=float(x))
    profile = quadrature.energy_profile(scenario)
    x_lo, x_hi = scenario.domain.lower[0], scenario.domain.upper[0]
    y_hi = scenario.y_cutoff()

    def margin(x, y):
        try:
            return -quadrature.dT_dx(profile, x, y, v, dv, force)
        except TurningPoint as exc:
            raise HypothesisViolated(
                f"a particle turns around before reaching its target: {exc}",
                criterion=SMOOTH_POSITIVE_V, witness=(x, y))
        except SingularBoundary as exc:
            raise HypothesisViolated(str(exc), criterion=SMOOTH_POSITIVE_V,
                                     witness=x)

    rng = _pair_rng(scenario, 1)
    min_val, xy = _minimize_pair_margin(margin, x_lo, x_hi, y_hi, n_x, n_y, rng)
    return _band_verdict(SMOOTH_POSITIVE_V, min_val, xy)


def check_smooth_general(scenario, n_x=17, n_y=17):
    """General smooth 1D criterion for nonnegative velocity and positive force.

    Decides on the sign of the x-derivative of the physical flight time.  For
    unit mass this equals the integration-by-parts inequality value; for
    varying mass the inequality value alone gets the wrong sign on examples
    like m(x) = 1 + x with constant force, so the mass-weighted derivative is
    the decision quantity.  The raw inequality minimum is reported in
    diagnostics.
    """
    force = scenario.force
    if not isinstance(force, Smooth1D):
        raise InvalidParameter("check_smooth_general needs a smooth 1D force")
    v = scenario.init.velocity
    dv = scenario.init.velocity_deriv
    m = scenario.init.mass
    dm = scenario.init.mass_deriv
    x_lo, x_hi = scenario.domain.lower[0], scenario.domain.upper[0]
    y_hi = scenario.y_cutoff()
    for x in scenario.grid_1d():
        if float(v(float(x))) < 0.0:
            raise HypothesisViolated("initial velocity must be nonnegative",
                                     criterion=SMOOTH_GENERAL, witness=float(x))
        if float(m(float(x))) <= 0.0:
            raise HypothesisViolated("mass must be positive",
                                     criterion=SMOOTH_GENERAL, witness=float(x))
    for z in np.linspace(x_lo, y_hi, 257):
        if float(force(float(z))) <= 0.0:
            raise HypothesisViolated("force must be positive on the reachable range",
                                     criterion=SMOOTH_GENERAL, witness=float(z))
    profile = quadrature.energy_profile(scenario)
    df = force.df
    raw_min = [math.inf]

    def margin(x, y):
        try:
            base = quadrature.dT_dx_by_parts(profile, x, y, v, dv, m, dm,
                                             force, df)
        except TurningPoint as exc:
            raise HypothesisViolated(
                f"a particle turns around before reaching its target: {exc}",
                criterion=SMOOTH_GENERAL, witness=(x, y))
        raw_min[0] = min(raw_min[0], -base)
        dmx = float(dm(x))
        if dmx == 0.0:
            return -base
        mx = float(m(x))
        t_red = quadrature.time_of_flight(profile, x, y).time
        return -(dmx / (2.0 * math.sqrt(mx)) * t_red + math.sqrt(mx) * base)

    rng = _pair_rng(scenario, 2)
    min_val, xy = _minimize_pair_margin(margin, x_lo, x_hi, y_hi, n_x, n_y, rng)
    return _band_verdict(SMOOTH_GENERAL, min_val, xy,
                         diagnostics={"inequality_min": raw_min[0]})


#############################################################
# Gap criteria (closed forms)
#############################################################


def _gap_micro_witness(force, velocity, x_star, domain_hi=1.0, delta=_MICRO):
    """Exact collision data for a micro pair at x_star under a gap force."""
    if x_star + delta <= domain_hi:
        x1, x2 = x_star, x_star + delta
    else:
        x1, x2 = x_star - delta, x_star
    seg1 = simulator._gap_segments(force, x1, float(velocity(x1)))
    seg2 = simulator._gap_segments(force, x2, float(velocity(x2)))
    t_star = max(seg1[-1][0], seg2[-1][0])
    t = simulator._pair_first_crossing(seg1, seg2, t_star if t_star > 0 else 1.0)
    if t is None:
        def at(seg, tt):
            t0, y0, v0, a = seg[-1]
            s = tt - t0
            return y0 + v0 * s + 0.5 * a * s * s, v0 + a * s

        y1, v1 = at(seg1, t_star)
        y2, v2 = at(seg2, t_star)
        if isinstance(force, OneGap):
            dvf = (float(velocity(x2)) - float(velocity(x1))
                   + (force.f1 - force.f2) * (seg2[1][0] - seg1[1][0]))
        else:
            dvf = ((force.f1 - force.f2) * (seg2[1][0] - seg1[1][0])
                   + (force.f2 - force.f3) * (seg2[2][0] - seg1[2][0])
                   + float(velocity(x2)) - float(velocity(x1)))
        gap = y2 - y1
        if gap <= 0.0:
            t = t_star
        elif dvf < 0.0:
            t = t_star + gap / (-dvf)
    if t is None:
        return {"pair": (x1, x2)}
    return {"pair": (x1, x2), "time": float(t)}


def check_one_gap_zero_v(f1, f2, a):
    """Released-at-rest single-step criterion: no collisions iff the far
    force level is at least the near one.  Margin f2 - f1, compared exactly.
    """
    force = OneGap(f1=float(f1), f2=float(f2), a=float(a))
    margin = force.f2 - force.f1
    t_a = lambda x: math.sqrt(2.0 * (force.a - x) / force.f1)
    diag = GapDiagnostics(
        D=lambda x: 2.0 * force.f1 * (force.a - x),
        T_A=t_a,
        final_velocity_profile=lambda x: force.f1 * t_a(x),
    )
    if margin >= 0.0:
        return Verdict(outcome=REGULAR, criterion=ONE_GAP_ZERO_V, margin=margin,
                       diagnostics={"gap": diag})
    witness = _gap_micro_witness(force, lambda x: 0.0, 1.0)
    return Verdict(outcome=COLLISION, criterion=ONE_GAP_ZERO_V, margin=margin,
                   witness=witness, diagnostics={"gap": diag})


def check_one_gap_general(f1, f2, a, velocity, velocity_deriv, n=513):
    """Single-step criterion for nonnegative initial velocity.

    No collisions iff for every label x both hold, with
    D(x) = v(x)^2 + 2 f1 (a - x):

      entry order (strict):    -2 (a - x) v'(x) < v(x) + sqrt(D(x))
      final profile (weak):    v'(x) ((f1 - f2) v(x) + f2 sqrt(D(x)))
                                  >= f1 (f1 - f2)
    """
    force = OneGap(f1=float(f1), f2=float(f2), a=float(a))
    f1, f2, a = force.f1, force.f2, force.a

    def v(x):
        return float(velocity(x))

    def dv(x):
        return float(velocity_deriv(x))

    for x in np.linspace(0.0, 1.0, 65):
        if v(float(x)) < 0.0:
            raise HypothesisViolated("initial velocity must be nonnegative",
                                     criterion=ONE_GAP_GENERAL, witness=float(x))

    def dfn(x):
        return v(x) ** 2 + 2.0 * f1 * (a - x)

    def entry_margin(x):
        return v(x) + math.sqrt(dfn(x)) + 2.0 * (a - x) * dv(x)

    def profile_margin(x):
        return dv(x) * ((f1 - f2) * v(x) + f2 * math.sqrt(dfn(x))) \
            - f1 * (f1 - f2)

    min_entry, x_entry = _minimize_line_margin(entry_margin, 0.0, 1.0, n)
    min_profile, x_profile = _minimize_line_margin(profile_margin, 0.0, 1.0, n)
    t_a = lambda x: (-v(x) + math.sqrt(dfn(x))) / f1
    diag = GapDiagnostics(
        D=dfn, T_A=t_a,
        final_velocity_profile=lambda x: math.sqrt(dfn(x)),
    )
    diagnostics = {"entry_min": min_entry, "profile_min": min_profile,
                   "gap": diag}
    entry_ok = min_entry > 0.0
    profile_ok = min_profile >= 0.0
    if entry_ok and profile_ok:
        return Verdict(outcome=REGULAR, criterion=ONE_GAP_GENERAL,
                       margin=min(min_entry, min_profile),
                       diagnostics=diagnostics)
    if not entry_ok:
        x_star, cond, margin = x_entry, "ordered entry into the far region", min_entry
    else:
        x_star, cond, margin = x_profile, "monotone final velocity profile", min_profile
    witness = _gap_micro_witness(force, velocity, x_star)
    witness["condition"] = cond
    return Verdict(outcome=COLLISION, criterion=ONE_GAP_GENERAL, margin=margin,
                   witness=witness, diagnostics=diagnostics)


def check_corollary_sufficient(f1, a, velocity, velocity_deriv, n=513):
    """Sufficient slope bound for the force-free far region (f2 = 0):
    v'(x) >= f1 / sqrt(f1 x + v(0)^2) at every label.  Not necessary, so a
    failure is Inconclusive.
    """
    f1 = float(f1)
    if f1 <= 0.0:
        raise InvalidParameter("the near force level must be positive")
    v0sq = float(velocity(0.0)) ** 2

    def margin(x):
        denom = f1 * x + v0sq
        if denom <= 0.0:
            return -math.inf
        return float(velocity_deriv(x)) - f1 / math.sqrt(denom)

    min_val, x_star = _minimize_line_margin(margin, 0.0, 1.0, n)
    if min_val >= 0.0:
        return Verdict(outcome=REGULAR, criterion=ONE_GAP_SLOPE, margin=min_val)
    return Verdict(
        outcome=INCONCLUSIVE, criterion=ONE_GAP_SLOPE, margin=min_val,
        reason="slope bound fails at some label; the bound is sufficient only",
        witness={"x": x_star},
    )


def check_two_gap(f1, f2, f3, a, b):
    """Double-step criterion for particles released at rest.

    No collisions iff b - a <= alpha (a - 1) with

        alpha = f1 (f3 - f1) (f3 (f1 - f2) + f1 (f3 - f2))
                / ((f1 - f2)^2 f3^2).

    Margin alpha (a - 1) - (b - a), compared exactly.  f3 > f1 is necessary.
    """
    force = TwoGap(f1=float(f1), f2=float(f2), f3=float(f3), a=float(a), b=float(b))
    f1, f2, f3, a, b = force.f1, force.f2, force.f3, force.a, force.b
    alpha = (f1 * (f3 - f1) * (f3 * (f1 - f2) + f1 * (f3 - f2))
             / ((f1 - f2) ** 2 * f3 ** 2))
    beta = (f1 - f2) * f3 / ((f3 - f2) * f1 ** 2)
    margin = alpha * (a - 1.0) - (b - a)

    def d_fn(x):
        return 2.0 * f1 * (a - x)

    def t_a(x):
        return math.sqrt(d_fn(x)) / f1

    def s_fn(x):
        va = math.sqrt(d_fn(x))
        return (-va + math.sqrt(va * va + 2.0 * f2 * (b - a))) / f2

    def t_b(x):
        return t_a(x) + s_fn(x)

    t_star = t_b(0.0)

    def final_profile(x):
        tb = t_b(x)
        vb = math.sqrt(d_fn(x) + 2.0 * f2 * (b - a))
        return vb + f3 * (t_star - tb)

    diag = GapDiagnostics(D=d_fn, T_A=t_a, T_B=t_b, s=s_fn, beta=beta,
                          alpha=alpha, final_velocity_profile=final_profile)
    diagnostics = {"alpha": alpha, "beta": beta,
                   "necessary_far_exceeds_near": f3 > f1, "gap": diag}
    if margin >= 0.0:
        return Verdict(outcome=REGULAR, criterion=TWO_GAP_BOUND, margin=margin,
                       diagnostics=diagnostics)
    witness = _gap_micro_witness(force, lambda x: 0.0, 1.0)
    return Verdict(outcome=COLLISION, criterion=TWO_GAP_BOUND, margin=margin,
                   witness=witness, diagnostics=diagnostics)


#############################################################
# Multi-dimensional criteria
#############################################################


def _as_vec(value, dim):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(dim, float(arr)) if dim > 1 else arr.reshape(1)
    return arr


def _sample_box(rng, lo, hi):
    return np.array([rng.uniform(l, h) for l, h in zip(lo, hi)])


def _monotone_margin(fn, lo, hi, rng, probes, dim):
    """Worst normalized inner product (fn(b) - fn(a), b - a) / |b - a|^2."""
    worst, pair = math.inf, None
    for _ in range(probes):
        p = _sample_box(rng, lo, hi)
        q = _sample_box(rng, lo, hi)
        d = q - p
        nrm = float(np.dot(d, d))
        if nrm < 1e-24:
            continue
        if dim == 1:
            fp = float(fn(float(p[0])))
            fq = float(fn(float(q[0])))
            val = (fq - fp) * float(d[0]) / nrm
        else:
            fp = _as_vec(fn(p), dim)
            fq = _as_vec(fn(q), dim)
            val = float(np.dot(fq - fp, d)) / nrm
        if val < worst:
            worst, pair = val, (tuple(map(float, p)), tuple(map(float, q)))
    return worst, pair


def check_monotone_multi(scenario, probes=256, seed=None):
    """Sufficient criterion in any dimension: a monotone force field
    ((F(b) - F(a), b - a) >= 0 everywhere) plus a monotone initial velocity
    field keeps every pair distance convex in time, hence positive."""
    rng = np.random.default_rng(20240 + probes if seed is None else seed)
    d = scenario.dim
    if isinstance(scenario.domain, Annulus):
        r_in, r_out = scenario.domain.r_inner, scenario.domain.r_outer
        lo = [-r_out, -r_out]
        hi = [r_out, r_out]
        span = r_out - r_in
        f_lo = [-r_out - 10 * span] * 2
        f_hi = [r_out + 10 * span] * 2
    else:
        lo = list(scenario.domain.lower)
        hi = list(scenario.domain.upper)
        spans = [h - l for l, h in zip(lo, hi)]
        f_lo = [l - max(s, 1.0) for l, s in zip(lo, spans)]
        f_hi = [h + scenario.cutoff_factor * max(s, 1.0)
                for h, s in zip(hi, spans)]

    force = scenario.force
    if isinstance(force, Central):
        def force_fn(p):
            return force(p)
    elif d == 1:
        force_fn = force.f if isinstance(force, Smooth1D) else force
    else:
        force_fn = force
    f_margin, f_pair = _monotone_margin(force_fn, f_lo, f_hi, rng, probes, d)
    v_margin, v_pair = _monotone_margin(scenario.init.velocity, lo, hi, rng,
                                        probes, d)
    margin = min(f_margin, v_margin)
    diagnostics = {"force_min": f_margin, "velocity_min": v_margin}
    if margin >= 0.0:
        return Verdict(outcome=REGULAR, criterion=MONOTONE_FORCE, margin=margin,
                       diagnostics=diagnostics)
    witness = {"pair": f_pair if f_margin < v_margin else v_pair,
               "field": "force" if f_margin < v_margin else "velocity"}
    return Verdict(
        outcome=INCONCLUSIVE, criterion=MONOTONE_FORCE, margin=margin,
        witness=witness,
        reason="monotonicity fails on a sampled pair; the criterion is "
               "sufficient only", diagnostics=diagnostics,
    )


def check_linear(scenario, probes=256, seed=None):
    """Spectral sufficient criterion for an affine force F(y) = M y + c:
    real nonnegative eigenvalues with a full eigenbasis, plus a monotone
    initial velocity field.

    The symmetrized spectrum is reported too: when the symmetric part of M is
    indefinite the spectral argument does not reduce to the monotone-force
    criterion, so such Regular verdicts rest on the stated hypothesis alone.
    """
    force = scenario.force
    if not isinstance(force, Linear):
        raise InvalidParameter("check_linear needs an affine force")
    mat = force.matrix
    eigvals, eigvecs = np.linalg.eig(mat)
    scale = max(1.0, float(np.max(np.abs(eigvals))))
    sym_min = float(np.min(np.linalg.eigvalsh(0.5 * (mat + mat.T))))
    diagnostics = {
        "eigenvalues": [complex(ev) for ev in eigvals],
        "symmetric_part_min": sym_min,
    }
    if float(np.max(np.abs(eigvals.imag))) > TOL_EIG * scale:
        return Verdict(outcome=INCONCLUSIVE, criterion=LINEAR_SPECTRUM,
                       reason="complex spectrum", diagnostics=diagnostics)
    cond = float(np.linalg.cond(eigvecs))
    diagnostics["eigenbasis_condition"] = cond
    if not math.isfinite(cond) or cond > 1e12:
        return Verdict(outcome=INCONCLUSIVE, criterion=LINEAR_SPECTRUM,
                       reason="no well-conditioned eigenbasis",
                       diagnostics=diagnostics)
    min_eig = float(np.min(eigvals.real))
    if min_eig < -TOL_EIG * scale:
        return Verdict(outcome=INCONCLUSIVE, criterion=LINEAR_SPECTRUM,
                       margin=min_eig, reason="negative eigenvalue",
                       diagnostics=diagnostics)
    rng = np.random.default_rng(20241 + probes if seed is None else seed)
    v_margin, v_pair = _monotone_margin(
        scenario.init.velocity, list(scenario.domain.lower),
        list(scenario.domain.upper), rng, probes, scenario.dim)
    diagnostics["velocity_min"] = v_margin
    if v_margin < 0.0:
        return Verdict(outcome=INCONCLUSIVE, criterion=LINEAR_SPECTRUM,
                       margin=v_margin, witness={"pair": v_pair},
                       reason="initial velocity field is not monotone",
                       diagnostics=diagnostics)
    margin = 0.0 if -TOL_EIG * scale <= min_eig < 0.0 else min_eig
    reason = ""
    if sym_min < -TOL_EIG * scale:
        reason = ("symmetric part of the force matrix is indefinite; the "
                  "spectral hypothesis alone backs this verdict")
    return Verdict(outcome=REGULAR, criterion=LINEAR_SPECTRUM, margin=margin,
                   reason=reason, diagnostics=diagnostics)


def check_constant_force_pair(x1, x2, v1, v2):
    """Exact two-particle test under any constant force: with R = x2 - x1
    and V = v2 - v1 the relative motion is R + V t, so the particles collide
    iff R and V are parallel with (R, V) < 0, at time |R| / |V|."""
    r = np.asarray(x2, dtype=float) - np.asarray(x1, dtype=float)
    vdiff = np.asarray(v2, dtype=float) - np.asarray(v1, dtype=float)
    r = np.atleast_1d(r)
    vdiff = np.atleast_1d(vdiff)
    nr = float(np.linalg.norm(r))
    nv = float(np.linalg.norm(vdiff))
    if nr == 0.0:
        raise InvalidParameter("the two labels must differ")
    if nv == 0.0:
        return Verdict(outcome=REGULAR, criterion=CONSTANT_PAIR, margin=1.0,
                       reason="constant separation",
                       diagnostics={"parallel": False, "rv": 0.0})
    rv = float(np.dot(r, vdiff))
    # rejection of V from R: sqrt(|R|^2 |V|^2 - (R, V)^2) cancels
    # catastrophically for near-parallel data, the residual vector does not
    perp = vdiff - (rv / (nr * nr)) * r
    cross_ratio = float(np.linalg.norm(perp)) / nv
    cos = rv / (nr * nv)
    parallel = cross_ratio <= TOL_PARALLEL
    diagnostics = {"parallel": parallel, "rv": rv, "cross_ratio": cross_ratio}
    if parallel and rv < 0.0:
        t = nr / nv
        return Verdict(
            outcome=COLLISION, criterion=CONSTANT_PAIR, margin=cos,
            witness={"pair": (tuple(map(float, np.atleast_1d(x1))),
                              tuple(map(float, np.atleast_1d(x2)))),
                     "time": t},
            diagnostics=diagnostics,
        )
    return Verdict(outcome=REGULAR, criterion=CONSTANT_PAIR,
                   margin=max(cross_ratio, cos), diagnostics=diagnostics)


def check_constant_force_profile(scenario, n=None):
    """Continuum version of the constant-force pair test in 1D: trajectories
    are parallel parabolas, so collisions happen iff the initial velocity
    profile strictly decreases somewhere; the first collision time is the
    infimum of gap / velocity-excess over decreasing pairs."""
    if scenario.dim != 1:
        raise InvalidParameter("the 1D profile test needs a one-dimensional scenario")
    n = n or max(scenario.samples[0], 513)
    xs = scenario.domain.axis_nodes(0, n)
    v = np.array([float(scenario.init.velocity(float(x))) for x in xs])
    span = scenario.domain.upper[0] - scenario.domain.lower[0]
    delta = _MICRO * span
    best_slope, best_pair = math.inf, None
    t_first = math.inf
    dx = np.diff(xs)
    dvv = np.diff(v)
    slopes = dvv / dx
    k = int(np.argmin(slopes))
    if slopes[k] < best_slope:
        best_slope, best_pair = float(slopes[k]), (float(xs[k]), float(xs[k + 1]))
    hits = dvv < 0.0
    if np.any(hits):
        t_first = float(np.min(-dx[hits] / dvv[hits]))
    for x in xs:
        x = float(x)
        a_pt = x if x + delta <= scenario.domain.upper[0] else x - delta
        b_pt = a_pt + delta
        dv_micro = (float(scenario.init.velocity(b_pt))
                    - float(scenario.init.velocity(a_pt)))
        slope = dv_micro / delta
        if slope < best_slope:
            best_slope, best_pair = slope, (a_pt, b_pt)
        if dv_micro < 0.0:
            t_first = min(t_first, delta / (-dv_micro))
    diagnostics = {"min_velocity_slope": best_slope}
    if best_slope >= 0.0:
        return Verdict(outcome=REGULAR, criterion=CONSTANT_PAIR,
                       margin=best_slope, diagnostics=diagnostics)
    return Verdict(
        outcome=COLLISION, criterion=CONSTANT_PAIR, margin=best_slope,
        witness={"pair": best_pair, "time": t_first}, diagnostics=diagnostics,
    )


def check_halfspace_step(f1, f2, a):
    """Half-space step criterion for particles released at rest below the
    plane: no collisions iff the normal force does not drop across it.
    Margin = far normal level minus near normal level, compared exactly."""
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if f1.shape != f2.shape or f1.ndim != 1:
        raise InvalidParameter("force levels must be vectors of equal dimension")
    if float(a) <= 0.0:
        raise InvalidParameter("the step position must be positive")
    f1d = float(f1[-1])
    f2d = float(f2[-1])
    if f1d <= 0.0:
        raise InvalidParameter("the near normal force level must be positive")
    diagnostics = {"near_normal": f1d, "far_normal": f2d}
    if f2d < 0.0:
        return Verdict(
            outcome=INCONCLUSIVE, criterion=HALFSPACE_STEP, margin=None,
            reason="negative far normal level lets particles oscillate across "
                   "the plane; outside this criterion",
            diagnostics=diagnostics,
        )
    margin = f2d - f1d
    if margin >= 0.0:
        return Verdict(outcome=REGULAR, criterion=HALFSPACE_STEP, margin=margin,
                       diagnostics=diagnostics)
    direction = tuple(float(c) for c in (f2 - f1))
    return Verdict(
        outcome=COLLISION, criterion=HALFSPACE_STEP, margin=margin,
        witness={"direction": direction,
                 "note": "pairs separated along this direction close up"},
        diagnostics=diagnostics,
    )


def check_central(scenario, n_r1=13, n_r2=13, eta=None):
    """Sufficient flight-time criterion for a central force on an annulus.

    With conserved angular momentum M(r) = r^2 h(r), outward energy
    E0(r) = g(r)^2/2 + U(r) + r^2 h(r)^2 / 2 and effective potential
    V(z, r) = U(z) + r^4 h(r)^2 / (2 z^2), no collisions happen if

        integral_r1^r2 d/dr1 (2 (E0(r1) - V(z, r1)))^(-1/2) dz < 1 / g(r1)

    for all anchor radii r1 and targets r2 > r1.  Equivalently the radial
    flight time T(r1, r2) = integral of the inverse speed from r1 to r2 is
    strictly decreasing in the anchor label; the margin is -dT/dr1 by
    central differences of the whole integral with step eta * r1, which
    keeps the finite-difference noise out of the quadrature.
    """
    force = scenario.force
    if not isinstance(force, Central) or not isinstance(scenario.domain, Annulus):
        raise InvalidParameter("check_central needs a central force on an annulus")
    eta = eta or max(scenario.fd_step, 1e-5)
    g = scenario.init.radial_speed
    h = scenario.init.angular_rate
    u = force.u
    du = force.du
    r1_lo = scenario.domain.r_inner
    r1_hi = scenario.domain.r_outer
    r_cut = scenario.y_cutoff()

    for r in np.linspace(r1_lo, r1_hi, 65):
        if float(g(float(r))) <= 0.0:
            raise HypothesisViolated("outward radial speed must be positive",
                                     criterion=CENTRAL_FLIGHT, witness=float(r))
    for r1 in np.linspace(r1_lo, r1_hi, 17):
        mom_sq = (float(r1) ** 2 * float(h(float(r1)))) ** 2
        for r2 in np.linspace(float(r1), r_cut, 33):
            if -float(du(float(r2))) + mom_sq / float(r2) ** 3 < -1e-12:
                raise HypothesisViolated(
                    "net outward radial force fails ahead of some anchor radius",
                    criterion=CENTRAL_FLIGHT, witness=(float(r1), float(r2)))

    def inv_speed(r1, z):
        hr = float(h(r1))
        e0 = 0.5 * float(g(r1)) ** 2 + float(u(r1)) + 0.5 * r1 * r1 * hr * hr
        veff = float(u(z)) + (r1 ** 4) * hr * hr / (2.0 * z * z)
        k = 2.0 * (e0 - veff)
        if k <= 0.0:
            return math.inf
        return 1.0 / math.sqrt(k)

    bad = [None]

    def flight_time(a, r2):
        def speed_inv(z):
            val = inv_speed(a, z)
            if not math.isfinite(val):
                bad[0] = (a, z)
                return 0.0
            return val

        val, _ = quadrature._adaptive(speed_inv, a, r2, 1e-12, 1e-10)
        return val

    def margin(r1, r2):
        step = eta * r1
        t_hi = flight_time(r1 + step, r2)
        t_lo = flight_time(r1 - step, r2)
        return -(t_hi - t_lo) / (2.0 * step)

    rng = _pair_rng(scenario, 3)
    inset = 1e-6 * (r1_hi - r1_lo)
    min_val, xy = _minimize_pair_margin(
        margin, r1_lo + inset, r1_hi - inset, r_cut, n_r1, n_r2, rng)
    if bad[0] is not None:
        return Verdict(outcome=INCONCLUSIVE, criterion=CENTRAL_FLIGHT,
                       reason="kinetic term vanished while probing the bound",
                       witness={"r1": bad[0][0], "z": bad[0][1]})
    band = EQUALITY_BAND * max(1.0, abs(min_val))
    if min_val > band:
        return Verdict(outcome=REGULAR, criterion=CENTRAL_FLIGHT, margin=min_val,
                       diagnostics={"worst": xy})
    return Verdict(
        outcome=INCONCLUSIVE, criterion=CENTRAL_FLIGHT, margin=min_val,
        witness={"r1": xy[0], "r2": xy[1]},
        reason="bound fails or sits in the equality band; the criterion is "
               "sufficient only",
    )


#############################################################
# Dispatcher
#############################################################


def _verdict_inconclusive(reason, criterion="none"):
    return Verdict(outcome=INCONCLUSIVE, criterion=criterion, reason=reason)


def _hypothesis_verdict(exc):
    return Verdict(outcome=INCONCLUSIVE, criterion=exc.criterion or "none",
                   reason=f"hypothesis violated: {exc}",
                   witness=None if exc.witness is None else {"at": exc.witness})


def check_auto(scenario):
    """Route the scenario to every applicable criterion.

    Returns (verdict, trace) where trace lists (criterion id, Verdict) in
    evaluation order.  Decisive verdicts from if-and-only-if criteria win;
    a Regular from any criterion contradicting a Collision from an iff
    criterion raises InternalInconsistency.
    """
    force = scenario.force
    trace: List[Tuple[str, Verdict]] = []

    def run(criterion_id, fn):
        try:
            v = fn()
        except HypothesisViolated as exc:
            v = _hypothesis_verdict(exc)
        trace.append((criterion_id, v))
        return v

    if isinstance(force, OneGap):
        m0 = simulator.uniform_mass_value(scenario)
        if m0 is None:
            trace.append((ONE_GAP_GENERAL, _verdict_inconclusive(
                "step-force criteria need a uniform particle mass; varying "
                "mass breaks the shared-acceleration kinematics",
                ONE_GAP_GENERAL)))
        else:
            # uniform mass folds into the levels: accelerations f_i / m0
            a1, a2 = force.f1 / m0, force.f2 / m0
            if scenario.velocity_is_zero():
                run(ONE_GAP_ZERO_V,
                    lambda: check_one_gap_zero_v(a1, a2, force.a))
            run(ONE_GAP_GENERAL,
                lambda: check_one_gap_general(a1, a2, force.a,
                                              scenario.init.velocity,
                                              scenario.init.velocity_deriv))
            if force.f2 == 0.0:
                run(ONE_GAP_SLOPE,
                    lambda: check_corollary_sufficient(a1, force.a,
                                                       scenario.init.velocity,
                                                       scenario.init.velocity_deriv))
    elif isinstance(force, TwoGap):
        m0 = simulator.uniform_mass_value(scenario)
        if m0 is None:
            trace.append((TWO_GAP_BOUND, _verdict_inconclusive(
                "step-force criteria need a uniform particle mass; varying "
                "mass breaks the shared-acceleration kinematics",
                TWO_GAP_BOUND)))
        elif scenario.velocity_is_zero():
            run(TWO_GAP_BOUND,
                lambda: check_two_gap(force.f1 / m0, force.f2 / m0,
                                      force.f3 / m0, force.a, force.b))
        else:
            trace.append((TWO_GAP_BOUND, _verdict_inconclusive(
                "no criterion covers a double-step force with nonzero "
                "initial velocity", TWO_GAP_BOUND)))
    elif isinstance(force, Smooth1D):
        window = scenario.horizon if math.isfinite(scenario.horizon) \
            else scenario.cutoff_factor
        const = simulator._constant_force_value(scenario, window)
        if const is not None and simulator.uniform_mass_value(scenario) is not None:
            # uniform mass keeps the parabolas parallel, so the profile
            # criterion and its collision times hold unchanged
            run(CONSTANT_PAIR, lambda: check_constant_force_profile(scenario))
        else:
            positive = all(float(scenario.init.velocity(float(x))) > 0.0
                           for x in scenario.grid_1d())
            if positive:
                run(SMOOTH_POSITIVE_V, lambda: check_smooth_positive_v(scenario))
            run(SMOOTH_GENERAL, lambda: check_smooth_general(scenario))
    elif isinstance(force, ConstantVec):
        v_mono = run(MONOTONE_FORCE, lambda: check_monotone_multi(scenario))
        if v_mono.outcome != REGULAR:
            run(CONSTANT_PAIR, lambda: _constant_vec_pair_scan(scenario))
    elif isinstance(force, HalfSpaceStep):
        if scenario.velocity_is_zero():
            run(HALFSPACE_STEP,
                lambda: check_halfspace_step(force.f1, force.f2, force.a))
        else:
            trace.append((HALFSPACE_STEP, _verdict_inconclusive(
                "the half-space step criterion needs particles released at "
                "rest", HALFSPACE_STEP)))
            run(MONOTONE_FORCE, lambda: check_monotone_multi(scenario))
    elif isinstance(force, Linear):
        lin = run(LINEAR_SPECTRUM, lambda: check_linear(scenario))
        if lin.outcome != REGULAR:
            run(MONOTONE_FORCE, lambda: check_monotone_multi(scenario))
    elif isinstance(force, Central):
        run(CENTRAL_FLIGHT, lambda: check_central(scenario))
    else:
        trace.append(("none", _verdict_inconclusive(
            "no applicable criterion for this force kind")))

    collisions = [(cid, v) for cid, v in trace
                  if v.outcome == COLLISION and cid in IFF_CRITERIA]
    regulars = [(cid, v) for cid, v in trace if v.outcome == REGULAR]
    if collisions and regulars:
        raise InternalInconsistency(
            f"criterion '{collisions[0][0]}' reports a collision while "
            f"'{regulars[0][0]}' reports regular")
    if collisions:
        return collisions[0][1], trace
    iff_regulars = [(cid, v) for cid, v in regulars if cid in IFF_CRITERIA]
    if iff_regulars:
        return iff_regulars[0][1], trace
    if regulars:
        return regulars[0][1], trace
    reasons = "; ".join(
        f"{cid}: {v.reason}" for cid, v in trace if v.reason) or \
        "no applicable criterion"
    final = Verdict(outcome=INCONCLUSIVE,
                    criterion=trace[-1][0] if trace else "none",
                    reason=reasons)
    return final, trace


def _constant_vec_pair_scan(scenario, extra_pairs=512):
    """Sampled pair scan under a constant force: any antiparallel
    label/velocity-difference pair is an exact collision witness."""
    pts = scenario.grid_points()
    vel = np.array([np.asarray(scenario.init.velocity(p), dtype=float)
                    for p in pts])
    rng = _pair_rng(scenario, 4)
    n = len(pts)
    idx_pairs = []
    for i in range(n - 1):
        idx_pairs.append((i, i + 1))
    for _ in range(extra_pairs):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            idx_pairs.append((int(i), int(j)))
    best = None
    for i, j in idx_pairs:
        v = check_constant_force_pair(pts[i], pts[j], vel[i], vel[j])
        if v.outcome == COLLISION:
            if best is None or v.witness["time"] < best.witness["time"]:
                best = v
    if best is not None:
        return best
    return Verdict(
        outcome=INCONCLUSIVE, criterion=CONSTANT_PAIR,
        reason="no sampled pair is antiparallel; the exact pair test cannot "
               "certify the whole continuum",
    )
