"""Empirical moduli of convexity and smoothness for ℓ_p^n.

The modulus of convexity and the modulus of smoothness are

    δ(ε) = inf { 1 - ‖(x + y)/2‖ : ‖x‖ = ‖y‖ = 1, ‖x - y‖ >= ε },
    ρ(t) = sup { (‖x + y‖ + ‖x - y‖)/2 - 1 : ‖x‖ = 1, ‖y‖ = t }.

Neither optimization is solved to global optimality here: δ is estimated
by incomplete minimization (the reported value is an upper bound on the
true modulus) and ρ by incomplete maximization (a lower bound).  Each
grid point gets a quasi-random batch of sphere pairs — Sobol points
pushed through the Γ(1/p) transform, which makes them uniform on the
ℓ_p sphere — plus structured axis/diagonal seeds, followed by rounds of
coordinate-descent refinement around the incumbent.  For δ the pair is
pinned to ‖x - y‖ = ε by bisection along sphere paths, since the
infimum is approached on that boundary.

`budget` counts candidate pairs examined per grid point (each pinning
costs a fixed number of vectorized norm evaluations on top).

Power-type fits a·ε^p and b·t^q are least squares in log-log space over
the small-argument tail.  The classical constraints a >= 1, b >= 1 with
1 < p <= 2 <= q cannot all be met by sampled curves, so the fit here is
unconstrained and the exponents are reported as observed.

`distance_bound_check` evaluates the modulus-based uniform-continuity
estimate for metric projections,

    ‖Px - Py‖ <= k · δ⁻¹( 6 ρ( 2 ‖x - y‖ ) ),
    k = 2 max{ 1, ‖x - Py‖, ‖Px - y‖ },

with δ inverted by monotone piecewise-linear interpolation of a lowered
envelope and ρ raised, so sampling bias cannot manufacture violations.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.stats import qmc

from . import solver
from .space import LpSpace

__all__ = [
    "ModuliEstimate",
    "PowerFit",
    "BoundReport",
    "thread_count",
    "estimate_convexity_modulus",
    "estimate_smoothness_modulus",
    "fit_power_type",
    "distance_bound_check",
    "hilbert_convexity_modulus",
    "hilbert_smoothness_modulus",
]


def thread_count(requested: int | None = None) -> int:
    """Worker cap: explicit argument, else BANACHPROJ_THREADS, else all cores."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("BANACHPROJ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"BANACHPROJ_THREADS must be an integer, got {env!r}") from exc
    return max(1, os.cpu_count() or 1)


def hilbert_convexity_modulus(eps):
    """Exact δ for p = 2: 1 - sqrt(1 - ε²/4)."""
    eps = np.asarray(eps, dtype=float)
    return 1.0 - np.sqrt(np.maximum(0.0, 1.0 - eps ** 2 / 4.0))


def hilbert_smoothness_modulus(t):
    """Exact ρ for p = 2: sqrt(1 + t²) - 1."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(1.0 + t ** 2) - 1.0


@dataclass
class ModuliEstimate:
    """Sampled modulus curves for one space.

    delta_values are upper bounds on the true δ (minimization stopped
    early); rho_values are lower bounds on the true ρ.  A curve that was
    not estimated is empty.  Both curves are post-processed into monotone
    envelopes that preserve those one-sided guarantees.
    """

    p: float
    n: int
    epsilons: np.ndarray = field(default_factory=lambda: np.array([]))
    delta_values: np.ndarray = field(default_factory=lambda: np.array([]))
    ts: np.ndarray = field(default_factory=lambda: np.array([]))
    rho_values: np.ndarray = field(default_factory=lambda: np.array([]))
    sample_count: int = 0
    refinement_rounds: int = 0

    def merged_with(self, other: "ModuliEstimate") -> "ModuliEstimate":
        if (self.p, self.n) != (other.p, other.n):
            raise ValueError("cannot merge estimates for different spaces")
        take_delta = self if self.epsilons.size else other
        take_rho = self if self.ts.size else other
        return ModuliEstimate(
            p=self.p,
            n=self.n,
            epsilons=take_delta.epsilons.copy(),
            delta_values=take_delta.delta_values.copy(),
            ts=take_rho.ts.copy(),
            rho_values=take_rho.rho_values.copy(),
            sample_count=self.sample_count + other.sample_count,
            refinement_rounds=max(self.refinement_rounds, other.refinement_rounds),
        )

    def csv_rows(self):
        yield ("curve", "argument", "value")
        for e, d in zip(self.epsilons, self.delta_values):
            yield ("delta", float(e), float(d))
        for t, r in zip(self.ts, self.rho_values):
            yield ("rho", float(t), float(r))

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "epsilons": [float(e) for e in self.epsilons],
            "delta_values": [float(d) for d in self.delta_values],
            "ts": [float(t) for t in self.ts],
            "rho_values": [float(r) for r in self.rho_values],
            "sample_count": self.sample_count,
            "refinement_rounds": self.refinement_rounds,
            "delta_side": "upper-bound-on-true-delta",
            "rho_side": "lower-bound-on-true-rho",
        }


@dataclass
class PowerFit:
    """Unconstrained log-log fits δ ≈ a ε^p_fit, ρ ≈ b t^q_fit on the tail."""

    a: float
    p_fit: float
    b: float
    q_fit: float
    rms_delta: float
    rms_rho: float

    def to_json(self) -> dict:
        return {
            "a": self.a, "p_fit": self.p_fit,
            "b": self.b, "q_fit": self.q_fit,
            "rms_delta": self.rms_delta, "rms_rho": self.rms_rho,
        }


# -- sampling machinery ------------------------------------------------------

def _row_norms(M: np.ndarray, p: float) -> np.ndarray:
    return np.sum(np.abs(M) ** p, axis=1) ** (1.0 / p)


def _unit_rows(M: np.ndarray, p: float) -> np.ndarray:
    nr = _row_norms(M, p)
    nr = np.where(nr < 1e-300, 1.0, nr)
    return M / nr[:, None]


def _sphere_from_uniforms(U: np.ndarray, p: float) -> np.ndarray:
    """Map uniforms in (0,1)^n to the unit ℓ_p sphere.

    Coordinates |c_i|^p ~ Γ(1/p) with random signs make c/‖c‖_p uniform
    on the sphere; the sign and the magnitude share one uniform each.
    """
    S = 2.0 * U - 1.0
    mag_u = np.clip(np.abs(S), 1e-12, 1.0 - 1e-12)
    mags = stats.gamma.ppf(mag_u, a=1.0 / p) ** (1.0 / p)
    return _unit_rows(np.sign(S) * mags, p)


def _sobol_block(dim: int, count: int, seed) -> np.ndarray:
    eng = qmc.Sobol(d=dim, scramble=True, seed=seed)
    m = max(3, math.ceil(math.log2(max(count, 2))))
    return eng.random_base2(m)[:count]


def _pin_pairs(p: float, X: np.ndarray, Y: np.ndarray, eps: float) -> np.ndarray:
    """Slide each y along a sphere path until ‖x - y‖_p = eps (feasible side).

    The path runs from y toward x (when too far) or toward -x (too close);
    the returned point sits on the end of the final bisection bracket with
    ‖x - y‖ >= eps, so feasibility survives rounding.
    """
    d0 = _row_norms(X - Y, p)
    coincident = d0 < 1e-9
    if coincident.any():
        Y = Y.copy()
        Y[coincident] = _unit_rows(np.roll(X[coincident], 1, axis=1), p)
        d0 = _row_norms(X - Y, p)
    if eps >= 2.0 - 1e-12:
        return -X
    toward_x = d0 >= eps
    E = np.where(toward_x[:, None], X, -X)
    lo = np.zeros(len(X))
    hi = np.ones(len(X))
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        Z = _unit_rows((1.0 - mid)[:, None] * Y + mid[:, None] * E, p)
        ge = _row_norms(X - Z, p) >= eps
        move_lo = ge == toward_x
        lo = np.where(move_lo, mid, lo)
        hi = np.where(move_lo, hi, mid)
    tau = np.where(toward_x, lo, hi)
    return _unit_rows((1.0 - tau)[:, None] * Y + tau[:, None] * E, p)


def _axis_seed_pairs(p: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic axis/diagonal sphere pairs that cover the classical
    extremal families for every exponent regime."""
    xs, ys = [], []
    ratios = np.geomspace(0.05, 1.0, 6)
    limit = min(n, 6)
    for i in range(limit):
        j = (i + 1) % n
        ei = np.zeros(n)
        ei[i] = 1.0
        ej = np.zeros(n)
        ej[j] = 1.0
        for s in ratios:
            xs.append(ei + s * ej)
            ys.append(ei - s * ej)
            xs.append(ei)
            ys.append(ei + s * ej)
        xs.append(ei)
        ys.append(ej)
        xs.append(ei + ej)
        ys.append(ei - ej)
    X = _unit_rows(np.array(xs), p)
    Y = _unit_rows(np.array(ys), p)
    return X, Y


def _coordinate_cands(base: np.ndarray, h: float) -> np.ndarray:
    n = base.size
    steps = np.vstack([h * np.eye(n), -h * np.eye(n)])
    return base[None, :] + steps


def _delta_point(p: float, n: int, eps: float, budget: int, rounds: int, seed_seq) -> tuple[float, int]:
    rng = np.random.default_rng(seed_seq)
    sobol_seed = int(rng.integers(0, 2 ** 31))
    evals = 0

    init = max(64, int(budget * 0.6))
    U = _sobol_block(2 * n, init, sobol_seed)
    X = _sphere_from_uniforms(U[:, :n], p)
    Y = _sphere_from_uniforms(U[:, n:], p)
    Xs, Ys = _axis_seed_pairs(p, n)
    X = np.vstack([X, Xs])
    Y = np.vstack([Y, Ys])
    Y = _pin_pairs(p, X, Y, eps)
    gaps = 1.0 - _row_norms(0.5 * (X + Y), p)
    evals += len(X)
    k = int(np.argmin(gaps))
    best_x, best_y, best = X[k], Y[k], float(gaps[k])

    remaining = max(0, budget - evals)
    cloud = max(16, remaining // max(rounds, 1) // 4) if rounds else 0
    h = 0.3
    for _ in range(rounds):
        for hh in (h, h / 4.0, h / 16.0):
            Xc = [_coordinate_cands(best_x, hh)]
            Yc = [np.repeat(best_y[None, :], 2 * n, axis=0)]
            Xc.append(np.repeat(best_x[None, :], 2 * n, axis=0))
            Yc.append(_coordinate_cands(best_y, hh))
            Xc.append(best_x[None, :] + hh * rng.standard_normal((cloud, n)))
            Yc.append(best_y[None, :] + hh * rng.standard_normal((cloud, n)))
            Xc = _unit_rows(np.vstack(Xc), p)
            Yc = _unit_rows(np.vstack(Yc), p)
            Yc = _pin_pairs(p, Xc, Yc, eps)
            g = 1.0 - _row_norms(0.5 * (Xc + Yc), p)
            evals += len(Xc)
            kk = int(np.argmin(g))
            if g[kk] < best:
                best = float(g[kk])
                best_x, best_y = Xc[kk], Yc[kk]
        h /= 4.0
    return max(best, 0.0), evals


def _rho_point(p: float, n: int, t: float, budget: int, rounds: int, seed_seq) -> tuple[float, int]:
    rng = np.random.default_rng(seed_seq)
    sobol_seed = int(rng.integers(0, 2 ** 31))
    evals = 0

    def value(X, Y):
        return 0.5 * (_row_norms(X + Y, p) + _row_norms(X - Y, p)) - 1.0

    init = max(64, int(budget * 0.6))
    U = _sobol_block(2 * n, init, sobol_seed)
    X = _sphere_from_uniforms(U[:, :n], p)
    Yu = _sphere_from_uniforms(U[:, n:], p)
    Xs, Ys = _axis_seed_pairs(p, n)
    X = np.vstack([X, Xs])
    Yu = np.vstack([Yu, Ys])
    vals = value(X, t * Yu)
    evals += len(X)
    k = int(np.argmax(vals))
    best_x, best_u, best = X[k], Yu[k], float(vals[k])

    remaining = max(0, budget - evals)
    cloud = max(16, remaining // max(rounds, 1) // 4) if rounds else 0
    h = 0.3
    for _ in range(rounds):
        for hh in (h, h / 4.0, h / 16.0):
            Xc = [_coordinate_cands(best_x, hh)]
            Uc = [np.repeat(best_u[None, :], 2 * n, axis=0)]
            Xc.append(np.repeat(best_x[None, :], 2 * n, axis=0))
            Uc.append(_coordinate_cands(best_u, hh))
            Xc.append(best_x[None, :] + hh * rng.standard_normal((cloud, n)))
            Uc.append(best_u[None, :] + hh * rng.standard_normal((cloud, n)))
            Xc = _unit_rows(np.vstack(Xc), p)
            Uc = _unit_rows(np.vstack(Uc), p)
            v = value(Xc, t * Uc)
            evals += len(Xc)
            kk = int(np.argmax(v))
            if v[kk] > best:
                best = float(v[kk])
                best_x, best_u = Xc[kk], Uc[kk]
        h /= 4.0
    return float(np.clip(best, 0.0, t)), evals


def _grid_map(fn, args_list, threads: int):
    if threads <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, *a) for a in args_list]
        return [f.result() for f in futures]


def _validate_grid(grid, upper: float, name: str) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError(f"{name} grid must be a nonempty 1-d array")
    if np.any(~np.isfinite(g)) or np.any(g <= 0.0) or np.any(g > upper):
        raise ValueError(f"{name} grid entries must lie in (0, {upper:g}]")
    if np.any(np.diff(g) <= 0.0):
        raise ValueError(f"{name} grid must be strictly increasing")
    return g


def estimate_convexity_modulus(p: float, n: int, eps_grid, budget: int = 100_000,
                               seed: int = 0, rounds: int = 3,
                               threads: int | None = None) -> ModuliEstimate:
    """Sampled upper bounds on δ(ε) over a grid, as a monotone envelope.

    Post-processing takes running maxima of δ and of δ(ε)/ε, which keeps
    the upper-bound property while enforcing the two monotonicity laws
    the true modulus satisfies.
    """
    LpSpace(p)
    if n < 2:
        raise ValueError("the moduli need dimension >= 2")
    eps = _validate_grid(eps_grid, 2.0, "epsilon")
    seeds = np.random.SeedSequence(seed).spawn(eps.size)
    work = [(p, n, float(e), int(budget), int(rounds), s) for e, s in zip(eps, seeds)]
    results = _grid_map(_delta_point, work, thread_count(threads))
    vals = np.array([r[0] for r in results])
    evals = int(sum(r[1] for r in results))
    ratio_env = np.maximum.accumulate(vals / eps)
    vals = eps * ratio_env
    return ModuliEstimate(p=float(p), n=int(n), epsilons=eps, delta_values=vals,
                          sample_count=evals, refinement_rounds=int(rounds))


def estimate_smoothness_modulus(p: float, n: int, t_grid, budget: int = 100_000,
                                seed: int = 0, rounds: int = 3,
                                threads: int | None = None) -> ModuliEstimate:
    """Sampled lower bounds on ρ(t) over a grid, as a monotone envelope.

    Values are clipped into [0, t] (the true modulus satisfies both ends)
    and made nondecreasing by a running maximum, which again preserves
    the lower-bound property.
    """
    LpSpace(p)
    if n < 2:
        raise ValueError("the moduli need dimension >= 2")
    ts = _validate_grid(t_grid, math.inf, "t")
    seeds = np.random.SeedSequence(seed).spawn(ts.size + 1)[1:]
    work = [(p, n, float(t), int(budget), int(rounds), s) for t, s in zip(ts, seeds)]
    results = _grid_map(_rho_point, work, thread_count(threads))
    vals = np.array([r[0] for r in results])
    evals = int(sum(r[1] for r in results))
    vals = np.maximum.accumulate(vals)
    return ModuliEstimate(p=float(p), n=int(n), ts=ts, rho_values=vals,
                          sample_count=evals, refinement_rounds=int(rounds))


def _tail_fit(args: np.ndarray, vals: np.ndarray) -> tuple[float, float, float]:
    if args.size < 4:
        raise ValueError("power fits need at least 4 grid points per curve")
    m = (args.size + 1) // 2
    a_t, v_t = args[:m], vals[:m]
    if np.any(v_t <= 0.0):
        raise ValueError("degenerate (zero) modulus values in the fit tail")
    lw, lv = np.log(a_t), np.log(v_t)
    slope, intercept = np.polyfit(lw, lv, 1)
    pred = slope * lw + intercept
    rms = float(np.sqrt(np.mean((lv - pred) ** 2)))
    return float(math.exp(intercept)), float(slope), rms


def fit_power_type(est: ModuliEstimate) -> PowerFit:
    """Fit a·ε^p to the δ curve and b·t^q to the ρ curve (tails only).

    A side that is absent from the estimate comes back as NaN; a side
    that is present but unusable (too short, zero values) is an error.
    """
    a = p_fit = rms_d = float("nan")
    b = q_fit = rms_r = float("nan")
    if est.epsilons.size:
        a, p_fit, rms_d = _tail_fit(est.epsilons, est.delta_values)
    if est.ts.size:
        b, q_fit, rms_r = _tail_fit(est.ts, est.rho_values)
    if est.epsilons.size == 0 and est.ts.size == 0:
        raise ValueError("estimate holds no curves to fit")
    return PowerFit(a, p_fit, b, q_fit, rms_d, rms_r)


@dataclass
class BoundReport:
    """Row-by-row outcome of the uniform-continuity bound check."""

    rows: list
    count: int
    anomalies: int

    @property
    def anomaly_rate(self) -> float:
        return self.anomalies / self.count if self.count else 0.0

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "anomalies": self.anomalies,
            "anomaly_rate": self.anomaly_rate,
            "rows": [
                {"lhs": r[0], "rhs": r[1], "k": r[2], "pair_distance": r[3], "ok": r[4]}
                for r in self.rows
            ],
        }


# safety factors for the conservative envelopes: δ lowered, ρ raised
DELTA_ENVELOPE_SHRINK = 0.9
RHO_ENVELOPE_GROW = 1.1


def _delta_inverse_table(est: ModuliEstimate, fit: PowerFit):
    eps_max = float(est.epsilons.max())
    grid = np.geomspace(min(1e-8, est.epsilons.min() / 10.0), eps_max, 4096)
    interp = np.interp(grid, est.epsilons, est.delta_values,
                       left=np.inf, right=np.inf)
    fitted = fit.a * grid ** fit.p_fit
    env = DELTA_ENVELOPE_SHRINK * np.minimum(interp, fitted)
    env = np.maximum.accumulate(np.maximum(env, 1e-300))
    return grid, env


def _rho_envelope(est: ModuliEstimate, fit: PowerFit, t: float) -> float:
    t_max = float(est.ts.max())
    if t > t_max * (1.0 + 1e-9):
        raise ValueError(f"rho argument {t:g} outside the estimated range (max {t_max:g})")
    interp = float(np.interp(t, est.ts, est.rho_values))
    fitted = fit.b * t ** fit.q_fit if math.isfinite(fit.b) else 0.0
    return RHO_ENVELOPE_GROW * max(interp, fitted)


def distance_bound_check(space: LpSpace, C, pairs, est: ModuliEstimate,
                         fit: PowerFit | None = None,
                         anomaly_factor: float = 1.05) -> BoundReport:
    """Check ‖Px - Py‖ <= k δ⁻¹(6 ρ(2‖x - y‖)) over explicit pairs.

    Uses conservative envelopes of the sampled moduli; rows violating the
    bound by more than `anomaly_factor` are counted as anomalies.  Raises
    when an argument of δ⁻¹ or ρ lands outside the estimated range.
    """
    if est.epsilons.size == 0 or est.ts.size == 0:
        raise ValueError("the bound needs both modulus curves in the estimate")
    if fit is None:
        fit = fit_power_type(est)
    inv_grid, inv_env = _delta_inverse_table(est, fit)
    delta_top = float(inv_env[-1])

    rows = []
    anomalies = 0
    for x, y in pairs:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        px = solver.project(space, C, x)
        py = solver.project(space, C, y)
        lhs = space.norm(px - py)
        dist = space.norm(x - y)
        if dist == 0.0:
            rows.append((lhs, 0.0, 2.0, 0.0, lhs <= 1e-12))
            continue
        k = 2.0 * max(1.0, space.norm(x - py), space.norm(px - y))
        arg = 6.0 * _rho_envelope(est, fit, 2.0 * dist)
        if arg > delta_top:
            raise ValueError(
                f"delta-inverse argument {arg:g} outside the estimated range "
                f"(max {delta_top:g}); extend the epsilon grid or shrink the pairs"
            )
        rhs = k * float(np.interp(arg, inv_env, inv_grid))
        ok = lhs <= anomaly_factor * rhs + 1e-12
        if not ok:
            anomalies += 1
        rows.append((float(lhs), float(rhs), float(k), float(dist), bool(ok)))
    return BoundReport(rows=rows, count=len(rows), anomalies=anomalies)
