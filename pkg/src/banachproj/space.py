"""Finite-dimensional ℓ_p spaces: norms, duality mappings, smoothness data.

For 1 < p < ∞ the space ℓ_p^n is uniformly convex and uniformly smooth,
its norm is Gâteaux (indeed Fréchet) differentiable away from the origin,
and the normalized duality mapping

    (Jx)_i = |x_i|^(p-1) sign(x_i) / ‖x‖^(p-2)

is single valued with ⟨Jx, x⟩ = ‖x‖² and ‖Jx‖_* = ‖x‖.  The conjugate
exponent q = p/(p-1) gives the dual norm and the inverse mapping of the
same shape.  Everything else in the package is built on these facts, so
this module also exposes the two directional smoothness functionals used
by the projection derivatives:

* ``norm_smoothness``   — the one-sided derivative of t ↦ ‖x + t v‖ at 0,
  evaluated in closed form as ⟨Jx, v⟩ on the unit sphere;
* ``duality_smoothness`` — the one-sided derivative of t ↦ ⟨J(x + t v), x⟩
  at 0, evaluated numerically from extrapolated difference quotients.

The closed form used by ``norm_smoothness`` is not taken on faith: the
test suite validates it against the raw difference quotient of the norm
before anything downstream relies on it.
"""
from __future__ import annotations

import math

import numpy as np

from .numdiff import ConvergenceError, StepSchedule

__all__ = ["LpSpace", "SPHERE_TOL"]

# unit-sphere membership tolerance for the smoothness functionals
SPHERE_TOL = 1e-9


class LpSpace:
    """Real n-vectors under the ℓ_p norm, 1 < p < ∞.

    The exponent is a property of the space, not of individual vectors;
    every operation interprets its array arguments in this one space, so
    vectors with different underlying exponents can never be mixed by
    accident.  p = 1 and p = ∞ are rejected outright: the constructions
    here need the norm to be strictly convex and smooth away from 0.
    """

    __slots__ = ("p", "q")

    def __init__(self, p: float):
        p = float(p)
        if math.isnan(p) or not (1.0 < p < math.inf):
            raise ValueError(f"exponent must satisfy 1 < p < inf, got {p!r}")
        self.p = p
        self.q = p / (p - 1.0)

    def __repr__(self):
        return f"LpSpace(p={self.p!r})"

    def dual(self) -> "LpSpace":
        """The dual space ℓ_q with q = p/(p-1)."""
        return LpSpace(self.q)

    # -- norms -----------------------------------------------------------

    @staticmethod
    def _power_norm(x: np.ndarray, expo: float) -> float:
        # scale by the max entry so |x_i/m| <= 1 before exponentiation
        m = float(np.max(np.abs(x))) if x.size else 0.0
        if m == 0.0 or not math.isfinite(m):
            return m
        return float(m * np.sum(np.abs(x / m) ** expo) ** (1.0 / expo))

    def norm(self, x) -> float:
        """ℓ_p norm of a primal vector."""
        return self._power_norm(np.asarray(x, dtype=float), self.p)

    def dual_norm(self, phi) -> float:
        """ℓ_q norm of a dual vector (q conjugate to p)."""
        return self._power_norm(np.asarray(phi, dtype=float), self.q)

    def unit(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        nx = self.norm(x)
        if nx == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return x / nx

    # -- pairing and duality mappings ------------------------------------

    def pairing(self, phi, x) -> float:
        """Duality pairing ⟨φ, x⟩ between a dual and a primal vector."""
        phi = np.asarray(phi, dtype=float)
        x = np.asarray(x, dtype=float)
        if phi.shape != x.shape:
            raise ValueError(
                f"dimension mismatch in pairing: {phi.shape} vs {x.shape}"
            )
        return float(np.dot(phi, x))

    def _gradient_like(self, x: np.ndarray, expo: float) -> np.ndarray:
        # common body of J and its inverse:  n * (|x|/n)^(e-1) * sign(x)
        nx = self._power_norm(x, expo)
        if nx == 0.0:
            return np.zeros_like(x)
        scaled = np.abs(x) / nx
        return nx * scaled ** (expo - 1.0) * np.sign(x)

    def duality_map(self, x) -> np.ndarray:
        """Normalized duality mapping J: ⟨Jx, x⟩ = ‖x‖², ‖Jx‖_* = ‖x‖.

        J(θ) is the zero functional, the only choice consistent with the
        two identities above.
        """
        return self._gradient_like(np.asarray(x, dtype=float), self.p)

    def inverse_duality_map(self, phi) -> np.ndarray:
        """Inverse mapping J* from the dual space back to the primal one.

        Same formula with q in place of p; J*(Jx) = x for every x.
        """
        return self._gradient_like(np.asarray(phi, dtype=float), self.q)

    # -- smoothness functionals -------------------------------------------

    def _require_unit(self, z: np.ndarray, name: str) -> None:
        nz = self.norm(z)
        if abs(nz - 1.0) > SPHERE_TOL:
            raise ValueError(
                f"{name} must lie on the unit sphere (|norm - 1| <= {SPHERE_TOL:g}); "
                f"got norm {nz!r}"
            )

    def norm_smoothness(self, x, v) -> float:
        """One-sided derivative of t ↦ ‖x + t v‖ at t = 0, for unit x, v.

        Equals ⟨Jx, v⟩ because the norm is differentiable on the sphere;
        the closed form is validated against the raw quotient in the test
        suite.  Inputs are required on the sphere and are not silently
        renormalized.
        """
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.shape != v.shape:
            raise ValueError("point and direction must have matching shapes")
        self._require_unit(x, "base point")
        self._require_unit(v, "direction")
        return self.pairing(self.duality_map(x), v)

    def duality_smoothness(self, x, v, schedule: StepSchedule | None = None) -> float:
        """One-sided derivative of t ↦ ⟨J(x + t v), x⟩ at t = 0, unit x, v.

        Evaluated numerically: quotients over the schedule, a convergence
        window, and one Richardson step.  A sequence that never settles
        raises ConvergenceError — a value is never invented.  On the unit
        sphere this functional satisfies the split identity

            ‖x + t v‖ derivative  =  (⟨Jx, v⟩ + ⟨J·, x⟩ derivative) / 2,

        which the test suite checks across exponents.
        """
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.shape != v.shape:
            raise ValueError("point and direction must have matching shapes")
        self._require_unit(x, "base point")
        self._require_unit(v, "direction")
        sched = schedule if schedule is not None else StepSchedule()

        base = self.pairing(self.duality_map(x), x)
        ts: list[float] = []
        quotients: list[float] = []
        hit = False
        for t in sched.t_values:
            g = (self.pairing(self.duality_map(x + t * v), x) - base) / t
            ts.append(t)
            quotients.append(g)
            if len(quotients) >= sched.window:
                recent = quotients[-sched.window:]
                spread = max(recent) - min(recent)
                if spread < sched.quotient_tol:
                    hit = True
                    break
        if not hit:
            raise ConvergenceError(
                "duality smoothness quotients did not settle within the schedule",
                trace=list(zip(ts, quotients)),
            )
        ratio = ts[-2] / ts[-1]
        extrap = (ratio * quotients[-1] - quotients[-2]) / (ratio - 1.0)
        if abs(extrap - quotients[-1]) > 10.0 * sched.quotient_tol:
            return quotients[-1]
        return extrap
