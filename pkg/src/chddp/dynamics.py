"""Hybrid dynamics: per-mode models and their convex relaxation over mode weights.

A model exposes ``f_a(x, u)`` for each mode ``a``. The relaxed system takes an
augmented control ``[u, p]`` with ``p`` on the probability simplex and returns
``sum_a p_a f_a(x, u)``; because it is linear in ``p`` the ``p``-columns of its
control Jacobian are the per-mode successors themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from . import kernels
from .kernels import wrap


@dataclass(frozen=True)
class ModelSpec:
    n: int
    m: int
    n_modes: int
    lower: np.ndarray  # (n_modes, m)
    upper: np.ndarray
    dt: float

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("need at least one mode")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if np.any(self.lower > self.upper):
            raise ValueError("control lower bound exceeds upper bound")

    @property
    def u_lower(self) -> np.ndarray:
        """Bounds shared by all modes (intersection of the per-mode boxes)."""
        return self.lower.max(axis=0)

    @property
    def u_upper(self) -> np.ndarray:
        return self.upper.min(axis=0)


class HybridModel:
    """Base class. Subclasses implement ``_step``/``_jac`` for one mode."""

    name = "abstract"
    spec: ModelSpec

    @property
    def n(self):
        return self.spec.n

    @property
    def m(self):
        return self.spec.m

    @property
    def n_modes(self):
        return self.spec.n_modes

    @property
    def nu(self):
        """Length of the augmented control ``[u, p]``."""
        return self.spec.m + self.spec.n_modes

    def _check_mode(self, a):
        if not (0 <= a < self.spec.n_modes):
            raise IndexError(f"mode index {a} out of range [0, {self.spec.n_modes})")

    def step_mode(self, x, u, a: int) -> np.ndarray:
        self._check_mode(a)
        out = self._step(np.asarray(x, dtype=float), np.asarray(u, dtype=float), int(a))
        out[2] = wrap(out[2])
        return out

    def step_hybrid(self, x, uhat) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        uhat = np.asarray(uhat, dtype=float)
        m = self.spec.m
        u, p = uhat[:m], uhat[m:]
        out = np.zeros(self.spec.n)
        for a in range(self.spec.n_modes):
            if p[a] != 0.0:
                out += p[a] * self._step(x, u, a)
        out[2] = wrap(out[2])
        return out

    def linearize(self, x, uhat) -> Tuple[np.ndarray, np.ndarray]:
        """Analytic ``(A, B)`` of the relaxed step at ``(x, [u, p])``."""
        x = np.asarray(x, dtype=float)
        uhat = np.asarray(uhat, dtype=float)
        n, m, na = self.spec.n, self.spec.m, self.spec.n_modes
        u, p = uhat[:m], uhat[m:]
        A = np.zeros((n, n))
        B = np.zeros((n, m + na))
        for a in range(na):
            fa = self._step(x, u, a)
            B[:, m + a] = fa
            if p[a] != 0.0:
                Aa, Ba = self._jac(x, u, a)
                A += p[a] * Aa
                B[:, :m] += p[a] * Ba
        return A, B

    def state_diff(self, x, y) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        d[2] = wrap(d[2])
        return d

    def propagate(self, x, u, a: int, steps: int) -> np.ndarray:
        """Hold ``u`` in mode ``a`` for ``steps`` steps; returns the (steps, n) states."""
        out = np.empty((steps, self.spec.n))
        for i in range(steps):
            x = self.step_mode(x, u, a)
            out[i] = x
        return out

    def params(self) -> Dict:
        return {}


class BoxPusher(HybridModel):
    """Box pushed at the midpoint of one of its four faces.

    Mode ``a`` pushes along body direction ``a * pi/2``; the push is tilted by
    ``psi`` within the motion cone, and an off-normal push turns the box at
    ``c_omega * v * sin(psi)``. Controls are ``u = (v, psi)``.
    """

    name = "box_pusher"

    def __init__(self, v_max=1.0, psi_max_deg=70.0, c_omega=2.0, dt=0.1, half_size=0.15):
        self.v_max = float(v_max)
        self.psi_max_deg = float(psi_max_deg)
        self.c_omega = float(c_omega)
        self.half_size = float(half_size)
        psi = math.radians(self.psi_max_deg)
        lo = np.tile([0.0, -psi], (4, 1))
        hi = np.tile([self.v_max, psi], (4, 1))
        self.spec = ModelSpec(n=3, m=2, n_modes=4, lower=lo, upper=hi, dt=float(dt))

    @property
    def footprint_radius(self) -> float:
        return self.half_size * math.sqrt(2.0)

    def _step(self, x, u, a):
        dt = self.spec.dt
        v, psi = u[0], u[1]
        ang = x[2] + a * (math.pi / 2.0) + psi
        return np.array(
            [
                x[0] + dt * v * math.cos(ang),
                x[1] + dt * v * math.sin(ang),
                x[2] + dt * self.c_omega * v * math.sin(psi),
            ]
        )

    def _jac(self, x, u, a):
        dt = self.spec.dt
        v, psi = u[0], u[1]
        ang = x[2] + a * (math.pi / 2.0) + psi
        c, s = math.cos(ang), math.sin(ang)
        A = np.array([[1.0, 0.0, -dt * v * s], [0.0, 1.0, dt * v * c], [0.0, 0.0, 1.0]])
        B = np.array(
            [
                [dt * c, -dt * v * s],
                [dt * s, dt * v * c],
                [dt * self.c_omega * math.sin(psi), dt * self.c_omega * v * math.cos(psi)],
            ]
        )
        return A, B

    def propagate(self, x, u, a, steps):
        self._check_mode(a)
        return kernels.propagate_box(
            float(x[0]), float(x[1]), float(x[2]), float(u[0]), float(u[1]), int(a),
            self.c_omega, self.spec.dt, int(steps),
        )

    def params(self):
        return {
            "v_max": self.v_max,
            "psi_max_deg": self.psi_max_deg,
            "c_omega": self.c_omega,
            "dt": self.spec.dt,
            "half_size": self.half_size,
        }


class DubinsGears(HybridModel):
    """Unicycle with a fixed speed per gear; the only continuous control is the turn rate."""

    name = "dubins_gears"

    def __init__(self, speeds=(0.4, 1.0, 2.0, -0.4), omega_max=1.5, dt=0.1, half_size=0.15):
        self.speeds = tuple(float(s) for s in speeds)
        self.omega_max = float(omega_max)
        self.half_size = float(half_size)
        k = len(self.speeds)
        lo = np.full((k, 1), -self.omega_max)
        hi = np.full((k, 1), self.omega_max)
        self.spec = ModelSpec(n=3, m=1, n_modes=k, lower=lo, upper=hi, dt=float(dt))

    @property
    def footprint_radius(self) -> float:
        return self.half_size * math.sqrt(2.0)

    def _step(self, x, u, a):
        dt = self.spec.dt
        s = self.speeds[a]
        return np.array(
            [x[0] + dt * s * math.cos(x[2]), x[1] + dt * s * math.sin(x[2]), x[2] + dt * u[0]]
        )

    def _jac(self, x, u, a):
        dt = self.spec.dt
        s = self.speeds[a]
        A = np.array(
            [
                [1.0, 0.0, -dt * s * math.sin(x[2])],
                [0.0, 1.0, dt * s * math.cos(x[2])],
                [0.0, 0.0, 1.0],
            ]
        )
        B = np.array([[0.0], [0.0], [dt]])
        return A, B

    def propagate(self, x, u, a, steps):
        self._check_mode(a)
        return kernels.propagate_dubins(
            float(x[0]), float(x[1]), float(x[2]), float(u[0]), self.speeds[a], self.spec.dt, int(steps)
        )

    def params(self):
        return {"speeds": list(self.speeds), "omega_max": self.omega_max, "dt": self.spec.dt,
                "half_size": self.half_size}


MODELS = {"box_pusher": BoxPusher, "dubins_gears": DubinsGears}


def make_model(name: str, params: Optional[Dict] = None) -> HybridModel:
    try:
        cls = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None
    return cls(**(params or {}))


@dataclass
class RelaxedDynamics:
    """Adapter exposing a hybrid model to the DDP solver.

    The control vector is ``[u, p]``; ``simplex`` marks the ``p`` slice.
    ``frozen`` lists control coordinates the solver must leave untouched.
    """

    model: HybridModel
    frozen: Tuple[int, ...] = ()
    lower: np.ndarray = field(init=False)
    upper: np.ndarray = field(init=False)

    def __post_init__(self):
        spec = self.model.spec
        self.lower = np.concatenate([spec.u_lower, np.zeros(spec.n_modes)])
        self.upper = np.concatenate([spec.u_upper, np.ones(spec.n_modes)])

    @property
    def n(self):
        return self.model.n

    @property
    def nu(self):
        return self.model.nu

    @property
    def simplex(self) -> slice:
        return slice(self.model.m, self.model.m + self.model.n_modes)

    def step(self, x, u):
        return self.model.step_hybrid(x, u)

    def jacobians(self, x, u):
        return self.model.linearize(x, u)

    def diff(self, x, y):
        return self.model.state_diff(x, y)
