"""Bar-and-flywheel reference models with closed-form momentum.

Two variants of the same machine.  In both, a bar spins freely in the
plane and carries a flywheel driven relative to it.

* pinned: the flywheel spins about the bar's center.  Angular momentum
  is H = (I_B + I_F) theta_dot + I_F phi_dot, and under H = 0 the sum
  theta + I_F/(I_B + I_F) * phi is a conserved whole-body angle.  The
  connection is exact, so this variant is the integrable ground truth.
* slotted: the flywheel also slides along a slot in the bar, offset d
  from the center.  H picks up the reduced-mass term mu d^2 and the
  connection row depends on d, which spoils integrability: closed loops
  in (d, phi) rotate the bar by a computable holonomy.

Everything here is closed form or plain quadrature, which makes this
module the oracle for the 3D pipeline: `bar_flywheel_model` embeds either
variant as a kinematic tree whose centroidal quantities must agree with
the formulas above to machine precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractViolationError, DegenerateGridError
from .model import parse_model

__all__ = [
    "BarFlywheelParams",
    "PlanarState",
    "PlanarPsiFunction",
    "PlanarTrajectory",
    "DriftStats",
    "DEFAULT_PSI_TERMS",
    "planar_cam",
    "planar_connection",
    "exact_psi_rel",
    "fit_planar_psi",
    "psi_fit_residual",
    "reconstruct_bar_angle",
    "wbo_drift",
    "reorientation_cycle",
    "closed_form_cycle_rotation",
    "sinusoid_trajectory",
    "bar_flywheel_model_dict",
    "bar_flywheel_model",
]

# psi-candidate monomials in (d, phi): d^2 phi, d^2 phi^3, phi, phi^3
DEFAULT_PSI_TERMS = ((2, 1), (2, 3), (0, 1), (0, 3))


@dataclass(frozen=True)
class BarFlywheelParams:
    inertia_bar: float
    inertia_flywheel: float
    mass_bar: float
    mass_flywheel: float
    bar_length: float
    slotted: bool = False

    def __post_init__(self):
        for label in ("inertia_bar", "inertia_flywheel", "mass_bar",
                      "mass_flywheel", "bar_length"):
            if not getattr(self, label) > 0.0:
                raise ContractViolationError(f"{label} must be positive")

    @cached_property
    def reduced_mass(self):
        """mu = m_B m_F / (m_B + m_F); the slot's effective point mass."""
        return self.mass_bar * self.mass_flywheel / (
            self.mass_bar + self.mass_flywheel
        )


@dataclass(frozen=True)
class PlanarState:
    """Bar angle, slot offset, flywheel angle, and their rates."""

    theta: float = 0.0
    d: float = 0.0
    phi: float = 0.0
    theta_dot: float = 0.0
    d_dot: float = 0.0
    phi_dot: float = 0.0


def _check_offset(params, d):
    half = params.bar_length / 2.0
    if np.any(np.abs(d) > half * (1.0 + 1e-12)):
        raise ContractViolationError(
            f"slot offset exceeds the slot length: |d| must stay within {half}"
        )


def planar_cam(params, state):
    """Angular momentum about the system CoM, kg m^2/s.

    The slide rate never appears: sliding moves the CoM but carries no
    angular momentum about it.
    """
    locked = params.inertia_bar + params.inertia_flywheel
    if params.slotted:
        _check_offset(params, state.d)
        locked += params.reduced_mass * state.d * state.d
    return locked * state.theta_dot + params.inertia_flywheel * state.phi_dot


def planar_connection(params, d=0.0):
    """Row mapping joint rates to the bar rate that keeps H = 0 (negated).

    Slotted: [0, I_F / (I_B + I_F + mu d^2)] over (d_dot, phi_dot).
    Pinned: the single entry I_F / (I_B + I_F) over phi_dot.
    """
    if not params.slotted:
        return np.array(
            [params.inertia_flywheel / (params.inertia_bar + params.inertia_flywheel)]
        )
    _check_offset(params, d)
    denom = (
        params.inertia_bar
        + params.inertia_flywheel
        + params.reduced_mass * float(d) ** 2
    )
    return np.array([0.0, params.inertia_flywheel / denom])


def exact_psi_rel(params, phi):
    """The conserved-angle offset of the pinned variant: I_F/(I_B+I_F) phi."""
    if params.slotted:
        raise ContractViolationError(
            "the slotted variant has no exact psi_rel; fit one instead"
        )
    return (
        params.inertia_flywheel
        / (params.inertia_bar + params.inertia_flywheel)
        * phi
    )


@dataclass(frozen=True)
class PlanarPsiFunction:
    """psi(d, phi) = sum_k c_k d^a_k phi^b_k with integer exponent pairs."""

    terms: tuple = DEFAULT_PSI_TERMS
    coefficients: tuple = (0.0,) * len(DEFAULT_PSI_TERMS)

    def __post_init__(self):
        if len(self.terms) != len(self.coefficients):
            raise ContractViolationError("one coefficient per term")
        for a, b in self.terms:
            if a < 0 or b < 0:
                raise ContractViolationError("exponents must be non-negative")

    def value(self, d, phi):
        d = np.asarray(d, dtype=float)
        phi = np.asarray(phi, dtype=float)
        total = np.zeros(np.broadcast(d, phi).shape)
        for (a, b), c in zip(self.terms, self.coefficients):
            total = total + c * d**a * phi**b
        return total if total.shape else float(total)

    def gradient(self, d, phi):
        """(d psi/dd, d psi/dphi), broadcasting over array inputs."""
        d = np.asarray(d, dtype=float)
        phi = np.asarray(phi, dtype=float)
        shape = np.broadcast(d, phi).shape
        gd = np.zeros(shape)
        gp = np.zeros(shape)
        for (a, b), c in zip(self.terms, self.coefficients):
            if a > 0:
                gd = gd + c * a * d ** (a - 1) * phi**b
            if b > 0:
                gp = gp + c * b * d**a * phi ** (b - 1)
        if shape:
            return gd, gp
        return float(gd), float(gp)


def _default_grid(params):
    half = params.bar_length / 2.0
    d_vals = np.linspace(-half, half, 41) if params.slotted else np.array([0.0])
    phi_vals = np.linspace(-np.pi / 2.0, np.pi / 2.0, 41)
    return d_vals, phi_vals


def _grid_points(params, grid):
    d_vals, phi_vals = grid if grid is not None else _default_grid(params)
    d_vals = np.atleast_1d(np.asarray(d_vals, dtype=float))
    phi_vals = np.atleast_1d(np.asarray(phi_vals, dtype=float))
    if d_vals.size == 0 or phi_vals.size == 0:
        raise DegenerateGridError("empty fitting grid")
    _check_offset(params, d_vals)
    dd, pp = np.meshgrid(d_vals, phi_vals, indexing="ij")
    return dd.ravel(), pp.ravel()


def _connection_targets(params, d):
    """Per-point (target d-partial, target phi-partial) of psi."""
    if params.slotted:
        denom = (
            params.inertia_bar
            + params.inertia_flywheel
            + params.reduced_mass * d * d
        )
    else:
        denom = np.full_like(d, params.inertia_bar + params.inertia_flywheel)
    return np.zeros_like(d), params.inertia_flywheel / denom


def _gradient_design(terms, d, phi):
    """Rows: all d-partials then all phi-partials, one column per term."""
    n = d.size
    design = np.zeros((2 * n, len(terms)))
    for k, (a, b) in enumerate(terms):
        if a > 0:
            design[:n, k] = a * d ** (a - 1) * phi**b
        if b > 0:
            design[n:, k] = b * d**a * phi ** (b - 1)
    return design


def fit_planar_psi(params, grid=None, terms=DEFAULT_PSI_TERMS):
    """Least-squares match of grad psi to the connection row over a grid.

    Linear in the coefficients, solved in closed form.  Terms that the
    grid cannot identify (e.g. d-weighted terms on a d = 0 grid) take the
    minimum-norm value zero; a grid that identifies nothing is an error.
    """
    d, phi = _grid_points(params, grid)
    target_d, target_phi = _connection_targets(params, d)
    design = _gradient_design(terms, d, phi)
    rhs = np.concatenate([target_d, target_phi])
    coeffs, _, rank, _ = np.linalg.lstsq(design, rhs, rcond=None)
    if rank == 0:
        raise DegenerateGridError(
            "fitting grid identifies no coefficient (all gradients vanish)"
        )
    return PlanarPsiFunction(tuple(terms), tuple(float(c) for c in coeffs))


def psi_fit_residual(params, psi, grid=None):
    """Mean squared gradient mismatch of a candidate psi over a grid."""
    d, phi = _grid_points(params, grid)
    target_d, target_phi = _connection_targets(params, d)
    gd, gp = psi.gradient(d, phi)
    return float(np.mean((gd - target_d) ** 2 + (gp - target_phi) ** 2))


@dataclass(frozen=True)
class PlanarTrajectory:
    """Joint-space path (d(t), phi(t)) with rates, as array-ready callables."""

    span: tuple
    d: callable
    phi: callable
    d_dot: callable
    phi_dot: callable

    def state(self, t, theta=0.0, theta_dot=0.0):
        return PlanarState(
            theta=theta,
            d=float(self.d(t)),
            phi=float(self.phi(t)),
            theta_dot=theta_dot,
            d_dot=float(self.d_dot(t)),
            phi_dot=float(self.phi_dot(t)),
        )


def reconstruct_bar_angle(params, trajectory, theta0=0.0, step=1e-4):
    """Integrate theta under H = 0; returns (times, theta at each time).

    theta_dot = -A(d) [d_dot; phi_dot] does not involve theta, so classical
    RK4 with stage evaluations at t, t + h/2, t + h reduces to Simpson's
    rule per step; it is evaluated vectorized over all steps at once.
    """
    t0, t1 = trajectory.span
    if not t1 > t0:
        raise ContractViolationError("trajectory span must have positive length")
    n = max(1, int(math.ceil((t1 - t0) / step)))
    times = np.linspace(t0, t1, n + 1)
    h = (t1 - t0) / n

    def rate(t):
        d = np.asarray(trajectory.d(t), dtype=float)
        phi_dot = np.asarray(trajectory.phi_dot(t), dtype=float)
        if params.slotted:
            _check_offset(params, d)
            denom = (
                params.inertia_bar
                + params.inertia_flywheel
                + params.reduced_mass * d * d
            )
        else:
            denom = params.inertia_bar + params.inertia_flywheel
        return -params.inertia_flywheel * phi_dot / denom

    ends = rate(times)
    mids = rate(times[:-1] + h / 2.0)
    increments = (h / 6.0) * (ends[:-1] + 4.0 * mids + ends[1:])
    theta = np.empty(n + 1)
    theta[0] = theta0
    theta[1:] = theta0 + np.cumsum(increments)
    return times, theta


@dataclass(frozen=True)
class DriftStats:
    """How far theta + psi(d, phi) wanders from its initial value.

    final_abs is the closed-loop holonomy when the trajectory is a cycle;
    max_abs and rms measure wander along the way.  A better psi shrinks
    max_abs and rms, but final_abs over a closed cycle is invariant: no
    configuration function can cancel a loop integral.
    """

    final_abs: float
    max_abs: float
    rms: float


def wbo_drift(params, psi, trajectory, theta0=0.0, step=1e-4):
    """Drift statistics of the whole-body angle theta + psi along a path.

    psi may be None for the bare-bar baseline (psi identically zero).
    """
    times, theta = reconstruct_bar_angle(params, trajectory, theta0, step)
    if psi is None:
        wbo_angle = theta
    else:
        wbo_angle = theta + psi.value(trajectory.d(times), trajectory.phi(times))
    drift = wbo_angle - wbo_angle[0]
    return DriftStats(
        final_abs=float(abs(drift[-1])),
        max_abs=float(np.max(np.abs(drift))),
        rms=float(np.sqrt(np.mean(drift * drift))),
    )


def _smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


def _smoothstep_rate(u):
    return 6.0 * u * (1.0 - u)


def reorientation_cycle(params, segment_time=1.0):
    """The closed rectangle in (d, phi) that rotates the slotted bar.

    Four legs of equal duration: slide out to d = l/2, spin the flywheel
    to phi = pi/2, slide back to d = 0, spin back to phi = 0.  Each leg
    eases in and out, so rates are continuous at the corners.  The net
    bar rotation after the loop is closed_form_cycle_rotation(params).
    """
    if not params.slotted:
        raise ContractViolationError(
            "the reorientation cycle needs the slotted variant"
        )
    if not segment_time > 0.0:
        raise ContractViolationError("segment_time must be positive")
    half = params.bar_length / 2.0
    quarter = np.pi / 2.0

    # (d start, d end, phi start, phi end) per leg
    legs = np.array(
        [
            [0.0, half, 0.0, 0.0],
            [half, half, 0.0, quarter],
            [half, 0.0, quarter, quarter],
            [0.0, 0.0, quarter, 0.0],
        ]
    )

    def _eval(t, start_col, end_col, rate=False):
        t = np.asarray(t, dtype=float)
        leg = np.clip((t / segment_time).astype(int), 0, 3)
        u = np.clip(t / segment_time - leg, 0.0, 1.0)
        a = legs[leg, start_col]
        b = legs[leg, end_col]
        if rate:
            return (b - a) * _smoothstep_rate(u) / segment_time
        return a + (b - a) * _smoothstep(u)

    return PlanarTrajectory(
        span=(0.0, 4.0 * segment_time),
        d=lambda t: _eval(t, 0, 1),
        phi=lambda t: _eval(t, 2, 3),
        d_dot=lambda t: _eval(t, 0, 1, rate=True),
        phi_dot=lambda t: _eval(t, 2, 3, rate=True),
    )


def closed_form_cycle_rotation(params):
    """Net bar rotation over one reorientation cycle, rad.

    Only the two spin legs move phi; they see different d, hence
    different connection values, and the difference is the holonomy:
    (pi/2) (I_F/(I_B+I_F) - I_F/(I_B+I_F+mu l^2/4)).  Positive, so the
    loop rotates the bar counter-clockwise.
    """
    if not params.slotted:
        raise ContractViolationError("holonomy needs the slotted variant")
    i_sum = params.inertia_bar + params.inertia_flywheel
    offset = params.reduced_mass * (params.bar_length / 2.0) ** 2
    return (np.pi / 2.0) * (
        params.inertia_flywheel / i_sum
        - params.inertia_flywheel / (i_sum + offset)
    )


def sinusoid_trajectory(params, span, phi_amp, phi_freq, d_amp=0.0, d_freq=0.0,
                        phi_phase=0.0, d_phase=0.0):
    """Smooth test motion: sinusoids in phi and (optionally) d."""
    if d_amp != 0.0:
        if not params.slotted:
            raise ContractViolationError("d motion needs the slotted variant")
        _check_offset(params, d_amp)
    w_phi = 2.0 * np.pi * phi_freq
    w_d = 2.0 * np.pi * d_freq
    return PlanarTrajectory(
        span=span,
        d=lambda t: d_amp * np.sin(w_d * np.asarray(t) + d_phase),
        phi=lambda t: phi_amp * np.sin(w_phi * np.asarray(t) + phi_phase),
        d_dot=lambda t: d_amp * w_d * np.cos(w_d * np.asarray(t) + d_phase),
        phi_dot=lambda t: phi_amp * w_phi * np.cos(w_phi * np.asarray(t) + phi_phase),
    )


def bar_flywheel_model_dict(params, spin_limit=0.05):
    """The same machine as a 3D kinematic tree, JSON-ready.

    The bar is the floating base: a thin rod along x with spin inertia
    I_B about z.  The flywheel is a lamina with spin inertia I_F.  The
    slotted variant inserts a massless carriage on a prismatic x joint,
    and the flywheel spins about z on top of it; every axis is x or z,
    so all motion stays in the plane and the tree's centroidal momentum
    reduces exactly to the closed forms above.

    spin_limit bounds the flywheel coordinate to +- that many radians.
    The default is deliberately small: fitted quaternions must keep
    their scalar part above 0.5, which caps |psi_rel| at pi/3, and on a
    small range a cubic vector part reproduces the pinned variant's
    exact psi_rel = c phi to machine precision (its true quaternion has
    z = sin(c phi / 2), polynomial in no range, nearly cubic here).
    """
    if not spin_limit > 0.0:
        raise ContractViolationError("spin_limit must be positive")
    half = params.bar_length / 2.0
    bar = {
        "name": "bar",
        "mass": params.mass_bar,
        "com": [0.0, 0.0, 0.0],
        "inertia": {
            "xx": 0.0,
            "yy": params.inertia_bar,
            "zz": params.inertia_bar,
            "xy": 0.0,
            "xz": 0.0,
            "yz": 0.0,
        },
    }
    flywheel = {
        "name": "flywheel",
        "mass": params.mass_flywheel,
        "com": [0.0, 0.0, 0.0],
        "inertia": {
            "xx": params.inertia_flywheel / 2.0,
            "yy": params.inertia_flywheel / 2.0,
            "zz": params.inertia_flywheel,
            "xy": 0.0,
            "xz": 0.0,
            "yz": 0.0,
        },
    }
    spin_limits = [-float(spin_limit), float(spin_limit)]
    if not params.slotted:
        return {
            "root": "bar",
            "links": [bar, flywheel],
            "joints": [
                {
                    "name": "spin",
                    "kind": "revolute",
                    "parent": "bar",
                    "child": "flywheel",
                    "axis": [0.0, 0.0, 1.0],
                    "limits": spin_limits,
                }
            ],
        }
    carriage = {
        "name": "carriage",
        "mass": 0.0,
        "com": [0.0, 0.0, 0.0],
        "inertia": {
            "xx": 0.0, "yy": 0.0, "zz": 0.0, "xy": 0.0, "xz": 0.0, "yz": 0.0,
        },
    }
    return {
        "root": "bar",
        "links": [bar, carriage, flywheel],
        "joints": [
            {
                "name": "slide",
                "kind": "prismatic",
                "parent": "bar",
                "child": "carriage",
                "axis": [1.0, 0.0, 0.0],
                "limits": [-half, half],
            },
            {
                "name": "spin",
                "kind": "revolute",
                "parent": "carriage",
                "child": "flywheel",
                "axis": [0.0, 0.0, 1.0],
                "limits": spin_limits,
            },
        ],
    }


def bar_flywheel_model(params, spin_limit=0.05):
    """Parsed-and-validated tree form of the machine."""
    return parse_model(json.dumps(bar_flywheel_model_dict(params, spin_limit)))
