"""Least-squares synthesis of the WBO coefficients.

The objective is the mean squared Frobenius residual between the local
connection A(q_i) and its induced approximation T(Q_i) theta J_lambda(q_i)
over a batch of sampled configurations.  T depends on theta through Q, so
the solver alternates: freeze T at the current theta, solve the linear
least-squares problem in theta exactly through its normal equations, and
repeat until the iterates settle.

The frozen-T subproblem is solved over vec(theta) without materializing
the Kronecker product: the normal matrix decomposes into blocks
(J_lambda J_lambda^T) (x) (T^T T), so it is accumulated from six weighted
Gram matrices of the stacked basis jacobian, one per unique entry of the
symmetric 3x3 weight T^T T.  Accumulation is a fixed sequence of matrix
products, which keeps refits bit-identical for identical inputs.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import basis_jacobian_batch, build_basis, eval_basis_batch
from .centroidal import local_connection_batch
from .errors import (
    ContractViolationError,
    DomainError,
    FitIterationError,
    QuaternionDomainError,
    ScalarFloorError,
    SingularNormalMatrixError,
    ToolkitError,
)
from .model import content_hash, sample_configurations
from .wbo import SCALAR_FLOOR, VECTOR_NORM_LIMIT, WboFunction

__all__ = [
    "FitSettings",
    "FitReport",
    "objective",
    "linear_step",
    "fit_wbo",
]

# Step-halving attempts when a full linear step raises the cost.
GUARD_MAX_HALVINGS = 10

# The frozen-T map's fixed point sits slightly off the true cost minimizer
# (the surrogate ignores dT/dtheta), so near convergence a proposal can
# raise the cost by a sliver no halving can remove.  If the most-halved
# candidate's relative increase is below this, that is termination at the
# fixed point, not a failure.
STATIONARY_REL_INCREASE = 1e-9

# Held-out (q, qdot) probes used for the report's residual statistics.
PROBE_COUNT = 100


@dataclass(frozen=True)
class FitSettings:
    """Sampling, regularization, and termination knobs.

    ridge is a per-sample weight: the frozen-T normal equations see
    ridge * n_samples on their diagonal, so duplicating the sample set
    leaves the minimizer unchanged.  cost_floor is relative to the
    theta = 0 cost and exists to stop immediately on exactly-integrable
    models, where the tolerance-based tests would spend extra iterations
    polishing coefficients already at machine precision.
    """

    n_samples: int = 500
    seed: int = 0
    mirror: bool = False
    degree: int = 3
    ridge: float = 1e-12
    max_iters: int = 50
    tol_theta: float = 1e-9
    tol_cost: float = 1e-10
    prune_threshold: float = 1e-8
    cost_floor: float = 1e-16

    def __post_init__(self):
        if self.n_samples < 1:
            raise ContractViolationError("n_samples must be >= 1")
        if self.degree < 1:
            raise ContractViolationError("degree must be >= 1")
        if self.ridge < 0.0:
            raise ContractViolationError("ridge must be >= 0")
        if self.max_iters < 1:
            raise ContractViolationError("max_iters must be >= 1")
        if not (self.tol_theta > 0.0 and self.tol_cost > 0.0):
            raise ContractViolationError("tolerances must be > 0")
        if self.prune_threshold < 0.0:
            raise ContractViolationError("prune_threshold must be >= 0")
        if self.cost_floor < 0.0:
            raise ContractViolationError("cost_floor must be >= 0")


@dataclass(frozen=True)
class FitReport:
    """What the solver did, in enough detail to audit a converged fit."""

    cost_trace: tuple  # objective per iterate, starting at theta = 0
    iterations: int
    converged: bool
    reason: str
    n_samples: int  # training samples actually used (after mirroring)
    probe_rms: tuple  # per-axis RMS of (A - A~) qdot on held-out probes
    probe_count: int
    probe_skipped: int  # probes outside the fitted domain, if any
    n_terms_before: int  # basis terms carrying any weight before pruning
    n_terms_after: int
    cost_before_prune: float
    cost_after_prune: float
    wall_time: float

    def to_dict(self):
        out = asdict(self)
        out["cost_trace"] = [float(c) for c in self.cost_trace]
        out["probe_rms"] = [float(r) for r in self.probe_rms]
        return out


def _quat_parts(theta, lam):
    """Vector and scalar parts at each sample; raises outside the domain.

    lam is (N, n_terms); returns v (N, 3) and s (N,).
    """
    v = lam @ theta.T
    norm2 = np.einsum("ni,ni->n", v, v)
    worst = float(np.max(norm2)) if norm2.size else 0.0
    if worst > VECTOR_NORM_LIMIT * VECTOR_NORM_LIMIT:
        raise QuaternionDomainError(
            f"vector part reaches norm {np.sqrt(worst)!r} on the sample set"
        )
    s = np.sqrt(1.0 - norm2)
    if np.min(s, initial=1.0) < SCALAR_FLOOR:
        raise ScalarFloorError(
            f"scalar part falls to {float(np.min(s))!r} on the sample set, "
            f"below the rate-map floor {SCALAR_FLOOR}"
        )
    return v, s


def _t_batch(v, s):
    """Rate maps for a batch of quaternions, (N, 3, 3).

    Same closed form as t_matrix_from_quat, vectorized:
    T = 2 R (s I - skew(v) + v v^T / s).
    """
    n = v.shape[0]
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    w = s
    rot = np.empty((n, 3, 3))
    rot[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    rot[:, 0, 1] = 2.0 * (x * y - w * z)
    rot[:, 0, 2] = 2.0 * (x * z + w * y)
    rot[:, 1, 0] = 2.0 * (x * y + w * z)
    rot[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    rot[:, 1, 2] = 2.0 * (y * z - w * x)
    rot[:, 2, 0] = 2.0 * (x * z - w * y)
    rot[:, 2, 1] = 2.0 * (y * z + w * x)
    rot[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)

    mid = np.einsum("ni,nj->nij", v, v) / s[:, None, None]
    mid[:, 0, 0] += s
    mid[:, 1, 1] += s
    mid[:, 2, 2] += s
    mid[:, 0, 1] += z
    mid[:, 0, 2] -= y
    mid[:, 1, 0] -= z
    mid[:, 1, 2] += x
    mid[:, 2, 0] += y
    mid[:, 2, 1] -= x
    return 2.0 * np.matmul(rot, mid)


def _approx_connection_batch(theta, lam, jac):
    """T(Q_i) theta J_lambda(q_i) for every sample, (N, 3, n_q)."""
    v, s = _quat_parts(theta, lam)
    t = _t_batch(v, s)
    return np.matmul(np.matmul(t, theta), jac)


def _cost(conn, theta, lam, jac):
    resid = conn - _approx_connection_batch(theta, lam, jac)
    return float(np.einsum("niq,niq->", resid, resid)) / conn.shape[0]


def _stacked_jacobians(samples):
    jac = []
    for i, sample in enumerate(samples):
        if sample.basis_jacobian is None:
            raise ContractViolationError(
                f"sample {i} has no cached basis jacobian; evaluate it first"
            )
        jac.append(np.asarray(sample.basis_jacobian, dtype=float))
    return np.stack(jac)


def _solve_frozen(jac, conn, t_frozen, ridge):
    """Minimize sum_i |A_i - T_i theta J_i|_F^2 + ridge |theta|_F^2.

    jac (N, n_l, n_q), conn (N, 3, n_q), t_frozen (N, 3, 3).  The vec
    ordering is column-major over the 3 x n_l theta, so unknown 3a + x is
    coefficient (x, a); block (a, x; b, y) of the normal matrix is
    sum_i (J_i J_i^T)[a, b] (T_i^T T_i)[x, y].
    """
    n, n_lambda, n_q = jac.shape
    tta = np.matmul(np.transpose(t_frozen, (0, 2, 1)), t_frozen)  # (N, 3, 3)
    jstack = np.transpose(jac, (0, 2, 1)).reshape(n * n_q, n_lambda)

    gram = np.zeros((n_lambda, 3, n_lambda, 3))
    for x in range(3):
        for y in range(x, 3):
            w = np.repeat(tta[:, x, y], n_q)
            block = (jstack * w[:, None]).T @ jstack
            gram[:, x, :, y] = block
            if y != x:
                gram[:, y, :, x] = block
    g = gram.reshape(3 * n_lambda, 3 * n_lambda)
    if ridge > 0.0:
        g[np.diag_indices_from(g)] += ridge

    # rows of ta_cols are the columns of T_i^T A_i, matching jstack rows
    ta = np.matmul(np.transpose(t_frozen, (0, 2, 1)), conn)  # (N, 3, n_q)
    ta_cols = np.transpose(ta, (0, 2, 1)).reshape(n * n_q, 3)
    b = (jstack.T @ ta_cols).ravel()

    if not np.all(np.isfinite(g)):
        raise SingularNormalMatrixError("normal matrix has non-finite entries")
    try:
        factor = cho_factor(g, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularNormalMatrixError(
            "normal matrix is singular; pass ridge > 0 to regularize"
        ) from exc
    theta_vec = cho_solve(factor, b, check_finite=False)
    return theta_vec.reshape(n_lambda, 3).T


def objective(samples, wbo):
    """Mean squared Frobenius residual of the connection approximation."""
    if not samples:
        raise ContractViolationError("need at least one sample")
    qs = np.stack([np.asarray(s.q, dtype=float) for s in samples])
    lam = eval_basis_batch(wbo.basis, qs)
    if all(s.basis_jacobian is not None for s in samples):
        jac = _stacked_jacobians(samples)
    else:
        jac = basis_jacobian_batch(wbo.basis, qs)
    conn = np.stack([np.asarray(s.connection, dtype=float) for s in samples])
    return _cost(conn, wbo.theta, lam, jac)


def linear_step(samples, t_frozen, ridge=0.0):
    """One frozen-T solve; samples must carry cached basis jacobians.

    ridge here is the absolute diagonal weight.  Deterministic: the
    accumulation is a fixed sequence of dense products, so identical
    inputs give identical theta down to the last bit on one platform.
    """
    if not samples:
        raise ContractViolationError("need at least one sample")
    if ridge < 0.0:
        raise ContractViolationError("ridge must be >= 0")
    jac = _stacked_jacobians(samples)
    conn = np.stack([np.asarray(s.connection, dtype=float) for s in samples])
    t_frozen = np.asarray(t_frozen, dtype=float)
    if t_frozen.shape != (len(samples), 3, 3):
        raise ContractViolationError(
            f"t_frozen must be ({len(samples)}, 3, 3), got {t_frozen.shape}"
        )
    return _solve_frozen(jac, conn, t_frozen, float(ridge))


def _probe_rms(model, wbo, settings):
    """Per-axis RMS of (A - A~) qdot on freshly drawn probes.

    Configurations come from seed + 1, joint velocities from seed + 2, so
    the probes never coincide with the training draw.  Probes that land
    outside the fitted domain are skipped and counted.
    """
    cfgs = sample_configurations(model, PROBE_COUNT, settings.seed + 1)
    rng = np.random.Generator(np.random.PCG64(settings.seed + 2))
    qdots = rng.standard_normal((len(cfgs), model.n_q))
    probes = local_connection_batch(model, cfgs)

    errors = []
    skipped = 0
    for sample, qdot in zip(probes, qdots):
        q = sample.q
        lam = eval_basis_batch(wbo.basis, q[None, :])
        jac = basis_jacobian_batch(wbo.basis, q[None, :])
        try:
            approx = _approx_connection_batch(wbo.theta, lam, jac)[0]
        except DomainError:
            skipped += 1
            continue
        errors.append((sample.connection - approx) @ qdot)
    if errors:
        err = np.stack(errors)
        rms = np.sqrt(np.mean(err * err, axis=0))
    else:
        rms = np.full(3, np.inf)
    return tuple(float(r) for r in rms), len(cfgs), skipped


def _count_active_terms(theta):
    return int(np.count_nonzero(np.any(theta != 0.0, axis=0)))


def fit_wbo(model, settings, threads=1):
    """Fit the WBO coefficients for a model; returns (WboFunction, FitReport).

    Draws the training set, caches A_i and the basis jacobians, then
    alternates frozen-T linear solves with cost checks.  A step that
    raises the cost is halved toward the previous iterate up to
    GUARD_MAX_HALVINGS times; if the cost still rises the solver stops at
    the previous iterate and says so in the report rather than looping.
    Coefficients below settings.prune_threshold are zeroed afterwards.
    """
    start = time.perf_counter()
    basis = build_basis(model.n_q, settings.degree)
    cfgs = sample_configurations(
        model, settings.n_samples, settings.seed, mirror=settings.mirror
    )
    samples = local_connection_batch(model, cfgs, threads=threads)
    n = len(samples)

    qs = np.stack([s.q for s in samples])
    lam = eval_basis_batch(basis, qs)
    jac = basis_jacobian_batch(basis, qs)
    for sample, rows in zip(samples, jac):
        sample.basis_jacobian = rows
    conn = np.stack([s.connection for s in samples])
    ridge_abs = settings.ridge * n

    theta = np.zeros((3, basis.n_terms))
    cost = _cost(conn, theta, lam, jac)  # theta = 0 is always in the domain
    initial_cost = cost
    trace = [cost]
    converged = False
    reason = f"max_iters ({settings.max_iters}) reached"
    iterations = 0

    for iteration in range(1, settings.max_iters + 1):
        iterations = iteration
        try:
            v, s = _quat_parts(theta, lam)
            proposal = _solve_frozen(jac, conn, _t_batch(v, s), ridge_abs)
        except ToolkitError as exc:
            raise FitIterationError(str(exc), iteration) from exc

        candidate = proposal
        accepted = None
        candidate_cost = np.inf
        for _ in range(GUARD_MAX_HALVINGS + 1):
            try:
                candidate_cost = _cost(conn, candidate, lam, jac)
            except DomainError:
                candidate_cost = np.inf
            if candidate_cost <= cost:
                accepted = (candidate, candidate_cost)
                break
            candidate = theta + 0.5 * (candidate - theta)
        if accepted is None:
            iterations = iteration - 1
            residual_rise = (candidate_cost - cost) / cost if cost > 0.0 else np.inf
            if residual_rise <= STATIONARY_REL_INCREASE:
                converged = True
                reason = (
                    "stationary: the frozen-T step cannot lower the cost "
                    f"(best remaining change +{residual_rise:.1e} relative)"
                )
            else:
                converged = False
                reason = (
                    f"iteration {iteration}: cost would increase even after "
                    f"{GUARD_MAX_HALVINGS} halvings; stopped at the previous iterate"
                )
            break

        new_theta, new_cost = accepted
        step = float(np.linalg.norm(new_theta - theta))
        scale = max(float(np.linalg.norm(new_theta)), float(np.linalg.norm(theta)))
        prev_cost = cost
        theta, cost = new_theta, new_cost
        trace.append(cost)

        if initial_cost > 0.0 and cost <= settings.cost_floor * initial_cost:
            converged = True
            reason = f"cost fell below {settings.cost_floor:g} of the initial value"
            break
        if step <= settings.tol_theta * max(scale, 1e-300):
            converged = True
            reason = "theta step below tolerance"
            break
        drop = (prev_cost - cost) / prev_cost if prev_cost > 0.0 else 0.0
        if drop < settings.tol_cost:
            converged = True
            reason = "cost decrease below tolerance"
            break

    n_before = _count_active_terms(theta)
    cost_before_prune = cost
    pruned = np.where(np.abs(theta) < settings.prune_threshold, 0.0, theta)
    cost_after_prune = _cost(conn, pruned, lam, jac)
    n_after = _count_active_terms(pruned)

    wbo = WboFunction(
        basis,
        pruned,
        metadata={
            "model_hash": content_hash(model),
            "fit_settings": asdict(settings),
            "prune_threshold": settings.prune_threshold,
            "sampled_limits": [
                [float(lo), float(hi)] for lo, hi in model.limits_array()
            ],
        },
    )
    probe_rms, probe_count, probe_skipped = _probe_rms(model, wbo, settings)
    report = FitReport(
        cost_trace=tuple(trace),
        iterations=iterations,
        converged=converged,
        reason=reason,
        n_samples=n,
        probe_rms=probe_rms,
        probe_count=probe_count,
        probe_skipped=probe_skipped,
        n_terms_before=n_before,
        n_terms_after=n_after,
        cost_before_prune=cost_before_prune,
        cost_after_prune=cost_after_prune,
        wall_time=time.perf_counter() - start,
    )
    return wbo, report
