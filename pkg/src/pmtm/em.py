"""Maximum-likelihood eigen-spectrum estimation by EM with a Laplace E-step."""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .auxstats import AuxStatistic
from .exceptions import DegenerateOffsetError, InfeasiblePointError, InputError, NumericalError
from .model import DesignMatrix, LatentPosterior, SpectralParams

logger = logging.getLogger(__name__)


@dataclass
class EmConfig:
    """Iteration limits and tolerances of the EM and Newton loops.

    ``boundary_margin`` clamps degenerate offsets away from {0, 1} and sets
    the final barrier weight: an active rate constraint is held roughly
    ``boundary_margin`` inside the feasible set.
    """

    max_em_iters: int = 50
    em_tol: float = 1e-4
    max_newton_iters: int = 100
    newton_grad_tol: float = 1e-6
    newton_decrement_tol: float = 1e-9
    armijo_c: float = 1e-4
    backtrack_ratio: float = 0.5
    boundary_margin: float = 1e-8
    initial_theta: float = 1e-2
    barrier_growth: float = 100.0
    fraction_to_boundary: float = 0.99

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.max_em_iters < 1 or self.max_newton_iters < 1:
            raise InputError("iteration limits must be positive")
        for name in ("em_tol", "newton_grad_tol", "newton_decrement_tol", "initial_theta"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        for name in ("armijo_c", "backtrack_ratio", "fraction_to_boundary"):
            if not 0 < getattr(self, name) < 1:
                raise InputError(f"{name} must lie in (0, 1)")
        if not 0 < self.boundary_margin < 1e-3:
            raise InputError("boundary_margin must lie in (0, 1e-3)")
        if not self.barrier_growth > 1:
            raise InputError("barrier_growth must exceed 1")

    @classmethod
    def from_dict(cls, d: dict) -> "EmConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown EM config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class NewtonRun:
    """One damped-Newton centering run at a fixed barrier weight."""

    barrier_weight: float
    objective: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


@dataclass
class EmIteration:
    log_likelihood: float
    theta_change: float
    newton_iterations: int
    active_constraints: int
    jitter: float = 0.0
    newton_runs: list = field(default_factory=list)


@dataclass
class EmTrace:
    iterations: list = field(default_factory=list)
    converged: bool = False
    offset_clamps: int = 0

    def __len__(self):
        return len(self.iterations)

    def to_dict(self, include_newton: bool = False) -> dict:
        rows = []
        for it in self.iterations:
            row = {
                "log_likelihood": it.log_likelihood,
                "theta_change": it.theta_change,
                "newton_iterations": it.newton_iterations,
                "active_constraints": it.active_constraints,
                "jitter": it.jitter,
            }
            if include_newton:
                row["newton_runs"] = [asdict(r) for r in it.newton_runs]
            rows.append(row)
        return {"converged": self.converged, "offset_clamps": self.offset_clamps,
                "iterations": rows}


def _as_variances(theta) -> np.ndarray:
    return theta.variances if isinstance(theta, SpectralParams) else np.asarray(theta, dtype=float)


def _rates(z, aux: AuxStatistic, design: DesignMatrix, offsets=None) -> np.ndarray:
    mu = aux.offsets if offsets is None else offsets
    return mu + design @ np.asarray(z, dtype=float)


def _check_interior(p):
    if not np.all((p > 0) & (p < 1)):
        bad = int(np.count_nonzero((p <= 0) | (p >= 1)))
        raise InfeasiblePointError(f"{bad} rates outside (0, 1)")


def _data_terms(p, counts, trials):
    # elementwise log-likelihood, first and second derivatives in p;
    # zero counts contribute no log term so boundary points stay finite
    miss = trials - counts
    ll = np.where(counts > 0, counts * np.log(np.where(counts > 0, p, 1.0)), 0.0)
    ll = ll + np.where(miss > 0, miss * np.log1p(-np.where(miss > 0, p, 0.0)), 0.0)
    d1 = counts / p - miss / (1 - p)
    d2 = counts / p**2 + miss / (1 - p) ** 2
    return ll, d1, d2


def complete_log_likelihood(z, theta, aux: AuxStatistic, design: DesignMatrix, offsets=None) -> float:
    """Bernoulli log-likelihood of the statistics plus the Gaussian prior on z.

    The prior contributes -z_m^2 / (2 theta_m) - log(theta_m) / 2 per
    coefficient; the truncation normalizer and constants are omitted.
    """
    th = _as_variances(theta)
    z = np.asarray(z, dtype=float)
    p = _rates(z, aux, design, offsets)
    _check_interior(p)
    ll, _, _ = _data_terms(p, aux.counts, aux.trial_count)
    return float(ll.sum() - np.sum(z**2 / (2 * th) + 0.5 * np.log(th)))


def log_likelihood_gradient(z, theta, aux, design, offsets=None) -> np.ndarray:
    th = _as_variances(theta)
    z = np.asarray(z, dtype=float)
    p = _rates(z, aux, design, offsets)
    _check_interior(p)
    _, d1, _ = _data_terms(p, aux.counts, aux.trial_count)
    return design.rmatvec(d1) - z / th


def log_likelihood_hessian(z, theta, aux, design, offsets=None) -> np.ndarray:
    """Hessian in z; negative definite on the interior of the feasible set."""
    th = _as_variances(theta)
    p = _rates(z, aux, design, offsets)
    _check_interior(p)
    _, _, d2 = _data_terms(p, aux.counts, aux.trial_count)
    H = -design.weighted_gram(d2)
    H[np.diag_indices_from(H)] -= 1.0 / th
    return H


def _cholesky(neg_hessian, jitter_start=1e-10, jitter_max=1e-6):
    """Cholesky of a (numerically) positive-definite matrix, adding jitter if needed."""
    jitter = 0.0
    while True:
        try:
            mat = neg_hessian if jitter == 0 else neg_hessian + jitter * np.eye(len(neg_hessian))
            return linalg.cho_factor(mat, lower=True, check_finite=False), jitter
        except linalg.LinAlgError:
            jitter = jitter_start if jitter == 0 else 2 * jitter
            if jitter > jitter_max:
                raise NumericalError("negative Hessian is not positive definite") from None


def laplace_covariance(z, theta, aux, design, offsets=None) -> tuple[np.ndarray, float]:
    """Inverse negative Hessian at ``z`` and the jitter used to factor it."""
    neg = -log_likelihood_hessian(z, theta, aux, design, offsets)
    (c, lower), jitter = _cholesky(neg)
    inv, info = lapack.dpotri(c, lower=1)
    if info != 0:
        raise NumericalError(f"covariance inversion failed (info={info})")
    cov = np.tril(inv)
    cov += cov.T
    cov[np.diag_indices_from(cov)] *= 0.5
    return cov, jitter


class _Objective:
    """E-step objective with a log barrier on both rate bounds.

    f(z) = sum_k [c_k log p_k + (L - c_k) log(1 - p_k)] - sum_m z_m^2 / (2 theta_m)
           + (1 / t) sum_k [log p_k + log(1 - p_k)],   p = mu + A z.
    """

    def __init__(self, theta, aux, design, offsets):
        self.inv_theta = 1.0 / theta
        self.counts = aux.counts
        self.trials = aux.trial_count
        self.design = design
        self.offsets = offsets

    def rates(self, z):
        return self.offsets + self.design @ z

    def value(self, z, t, p=None):
        p = self.rates(z) if p is None else p
        if not np.all((p > 0) & (p < 1)):
            return -np.inf
        ll, _, _ = _data_terms(p, self.counts, self.trials)
        barrier = np.sum(np.log(p) + np.log1p(-p)) / t
        return float(ll.sum() - 0.5 * np.sum(z**2 * self.inv_theta) + barrier)

    def derivatives(self, z, t, p):
        _, d1, d2 = _data_terms(p, self.counts, self.trials)
        d1 = d1 + (1 / p - 1 / (1 - p)) / t
        d2 = d2 + (1 / p**2 + 1 / (1 - p) ** 2) / t
        grad = self.design.rmatvec(d1) - z * self.inv_theta
        neg_hess = self.design.weighted_gram(d2)
        neg_hess[np.diag_indices_from(neg_hess)] += self.inv_theta
        return grad, neg_hess


def _max_feasible_step(p, dp, fraction):
    """Largest step keeping a fixed fraction of every slack to 0 and 1."""
    step = np.inf
    down = dp < 0
    if np.any(down):
        step = min(step, np.min(p[down] / -dp[down]))
    up = dp > 0
    if np.any(up):
        step = min(step, np.min((1 - p[up]) / dp[up]))
    return min(1.0, fraction * step)


def _center(obj: _Objective, z, t, cfg: EmConfig) -> tuple[np.ndarray, NewtonRun, float]:
    """Damped Newton with fraction-to-boundary cap and Armijo backtracking."""
    run = NewtonRun(barrier_weight=t)
    p = obj.rates(z)
    f = obj.value(z, t, p)
    run.objective.append(f)
    max_jitter = 0.0
    for _ in range(cfg.max_newton_iters):
        grad, neg_hess = obj.derivatives(z, t, p)
        if np.linalg.norm(grad) < cfg.newton_grad_tol:
            run.converged = True
            break
        factor, jitter = _cholesky(neg_hess)
        max_jitter = max(max_jitter, jitter)
        d = linalg.cho_solve(factor, grad, check_finite=False)
        decrement = float(grad @ d)
        if decrement / 2 < cfg.newton_decrement_tol:
            run.converged = True
            break
        dp = obj.design @ d
        step = _max_feasible_step(p, dp, cfg.fraction_to_boundary)
        slope = decrement
        while True:
            z_new = z + step * d
            p_new = obj.rates(z_new)
            f_new = obj.value(z_new, t, p_new)
            if f_new >= f + cfg.armijo_c * step * slope:
                break
            step *= cfg.backtrack_ratio
            if step < 1e-16:
                break
        if not f_new >= f:
            # no ascent possible at working precision
            run.converged = True
            break
        z, p, f = z_new, p_new, f_new
        run.iterations += 1
        run.objective.append(f)
        if not np.all((p > 0) & (p < 1)):
            raise InfeasiblePointError("Newton iterate left the feasible set")
    return z, run, max_jitter


def _final_barrier_weight(aux: AuxStatistic, cfg: EmConfig) -> float:
    return 1.0 / (cfg.boundary_margin * max(aux.trial_count, 1))


def clamp_offsets(aux: AuxStatistic, cfg: EmConfig) -> tuple[np.ndarray, int]:
    """Offsets pushed into [margin, 1 - margin] so that z = 0 is strictly feasible."""
    eps = cfg.boundary_margin
    mu = np.clip(aux.offsets, eps, 1 - eps)
    clamped = int(np.count_nonzero(mu != aux.offsets))
    if clamped:
        warnings.warn(f"taper {aux.taper_index}: clamped {clamped} degenerate offsets into "
                      f"[{eps:g}, {1 - eps:g}]", RuntimeWarning, stacklevel=3)
    if not np.all((mu > 0) & (mu < 1)):
        raise DegenerateOffsetError("offsets admit no interior starting point")
    return mu, clamped


def e_step_mode(theta, aux: AuxStatistic, design: DesignMatrix, cfg: EmConfig | None = None,
                warm_start=None, offsets=None, record: EmIteration | None = None) -> LatentPosterior:
    """Posterior mode over the feasible set and its Laplace covariance.

    Without a warm start the barrier weight is increased geometrically from
    1 to its final value, re-centering after each increase; a warm start
    from a nearby mode centers at the final weight directly.
    """
    cfg = cfg or EmConfig()
    th = _as_variances(theta)
    if offsets is None:
        offsets, _ = clamp_offsets(aux, cfg)
    obj = _Objective(th, aux, design, offsets)
    t_final = _final_barrier_weight(aux, cfg)
    if warm_start is not None and np.isfinite(obj.value(np.asarray(warm_start, float), t_final)):
        z = np.array(warm_start, dtype=float)
        t = t_final
    else:
        z = np.zeros(design.param_count)
        t = min(1.0, t_final)
    runs, jitter = [], 0.0
    while True:
        z, run, jit = _center(obj, z, t, cfg)
        runs.append(run)
        jitter = max(jitter, jit)
        if t >= t_final:
            break
        t = min(t * cfg.barrier_growth, t_final)
    cov, jit = laplace_covariance(z, th, aux, design, offsets)
    jitter = max(jitter, jit)
    if record is not None:
        p = obj.rates(z)
        record.newton_runs = runs
        record.newton_iterations = sum(r.iterations for r in runs)
        record.active_constraints = int(np.count_nonzero(
            (p < 100 * cfg.boundary_margin) | (p > 1 - 100 * cfg.boundary_margin)))
        record.jitter = jitter
        if jitter:
            logger.debug("taper %d: Hessian jitter %.3g", aux.taper_index, jitter)
    return LatentPosterior(z, cov)


def m_step(posterior: LatentPosterior) -> SpectralParams:
    """theta_m <- mean_m^2 + cov_mm."""
    return SpectralParams(posterior.mean**2 + np.diag(posterior.covariance))


def expected_complete_objective(theta, posterior: LatentPosterior) -> float:
    """Q(theta) = -sum_m [log(theta_m) / 2 + E[z_m^2] / (2 theta_m)], up to constants."""
    th = _as_variances(theta)
    second = posterior.mean**2 + np.diag(posterior.covariance)
    return float(-np.sum(0.5 * np.log(th) + second / (2 * th)))


def estimate_eigen_spectrum(aux: AuxStatistic, design: DesignMatrix, cfg: EmConfig | None = None,
                            initial_theta=None) -> tuple[SpectralParams, EmTrace]:
    """Alternate E- and M-steps until ||delta theta|| / ||theta|| < em_tol."""
    cfg = cfg or EmConfig()
    if aux.bin_count != design.bin_count:
        raise InputError(f"statistic has {aux.bin_count} bins, design matrix {design.bin_count}")
    offsets, clamps = clamp_offsets(aux, cfg)
    if initial_theta is None:
        theta = np.full(design.param_count, cfg.initial_theta)
    else:
        theta = _as_variances(initial_theta).copy()
    trace = EmTrace(offset_clamps=clamps)
    z = None
    for _ in range(cfg.max_em_iters):
        rec = EmIteration(np.nan, np.nan, 0, 0)
        post = e_step_mode(theta, aux, design, cfg, warm_start=z, offsets=offsets, record=rec)
        z = post.mean
        new = m_step(post).variances
        rec.log_likelihood = complete_log_likelihood(z, theta, aux, design, offsets)
        rec.theta_change = float(np.linalg.norm(new - theta) / np.linalg.norm(theta))
        trace.iterations.append(rec)
        theta = new
        if rec.theta_change < cfg.em_tol:
            trace.converged = True
            break
    return SpectralParams(theta), trace
