"""Joint recovery of the noise law and channel transmittance.

Fits a truncated photon-number distribution b and a transmittance tau to
photocount frequencies recorded at several known efficiency settings.
The fit minimizes the summed squared deviation between measured and
modeled click probabilities plus a quadratic smoothness penalty on b,
subject to b living on the probability simplex and tau in a closed
interval.  The minimization alternates projected-gradient descent in b
with a bracketed golden-section search in tau on the profile objective;
accepted iterates never increase the objective.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .forward import NoiseDistribution, mixing_matrix, thinning_matrix
from .simulate import EmpiricalDataset

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# Projected-gradient steps allowed per profile evaluation g(tau) = min_b f(b, tau).
_PROFILE_STEPS = 400
# Projected-gradient steps allowed for the per-round polish of b.
_POLISH_STEPS = 2000
# Outer rounds (tau search + polish) before giving up.
_MAX_ROUNDS = 60
# Coarse profile-scan resolution used to bracket the tau minimum before
# golden section.  The profile can carry a narrow basin (exact data pins
# tau only through the truncated tail of b), so a plain golden section
# over the whole range may settle on the wrong slope of the valley.
_TAU_GRID = 33


@dataclass(frozen=True)
class ReconstructionProblem:
    """One reconstruction instance: data, knowns, and solver knobs.

    Args:
        etas: total efficiency of every setting, distinct, each in (0, 1].
        frequencies: per-setting click frequencies over k = 0, 1, ...;
            rows may have different lengths.
        xi: known probability that the probe photon entered the channel.
        cutoff: largest photon number of the reconstructed noise law.
        lam: weight of the smoothness penalty (>= 0).
        tau_range: closed search interval for the transmittance.
        grad_tol: projected-gradient norm below which b is converged.
        tau_tol: interval / step tolerance of the tau search.
        max_iterations: overall iteration budget for solve().
    """

    etas: tuple[float, ...]
    frequencies: tuple[tuple[float, ...], ...]
    xi: float
    cutoff: int
    lam: float = 1e-3
    tau_range: tuple[float, float] = (0.0, 1.0)
    grad_tol: float = 1e-9
    tau_tol: float = 1e-6
    max_iterations: int = 100_000
    dataset: EmpiricalDataset | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "etas", tuple(float(e) for e in self.etas))
        object.__setattr__(
            self, "frequencies", tuple(tuple(float(p) for p in row) for row in self.frequencies)
        )
        object.__setattr__(self, "tau_range", tuple(float(t) for t in self.tau_range))
        if len(self.etas) != len(self.frequencies):
            raise ValueError(
                f"got {len(self.etas)} efficiencies but {len(self.frequencies)} frequency rows"
            )
        if len(self.etas) < 2:
            raise ValueError("reconstruction needs at least two efficiency settings")
        if len(set(self.etas)) != len(self.etas):
            raise ValueError("efficiency settings must be distinct")
        for eta in self.etas:
            if not 0.0 < eta <= 1.0:
                raise ValueError(f"etas must be in (0, 1], got {eta!r}")
        for i, row in enumerate(self.frequencies):
            if len(row) == 0:
                raise ValueError(f"frequency row {i} is empty")
            arr = np.asarray(row)
            if not np.all(np.isfinite(arr)) or arr.min() < 0.0:
                raise ValueError(f"frequency row {i} must be finite and non-negative")
            if abs(arr.sum() - 1.0) > 1e-6:
                raise ValueError(f"frequency row {i} must sum to 1, got {arr.sum()!r}")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError(f"xi must be in [0, 1], got {self.xi!r}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be at least 1, got {self.cutoff!r}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be non-negative, got {self.lam!r}")
        lo, hi = self.tau_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError(f"tau_range must be an interval within [0, 1], got {self.tau_range!r}")
        if self.xi == 0.0 and lo < hi:
            raise ValueError(
                "xi = 0 leaves the transmittance and the noise brightness degenerate; "
                "either provide xi > 0 or pin tau with a zero-width tau_range"
            )
        if self.grad_tol <= 0.0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol!r}")
        if self.tau_tol <= 0.0:
            raise ValueError(f"tau_tol must be positive, got {self.tau_tol!r}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be at least 1, got {self.max_iterations!r}")

    @classmethod
    def from_dataset(cls, dataset: EmpiricalDataset, xi: float, cutoff: int, **kwargs) -> "ReconstructionProblem":
        """Build a problem from recorded histograms."""
        rows = tuple(tuple(r.frequencies) for r in dataset.records)
        etas = tuple(float(r.eta) for r in dataset.records)
        return cls(etas=etas, frequencies=rows, xi=xi, cutoff=cutoff, dataset=dataset, **kwargs)

    @classmethod
    def from_photocounts(cls, photocounts, xi: float, cutoff: int, **kwargs) -> "ReconstructionProblem":
        """Build a noiseless problem directly from exact photocount laws."""
        rows = tuple(tuple(float(p) for p in pi.probs) for pi in photocounts)
        etas = tuple(float(pi.eta) for pi in photocounts)
        return cls(etas=etas, frequencies=rows, xi=xi, cutoff=cutoff, **kwargs)

    @property
    def kmax(self) -> int:
        """Largest click number present in the data."""
        return max(len(row) for row in self.frequencies) - 1

    def frequency_matrix(self) -> np.ndarray:
        """Frequencies padded with zeros to a common (n_settings, kmax+1) shape."""
        out = np.zeros((len(self.etas), self.kmax + 1))
        for i, row in enumerate(self.frequencies):
            out[i, : len(row)] = row
        return out


@dataclass(frozen=True)
class ReconstructionResult:
    """Solver output; residuals are model minus data, per (setting, k).

    ``history`` holds the objective after every accepted outer round and
    is non-increasing by construction.
    """

    b_rec: NoiseDistribution
    tau_rec: float
    objective_value: float
    iterations: int
    converged: bool
    grad_norm: float
    residuals: np.ndarray
    history: tuple[float, ...] = ()

    def __post_init__(self):
        res = np.asarray(self.residuals, dtype=float)
        res.flags.writeable = False
        object.__setattr__(self, "residuals", res)


def project_simplex(values) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Implements the sorted-threshold rule: subtract the unique shift that
    makes the positive part sum to 1, then clip at zero.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("input must be a non-empty 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    u = np.sort(x)[::-1]
    shifted = np.cumsum(u) - 1.0
    counts = np.arange(1, x.size + 1)
    rho = np.nonzero(u * counts > shifted)[0][-1]
    theta = shifted[rho] / (rho + 1.0)
    return np.maximum(x - theta, 0.0)


def smoothness_penalty(b) -> float:
    """Sum of squared second differences of the coefficient vector."""
    arr = np.asarray(getattr(b, "probs", b), dtype=float)
    if arr.size < 3:
        return 0.0
    d2 = np.diff(arr, n=2)
    return float(d2 @ d2)


def _second_difference_matrix(n_coeffs: int) -> np.ndarray:
    if n_coeffs < 3:
        return np.zeros((0, n_coeffs))
    rows = n_coeffs - 2
    out = np.zeros((rows, n_coeffs))
    idx = np.arange(rows)
    out[idx, idx] = 1.0
    out[idx, idx + 1] = -2.0
    out[idx, idx + 2] = 1.0
    return out


class _Workspace:
    """Stacked design quantities for one problem, rebuilt lazily per tau."""

    def __init__(self, problem: ReconstructionProblem):
        self.problem = problem
        self.mix = mixing_matrix(problem.xi, problem.cutoff)
        self.diff2 = _second_difference_matrix(problem.cutoff + 1)
        self.dtd = self.diff2.T @ self.diff2
        self.data = problem.frequency_matrix().ravel()
        self.kmax = problem.kmax

    def design(self, tau: float) -> np.ndarray:
        blocks = [
            thinning_matrix(tau * eta, self.problem.cutoff + 1, k_max=self.kmax) @ self.mix
            for eta in self.problem.etas
        ]
        return np.vstack(blocks)

    def value(self, b: np.ndarray, tau: float, design: np.ndarray | None = None) -> float:
        a = self.design(tau) if design is None else design
        r = a @ b - self.data
        pen = self.diff2 @ b
        return float(r @ r + self.problem.lam * (pen @ pen))


def _coerce_b(b, cutoff: int) -> np.ndarray:
    arr = np.asarray(getattr(b, "probs", b), dtype=float)
    if arr.shape != (cutoff + 1,):
        raise ValueError(
            f"coefficient vector must have length {cutoff + 1}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficient vector must be finite")
    return arr


def _check_tau(tau: float, problem: ReconstructionProblem):
    lo, hi = problem.tau_range
    if not lo <= tau <= hi:
        raise ValueError(f"tau = {tau!r} lies outside tau_range {problem.tau_range!r}")


def evaluate_solution(b, tau: float, problem: ReconstructionProblem) -> tuple[float, np.ndarray]:
    """Objective value and per-(setting, k) residuals at a candidate point.

    Residuals are model minus data on the padded click grid.  This is the
    single code path behind :func:`objective`, so numbers derived from a
    stored solution reproduce the solver's own values bit for bit.
    """
    _check_tau(tau, problem)
    arr = _coerce_b(b, problem.cutoff)
    ws = _Workspace(problem)
    r = ws.design(tau) @ arr - ws.data
    pen = ws.diff2 @ arr
    value = float(r @ r + problem.lam * (pen @ pen))
    return value, r.reshape(len(problem.etas), ws.kmax + 1)


def objective(b, tau: float, problem: ReconstructionProblem) -> float:
    """Summed squared photocount misfit plus lam times the smoothness penalty."""
    return evaluate_solution(b, tau, problem)[0]


def gradient_b(b, tau: float, problem: ReconstructionProblem) -> np.ndarray:
    """Analytic gradient of the objective with respect to the coefficients."""
    _check_tau(tau, problem)
    arr = _coerce_b(b, problem.cutoff)
    ws = _Workspace(problem)
    a = ws.design(tau)
    grad = 2.0 * (a.T @ (a @ arr - ws.data))
    if problem.lam != 0.0:
        grad += 2.0 * problem.lam * (ws.dtd @ arr)
    return grad


def golden_section(func, lo: float, hi: float, tol: float) -> tuple[float, float, int]:
    """Minimize a scalar function on [lo, hi] by golden-section search.

    Returns the best evaluated point, its value, and the number of
    function evaluations.  The endpoints are always evaluated, so the
    returned value never exceeds the value at either boundary.
    """
    if hi < lo:
        raise ValueError(f"empty interval [{lo!r}, {hi!r}]")
    evals = []

    def ev(x):
        fx = func(x)
        evals.append((fx, x))
        return fx

    ev(lo)
    if hi == lo:
        best_f, best_x = min(evals)
        return best_x, best_f, len(evals)
    ev(hi)
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = ev(c)
    fd = ev(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = ev(d)
    best_f, best_x = min(evals)
    return best_x, best_f, len(evals)


def _lipschitz(gram: np.ndarray) -> float:
    top = float(np.linalg.eigvalsh(gram)[-1])
    return max(2.0 * top, 1e-12)


@lru_cache(maxsize=None)
def _zero_sum_basis(nf: int) -> np.ndarray:
    """Orthonormal basis of the zero-sum subspace of R^nf, as columns."""
    q, _ = np.linalg.qr(np.ones((nf, 1)), mode="complete")
    q = q[:, 1:]
    q.flags.writeable = False
    return q


def _face_lstsq(rows, target, x, fx, value):
    """Minimize the residual norm on the face spanned by x's support.

    Solves the sum-one-constrained least-squares subproblem on the
    nonzero coordinates in residual space (never forming the normal
    equations, which would square the conditioning and drown the shallow
    part of the landscape).  If the face solution leaves the simplex,
    steps as far toward it as feasibility allows (zeroing the blocking
    coordinate) and repeats on the smaller face.  Only improving points
    are accepted, so f never increases.  Returns (x, fx, evaluations).
    """
    n = x.size
    used = 0
    for _ in range(n + 2):
        free = x > 0.0
        nf = int(free.sum())
        if nf == 0:
            break
        candidate = np.zeros(n)
        if nf == 1:
            candidate[free] = 1.0
        else:
            face = rows[:, free]
            center = np.full(nf, 1.0 / nf)
            basis = _zero_sum_basis(nf)
            try:
                coeffs, *_ = np.linalg.lstsq(
                    face @ basis, target - face @ center, rcond=None
                )
            except np.linalg.LinAlgError:
                break
            if not np.all(np.isfinite(coeffs)):
                break
            candidate[free] = center + basis @ coeffs
        if candidate.min() >= 0.0:
            fc = value(candidate)
            used += 1
            if fc < fx:
                x, fx = candidate, fc
            break
        direction = candidate - x
        shrinking = direction < 0.0
        ratios = np.where(shrinking, -x / np.where(shrinking, direction, -1.0), np.inf)
        alpha = float(ratios.min())
        if not 0.0 < alpha < 1.0:
            break
        trial = np.maximum(x + alpha * direction, 0.0)
        trial[ratios == alpha] = 0.0
        ft = value(trial)
        used += 1
        if ft < fx:
            x, fx = trial, ft
        else:
            break
    return x, fx, used


def _descend_b(design, data, lam, diff2, b0, lipschitz, tol, max_steps):
    """Monotone projected-gradient descent on the b subproblem.

    Minimizes ||design b - data||^2 + lam ||diff2 b||^2 over the simplex,
    starting from b0.  Each round takes one projected-gradient step at
    the safe step size 1/L (which cannot increase a convex quadratic)
    and then polishes exactly on the face the step identified.  Returns
    (b, f, projected-gradient norm, steps taken).
    """
    if lam > 0.0 and diff2.shape[0] > 0:
        rows = np.vstack([design, math.sqrt(lam) * diff2])
        target = np.concatenate([data, np.zeros(diff2.shape[0])])
    else:
        rows = design
        target = data

    def value(b):
        r = rows @ b - target
        return float(r @ r)

    def pg_norm(b):
        g = 2.0 * (rows.T @ (rows @ b - target))
        return float(np.linalg.norm(b - project_simplex(b - g)))

    x = b0
    fx = value(x)
    steps = 0
    norm = pg_norm(x)
    while norm >= tol and steps < max_steps:
        f_round = fx
        g = 2.0 * (rows.T @ (rows @ x - target))
        z = project_simplex(x - g / lipschitz)
        fz = value(z)
        if fz <= fx:
            x, fx = z, fz
        steps += 1
        x, fx, used = _face_lstsq(rows, target, x, fx, value)
        steps += used
        norm = pg_norm(x)
        if fx >= f_round:
            # The round found nothing strictly better; further rounds
            # would retrace the same points, so stop at the float floor.
            break
    return x, fx, norm, steps


def solve(problem: ReconstructionProblem, b0=None, tau0: float | None = None) -> ReconstructionResult:
    """Jointly fit the noise law and the transmittance.

    Each outer round scans the profile objective g(tau) = min_b f(b, tau)
    on a coarse grid, golden-sections inside the bracketing cells (every
    profile point warm-starts a block of projected-gradient steps on b
    from the incumbent), then polishes b at the chosen tau.  A candidate
    (b, tau) is accepted only if it lowers the objective, so the
    incumbent objective never increases.  The
    solver stops when the projected-gradient norm and the per-round tau
    movement both fall below the problem's tolerances, or when the
    iteration budget runs out.

    Args:
        problem: the reconstruction instance.
        b0: optional starting coefficients (projected onto the simplex);
            defaults to the uniform vector.
        tau0: optional starting transmittance inside tau_range; defaults
            to the interval midpoint.
    """
    ws = _Workspace(problem)
    lo, hi = problem.tau_range
    n_coeffs = problem.cutoff + 1
    if b0 is None:
        b = np.full(n_coeffs, 1.0 / n_coeffs)
    else:
        b = project_simplex(_coerce_b(b0, problem.cutoff))
    tau = 0.5 * (lo + hi) if tau0 is None else float(tau0)
    _check_tau(tau, problem)
    tau_fixed = lo == hi

    def assemble(t: float):
        design = ws.design(t)
        gram = design.T @ design + problem.lam * ws.dtd
        return design, _lipschitz(gram)

    design, lipschitz = assemble(tau)
    b, f_cur, norm, used = _descend_b(
        design, ws.data, problem.lam, ws.diff2, b, lipschitz,
        problem.grad_tol, min(_PROFILE_STEPS, problem.max_iterations),
    )
    iterations = used
    history = [f_cur]
    converged = False
    for _ in range(_MAX_ROUNDS):
        tau_moved = 0.0
        if not tau_fixed:
            profile: dict[float, tuple[np.ndarray, float, float]] = {}

            def profile_value(t: float) -> float:
                t = float(t)
                if t not in profile:
                    nonlocal iterations
                    design_t, lips_t = assemble(t)
                    budget = max(0, min(_PROFILE_STEPS, problem.max_iterations - iterations))
                    b_t, f_t, norm_t, used_t = _descend_b(
                        design_t, ws.data, problem.lam, ws.diff2, b, lips_t,
                        problem.grad_tol, budget,
                    )
                    iterations += used_t
                    profile[t] = (b_t, f_t, norm_t)
                return profile[t][1]

            grid = np.linspace(lo, hi, _TAU_GRID)
            values = [profile_value(float(t)) for t in grid]
            best = int(np.argmin(values))
            cell_lo = float(grid[max(best - 1, 0)])
            cell_hi = float(grid[min(best + 1, grid.size - 1)])
            golden_section(profile_value, cell_lo, cell_hi, problem.tau_tol)
            tau_new, (b_new, f_new, norm_new) = min(
                profile.items(), key=lambda item: (item[1][1], item[0])
            )
            if f_new < f_cur:
                tau_moved = abs(tau_new - tau)
                tau = tau_new
                b, f_cur, norm = b_new, f_new, norm_new
                design, lipschitz = assemble(tau)

        budget = max(0, min(_POLISH_STEPS, problem.max_iterations - iterations))
        b_new, f_new, norm_new, used = _descend_b(
            design, ws.data, problem.lam, ws.diff2, b, lipschitz,
            problem.grad_tol, budget,
        )
        iterations += used
        if f_new <= f_cur:
            b, f_cur, norm = b_new, f_new, norm_new
        history.append(f_cur)

        if norm < problem.grad_tol and tau_moved < problem.tau_tol:
            converged = True
            break
        if iterations >= problem.max_iterations:
            break

    b = project_simplex(b)
    b = b / b.sum()
    dist = NoiseDistribution(b)
    final, residuals = evaluate_solution(dist, tau, problem)
    return ReconstructionResult(
        b_rec=dist,
        tau_rec=float(tau),
        objective_value=final,
        iterations=iterations,
        converged=converged,
        grad_norm=float(norm),
        residuals=residuals,
        history=tuple(history),
    )


@dataclass(frozen=True)
class LambdaSweepPoint:
    """One point of a smoothing-weight sweep, for L-curve style selection."""

    lam: float
    objective_value: float
    data_residual: float
    penalty: float
    tau_rec: float
    iterations: int
    converged: bool


def sweep_lambda(problem: ReconstructionProblem, lambdas) -> tuple[LambdaSweepPoint, ...]:
    """Re-solve the problem across smoothing weights, in the given order.

    The data residual and penalty of each solution trace the L-curve
    used to pick a weight by hand.
    """
    points = []
    for lam in lambdas:
        sub = dataclasses.replace(problem, lam=float(lam))
        result = solve(sub)
        resid = float(np.sum(result.residuals**2))
        points.append(
            LambdaSweepPoint(
                lam=float(lam),
                objective_value=result.objective_value,
                data_residual=resid,
                penalty=smoothness_penalty(result.b_rec),
                tau_rec=result.tau_rec,
                iterations=result.iterations,
                converged=result.converged,
            )
        )
    return tuple(points)
