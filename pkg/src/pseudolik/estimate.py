"""Numerical maximization of the weighted objective over each family's free parameters.

The optimizer is limited-memory quasi-Newton ascent (two-loop recursion) with
backtracking Armijo line search, so every accepted step increases the
objective and traces are monotone.  A fit is ``converged`` only when the
gradient norm reaches tolerance while the parameters stay inside the
divergence bound; samples whose empirical conditionals are degenerate push
bias terms toward infinity and are reported ``unbounded`` instead of being
passed off as maxima.  Restarts (several for the non-concave restricted
Boltzmann machine objective) are all reported; the best finite one wins and
near-ties are flagged rather than resolved.

Two objective routes exist and are cross-checked in the test suite:

* native: the closed-form family objectives and analytic gradients;
* scheme: any sparse weight scheme, evaluated through the enumerated joint
  table and per-state score vectors (also used for free-table fits over the
  probability simplex via a softmax parameterization).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError, FitError
from .models import categorical, fvbm, rbm
from .models.common import group_binary
from .pl import WeightScheme
from .pmf import TabularPmf
from .support import SupportSpec, SubsetId, restrict, restricted_index_map, state_indices
from .textio import format_floats

TABULAR_STATE_CAP = 1 << 12


@dataclass(frozen=True)
class FitConfig:
    """Optimizer policy; defaults suit all the bundled families.

    ``param_bound`` is the divergence guard: convergence is only declared
    while max|parameter| stays below it, and crossing it aborts the run as
    ``unbounded``.  Pass None to disable (free-table fits do: boundary
    solutions are legitimate PMFs there).  ``restarts=None`` means the family
    default: 5 for the restricted Boltzmann machine, 1 otherwise.
    """

    grad_tol: float = 1e-8  # on the gradient of the per-observation mean objective
    max_iter: int = 500
    memory: int = 10
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    restarts: int | None = None
    restart_scale: float = 0.01
    init_seed: int = 0
    param_bound: float | None = 15.0
    saturation_bound: float | None = 16.0
    near_tie_tol: float = 1e-9


@dataclass(frozen=True)
class RestartResult:
    objective: float
    x: np.ndarray
    grad_norm: float
    iterations: int
    status: str
    trace: tuple


@dataclass(frozen=True)
class FitReport:
    """Best point across restarts plus per-restart diagnostics.

    ``objective`` and the restart traces are objective totals (sums over
    observations); ``grad_norm`` is the norm of the per-observation mean
    gradient, the quantity the convergence tolerance applies to.
    """

    family: str
    scheme_name: str
    params: object
    objective: float
    grad_norm: float
    iterations: int
    status: str
    restarts: tuple
    near_tie: bool


def _lbfgs_maximize(fun_grad, x0: np.ndarray, cfg: FitConfig, diverged=None) -> RestartResult:
    """Two-loop L-BFGS ascent with Armijo backtracking; monotone in the objective.

    Once objective increments fall below float resolution, a step is still
    accepted when it ties the objective while strictly shrinking the gradient
    norm (lexicographic progress), which lets the quadratic phase polish the
    gradient past the objective's own rounding floor without ever letting the
    trace decrease.  ``diverged`` is an optional predicate on the iterate that
    flags runaway parameters whose gradients vanish by saturation.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fun_grad(x)
    if not np.isfinite(f):
        return RestartResult(float("-inf"), x, float("nan"), 0, "max-iters", (float(f),))
    trace = [float(f)]
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    status = "max-iters"
    iterations = 0

    for _ in range(cfg.max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.grad_tol:
            break
        if cfg.param_bound is not None and float(np.max(np.abs(x))) > cfg.param_bound:
            break

        # two-loop recursion for an ascent direction d ~ H g
        d = g.copy()
        alpha_hist = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho * float(s @ d)
            alpha_hist.append(a)
            d -= a * y
        if y_hist:
            gamma = float(s_hist[-1] @ y_hist[-1]) / float(y_hist[-1] @ y_hist[-1])
            d *= gamma
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alpha_hist)):
            beta = rho * float(y @ d)
            d += (a - beta) * s
        slope = float(g @ d)
        if slope <= 0.0:
            d = g.copy()
            slope = float(g @ g)

        step = 1.0 if y_hist else min(1.0, 1.0 / max(gnorm, 1e-12))
        accepted = False
        for _bt in range(cfg.max_backtracks):
            x_new = x + step * d
            if np.array_equal(x_new, x):
                break  # step underflowed
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new):
                if f_new >= f + cfg.armijo_c1 * step * slope and f_new > f:
                    accepted = True
                    break
                if f_new == f and float(np.linalg.norm(g_new)) < gnorm:
                    accepted = True
                    break
            step *= cfg.backtrack
        if not accepted:
            break

        s = x_new - x
        y = g - g_new  # curvature pair in minimization orientation
        sy = float(s @ y)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        x, f, g = x_new, f_new, g_new
        trace.append(float(f))
        iterations += 1

    # classify the exit point; divergence trumps a small gradient because
    # saturated conditionals make gradients vanish at runaway parameters
    gnorm = float(np.linalg.norm(g))
    bound_hit = cfg.param_bound is not None and float(np.max(np.abs(x))) > cfg.param_bound
    if gnorm <= cfg.grad_tol:
        saturated = diverged is not None and diverged(x)
        status = "unbounded" if (bound_hit or saturated) else "converged"
    else:
        status = "unbounded" if bound_hit else "max-iters"
    return RestartResult(float(f), x, gnorm, iterations, status, tuple(trace))


# ---------------------------------------------------------------------------
# generic scheme objective through the enumerated joint
# ---------------------------------------------------------------------------


def _compile_atoms(spec: SupportSpec, scheme: WeightScheme, data: np.ndarray):
    """Reduce the scheme to signed marginal atoms.

    A conditional term log f(left|right) is log f(union) - log f(right), so
    every term becomes (coefficient, subset) atoms; each atom carries a dense
    aggregation matrix A (restricted states x full states) and the data's
    restricted-state counts.
    """
    if spec.num_states > TABULAR_STATE_CAP:
        raise CapacityError(
            f"scheme objective needs full enumeration; {spec.num_states} states "
            f"exceeds the cap {TABULAR_STATE_CAP}"
        )
    n_states = spec.num_states
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def subset_pieces(mask: int):
        if mask not in cache:
            sub = SubsetId(mask)
            gmap = restricted_index_map(spec, sub)
            n_restricted = restrict(spec, sub).num_states
            A = np.zeros((n_restricted, n_states))
            A[gmap, np.arange(n_states)] = 1.0
            cols = [c - 1 for c in sub.coords()]
            didx = state_indices(restrict(spec, sub), data[:, cols])
            cnt = np.bincount(didx, minlength=n_restricted).astype(np.float64)
            cache[mask] = (A, cnt)
        return cache[mask]

    atoms = []
    for sub in scheme.active_subsets():
        A, cnt = subset_pieces(sub.mask)
        atoms.append((scheme.c[sub], A, cnt))
    for part in scheme.active_partitions():
        coef = scheme.d[part]
        A, cnt = subset_pieces(part.left | part.right)
        atoms.append((coef, A, cnt))
        A, cnt = subset_pieces(part.right)
        atoms.append((-coef, A, cnt))
    return atoms


class _SchemeObjective:
    """Callable (theta) -> (objective, gradient) for a parametric family and scheme."""

    def __init__(self, spec, scheme, data, probs_scores, n_params):
        self.atoms = _compile_atoms(spec, scheme, np.asarray(data))
        self.probs_scores = probs_scores
        self.n_params = n_params

    def __call__(self, theta):
        probs, scores = self.probs_scores(theta)
        val = 0.0
        grad = np.zeros(self.n_params)
        for coef, A, cnt in self.atoms:
            f_s = A @ probs
            occ = cnt > 0.0
            if np.any(f_s[occ] <= 0.0):
                return float("-inf"), np.zeros(self.n_params)
            val += coef * float(cnt[occ] @ np.log(f_s[occ]))
            num = A @ (probs[:, None] * scores)
            grad += coef * ((cnt[occ] / f_s[occ]) @ num[occ])
        return val, grad


class _TabularObjective:
    """Scheme objective over a free table via softmax logits; gradient in logit space."""

    def __init__(self, spec, scheme, data):
        self.atoms = _compile_atoms(spec, scheme, np.asarray(data))
        self.n_data = float(np.asarray(data).shape[0])
        self.n_states = spec.num_states

    def probs(self, z):
        z = z - np.max(z)
        p = np.exp(z)
        return p / p.sum()

    def __call__(self, z):
        p = self.probs(z)
        val = 0.0
        acc = np.zeros(self.n_states)
        coef_total = 0.0
        for coef, A, cnt in self.atoms:
            f_s = A @ p
            occ = cnt > 0.0
            if np.any(f_s[occ] <= 0.0):
                return float("-inf"), np.zeros(self.n_states)
            val += coef * float(cnt[occ] @ np.log(f_s[occ]))
            ratio = np.zeros_like(f_s)
            ratio[occ] = cnt[occ] / f_s[occ]
            acc += coef * (A.T @ ratio)
            coef_total += coef
        grad = p * (acc - coef_total * self.n_data)
        return val, grad


# ---------------------------------------------------------------------------
# family plumbing
# ---------------------------------------------------------------------------


def _family_native(family, data, q, r, cfg):
    """(objective, free-parameter count, divergence predicate) for a native fit.

    The divergence predicate flags saturation of the conditional log odds at
    the observed states: beyond ``cfg.saturation_bound`` the data's empirical
    conditionals are being fit as deterministic and the maximizer is escaping
    to infinity, even though the gradient shrinks.
    """
    bound = cfg.saturation_bound
    if family == "categorical":
        counts = categorical.label_counts(data, q)

        def fun_grad(z):
            return categorical.packed_logpl_grad(counts, z)

        return fun_grad, categorical.n_params(q), None
    X, w = group_binary(data, q)
    if family == "fvbm":

        def fun_grad(v):
            return fvbm.packed_logpl_grad(X, w, v, q)

        def diverged(v):
            p = fvbm.unpack(v, q)
            return float(np.max(np.abs(X @ p.M + p.b))) > bound

        return fun_grad, fvbm.n_params(q), diverged if bound is not None else None
    if family == "rbm":

        def fun_grad(v):
            return rbm.packed_logpl_grad(X, w, v, q, r)

        def diverged(v):
            return float(np.max(np.abs(rbm.site_logodds(X, rbm.unpack(v, q, r))))) > bound

        return fun_grad, rbm.n_params(q, r), diverged if bound is not None else None
    raise DomainError(f"unknown family {family!r}")


def _family_scheme_objective(family, data, q, r, scheme):
    spec = SupportSpec.binary(q)
    if family == "categorical":
        categorical.onehot_labels(data, q)  # validate

        def ps(z):
            return categorical.score_table(categorical.unpack(z, q))

        return _SchemeObjective(spec, scheme, data, ps, categorical.n_params(q))
    if family == "fvbm":
        group_binary(data, q)  # validate

        def ps(v):
            return fvbm.score_table(fvbm.unpack(v, q))

        return _SchemeObjective(spec, scheme, data, ps, fvbm.n_params(q))
    if family == "rbm":
        group_binary(data, q)

        def ps(v):
            return rbm.score_table(rbm.unpack(v, q, r))

        return _SchemeObjective(spec, scheme, data, ps, rbm.n_params(q, r))
    raise DomainError(f"unknown family {family!r}")


def _logit(p):
    with np.errstate(divide="ignore"):
        return np.log(p) - np.log1p(-p)


def _default_init(family, data, q, r, n_free):
    if family == "categorical":
        return np.zeros(n_free)
    if family == "fvbm":
        freq = np.asarray(data, dtype=np.float64).mean(axis=0)
        b = np.clip(_logit(freq), -4.0, 4.0)
        vec = np.zeros(n_free)
        vec[q * (q - 1) // 2 :] = b
        return vec
    return np.zeros(n_free)  # rbm: perturbation added per restart


def _native_scheme_name(family):
    return "categorical" if family == "categorical" else "full_conditionals"


def _unpack_params(family, x, q, r):
    if family == "categorical":
        return categorical.unpack(x, q)
    if family == "fvbm":
        return fvbm.unpack(x, q)
    return rbm.unpack(x, q, r)


def _run_restarts(fun_grad, base_init, cfg, family, diverged=None, n_obs=1):
    """Optimize the mean objective from each restart point; report totals.

    Working per observation keeps the gradient tolerance scale-free; the
    objective values and traces are rescaled back to sums afterwards.
    """
    n_restarts = cfg.restarts if cfg.restarts is not None else (5 if family == "rbm" else 1)
    if n_restarts < 1:
        raise ValueError("restarts must be at least 1")
    inv = 1.0 / n_obs

    def mean_fun_grad(x):
        f, g = fun_grad(x)
        return f * inv, g * inv

    results = []
    for rep in range(n_restarts):
        x0 = base_init.copy()
        if family == "rbm" or rep > 0:
            stream = np.random.Generator(np.random.Philox(key=[cfg.init_seed, rep]))
            x0 = x0 + cfg.restart_scale * stream.standard_normal(x0.shape[0])
        res = _lbfgs_maximize(mean_fun_grad, x0, cfg, diverged=diverged)
        results.append(
            RestartResult(
                objective=res.objective * n_obs,
                x=res.x,
                grad_norm=res.grad_norm,
                iterations=res.iterations,
                status=res.status,
                trace=tuple(t * n_obs for t in res.trace),
            )
        )
    return results


def _package(results, family, scheme_name, cfg, q, r, unpack=None):
    finite = [res for res in results if np.isfinite(res.objective)]
    if not finite:
        raise FitError("every restart started at -inf objective; data lies outside the model support")
    best = max(finite, key=lambda res: res.objective)
    near_tie = any(
        res is not best and abs(res.objective - best.objective) <= cfg.near_tie_tol
        for res in finite
    )
    params = unpack(best.x) if unpack else _unpack_params(family, best.x, q, r)
    return FitReport(
        family=family,
        scheme_name=scheme_name,
        params=params,
        objective=best.objective,
        grad_norm=best.grad_norm,
        iterations=best.iterations,
        status=best.status,
        restarts=tuple(results),
        near_tie=near_tie,
    )


def fit_mpl(
    family: str,
    data: np.ndarray,
    objective: WeightScheme | str = "native",
    config: FitConfig | None = None,
    r: int | None = None,
) -> FitReport:
    """Maximize a family's objective over its free parameters.

    ``objective`` is either the string ``"native"`` (the family's own
    closed-form log-PL and analytic gradient) or any ``WeightScheme``, which
    is evaluated through the enumerated joint.  ``r`` is the hidden dimension
    and only read for the restricted Boltzmann machine.
    """
    cfg = config or FitConfig()
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DomainError("data must be a non-empty (n, q) array")
    q = data.shape[1]
    if family == "rbm" and (r is None or r < 1):
        raise DomainError("rbm fits need a positive hidden dimension r")

    if isinstance(objective, str):
        if objective != "native":
            raise DomainError(f"objective must be 'native' or a WeightScheme, got {objective!r}")
        fun_grad, n_free, diverged = _family_native(family, data, q, r, cfg)
        scheme_name = _native_scheme_name(family)
    else:
        obj = _family_scheme_objective(family, data, q, r, objective)
        fun_grad, n_free, diverged = obj, obj.n_params, None
        scheme_name = objective.name

    base_init = _default_init(family, data, q, r, n_free)
    results = _run_restarts(fun_grad, base_init, cfg, family, diverged, n_obs=data.shape[0])
    return _package(results, family, scheme_name, cfg, q, r)


def fit_mpl_tabular(
    data: np.ndarray,
    scheme: WeightScheme,
    spec: SupportSpec,
    config: FitConfig | None = None,
) -> FitReport:
    """Maximize a scheme objective over all PMFs on the support (softmax logits).

    Simplex-boundary solutions (exact zeros) are legitimate here, so the
    divergence bound defaults to off; logits drift for empty cells while the
    table itself converges.
    """
    cfg = config or FitConfig(param_bound=None)
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DomainError("data must be a non-empty (n, q) array")
    if spec.num_states > TABULAR_STATE_CAP:
        raise CapacityError(f"free-table fits capped at {TABULAR_STATE_CAP} states")
    obj = _TabularObjective(spec, scheme, data)
    results = _run_restarts(
        obj, np.zeros(spec.num_states), cfg, family="tabular", n_obs=data.shape[0]
    )

    def unpack(x):
        return TabularPmf(spec, obj.probs(x))

    return _package(results, "tabular", scheme.name, cfg, spec.q, None, unpack=unpack)


# ---------------------------------------------------------------------------
# report files: fit summary keys followed by a parameter block
# ---------------------------------------------------------------------------


def report_to_text(report: FitReport) -> str:
    from .models import params_to_text

    lines = [
        f"scheme {report.scheme_name}",
        f"status {report.status}",
        f"objective {format(report.objective, '.17g')}",
        f"grad_norm {format(report.grad_norm, '.17g')}",
        f"iterations {report.iterations}",
        f"restart_count {len(report.restarts)}",
        f"near_tie {int(report.near_tie)}",
        f"restart_objectives {format_floats(res.objective for res in report.restarts)}",
    ]
    return "\n".join(lines) + "\n" + params_to_text(report.params)


def write_fit_report(path, report: FitReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_to_text(report))
