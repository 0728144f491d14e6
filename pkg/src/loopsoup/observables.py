"""Estimators over chain measurements: pair correlations, loop fractions,
partition statistics, and the two-sided consistency check between them.

All estimators are fold-style: they reduce each chain separately and merge
the per-chain results with pooled means/errors (associative and commutative),
so independent chains can be combined in any order.  Standard errors within a
chain come from batch means, which absorbs autocorrelation crudely.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EstimatorResult",
    "LoopPartition",
    "loop_partition",
    "same_loop_probability",
    "direction_correlation",
    "origin_loop_fraction",
    "spatial_correlation_sum",
    "check_sandwich",
    "nu_estimate",
    "default_cutoffs",
    "pd_same_element_statistic",
    "nu_relations_table",
]


@dataclass
class EstimatorResult:
    """Named scalar estimate with its standard error and run metadata."""

    name: str
    mean: float | None
    stderr: float | None
    n_samples: int
    params: dict = field(default_factory=dict)

    def merge(self, other):
        """Pooled combination of two independent estimates (associative)."""
        if self.n_samples == 0:
            return other
        if other.n_samples == 0:
            return self
        n1, n2 = self.n_samples, other.n_samples
        n = n1 + n2
        mean = (n1 * self.mean + n2 * other.mean) / n
        var = (n1 * n1 * self.stderr ** 2 + n2 * n2 * other.stderr ** 2) / (n * n)
        params = dict(self.params)
        return EstimatorResult(self.name, mean, np.sqrt(var), n, params)

    @staticmethod
    def merge_all(results):
        out = results[0]
        for r in results[1:]:
            out = out.merge(r)
        return out

    def to_record(self):
        rec = {"name": self.name}
        for key in ("graph", "u", "beta", "K", "seed"):
            if key in self.params:
                rec[key] = self.params[key]
        rec["mean"] = self.mean
        rec["stderr"] = self.stderr
        rec["n"] = self.n_samples
        return rec


def _batch_stderr(series, n_batches=32):
    n = len(series)
    if n < 2:
        return 0.0
    nb = min(n_batches, n)
    bs = n // nb
    trimmed = np.asarray(series[:nb * bs], dtype=np.float64)
    means = trimmed.reshape(nb, bs).mean(axis=1)
    if nb < 2:
        return float(np.std(trimmed, ddof=1) / np.sqrt(n))
    return float(np.std(means, ddof=1) / np.sqrt(nb))


def _series_estimate(name, series, params):
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        return EstimatorResult(name, None, None, 0, params)
    return EstimatorResult(name, float(series.mean()), _batch_stderr(series),
                           int(series.size), params)


def _as_runs(runs):
    return runs if isinstance(runs, (list, tuple)) else [runs]


def _run_params(run, **extra):
    p = dict(run.params)
    p.update(extra)
    return p


def same_loop_probability(runs, x, y):
    """Frequency of (x,0) and (y,0) sharing a loop under the weighted chain.

    Equals four times the axis-1 and axis-3 spin correlations of the
    corresponding quantum model.
    """
    if x == y:
        raise ValueError("needs two distinct vertices")
    parts = []
    for run in _as_runs(runs):
        series = (run.t0_loop[:, x] == run.t0_loop[:, y]).astype(np.float64)
        parts.append(_series_estimate(
            f"same_loop({x},{y})", series, _run_params(run, x=x, y=y)))
    return EstimatorResult.merge_all(parts)


def direction_correlation(runs, x, y):
    """Estimate of P(same loop, equal directions) - P(same loop, opposite).

    A quarter of it estimates the axis-2 spin correlation.
    """
    if x == y:
        raise ValueError("needs two distinct vertices")
    parts = []
    for run in _as_runs(runs):
        same = run.t0_loop[:, x] == run.t0_loop[:, y]
        sign = np.where(run.t0_dir[:, x] == run.t0_dir[:, y], 1.0, -1.0)
        series = np.where(same, sign, 0.0)
        parts.append(_series_estimate(
            f"direction({x},{y})", series, _run_params(run, x=x, y=y)))
    return EstimatorResult.merge_all(parts)


def origin_loop_fraction(runs, origin=None):
    """Mean normalized length of the loop through (origin, 0)."""
    parts = []
    for run in _as_runs(runs):
        if origin is not None and origin != run.origin:
            raise ValueError(
                f"run measured origin {run.origin}, requested {origin}")
        parts.append(_series_estimate(
            "origin_loop_fraction", run.origin_len, _run_params(run)))
    return EstimatorResult.merge_all(parts)


def spatial_correlation_sum(runs):
    """Average over all ordered vertex pairs of the same-loop indicator.

    Its expectation equals (4/n^2) * sum_{x,y} of the axis-3 correlations,
    diagonal terms included.
    """
    parts = []
    for run in _as_runs(runs):
        n = run.n
        series = run.sum_c2 / float(n * n)
        parts.append(_series_estimate(
            "spatial_correlation_sum", series, _run_params(run)))
    return EstimatorResult.merge_all(parts)


def check_sandwich(corr_sum, origin_frac, u, n_vertices, max_degree,
                   n_sigma=3.0):
    """Two-sided bound between the pair-correlation sum and the origin-loop
    fraction: sum - sqrt(max_degree*(1-u)/n) <= fraction <= sum, verified
    within pooled statistical error.

    The degree enters through the bound's dimension parameter, which equals
    max_degree/2 on a torus.
    """
    slack = np.sqrt(max_degree * (1.0 - u) / n_vertices)
    sigma = np.sqrt(corr_sum.stderr ** 2 + origin_frac.stderr ** 2)
    lower = corr_sum.mean - slack
    upper = corr_sum.mean
    ok_lower = origin_frac.mean >= lower - n_sigma * sigma
    ok_upper = origin_frac.mean <= upper + n_sigma * sigma
    return {
        "lower_bound": lower,
        "upper_bound": upper,
        "origin_fraction": origin_frac.mean,
        "slack_term": slack,
        "pooled_sigma": sigma,
        "lower_ok": bool(ok_lower),
        "upper_ok": bool(ok_upper),
        "passed": bool(ok_lower and ok_upper),
    }


@dataclass
class LoopPartition:
    """Sorted normalized loop lengths; entries sum to 1."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.sort(np.asarray(self.weights, dtype=np.float64))[::-1]
        if w.size and w[-1] < 0:
            raise ValueError("negative partition weight")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"partition weights sum to {w.sum()}, not 1")
        self.weights = w


def loop_partition(decomposition):
    """Normalized sorted loop lengths of a decomposition."""
    total = decomposition.beta * decomposition.n
    return LoopPartition(np.asarray(decomposition.loop_lengths) / total)


def default_cutoffs(beta, n_vertices):
    """Length cutoffs used to separate 'macroscopic' loops, as a sweep."""
    cuts = [beta, 2 * beta, 5 * beta, 10 * beta, np.sqrt(beta * n_vertices)]
    return sorted(set(float(c) for c in cuts))


def nu_estimate(runs, cutoff):
    """Mean normalized mass carried by loops of time length >= cutoff."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    parts = []
    for run in _as_runs(runs):
        norm = run.beta * run.n
        mask = run.top * norm >= cutoff
        series = (run.top * mask).sum(axis=1)
        parts.append(_series_estimate(
            "nu", series, _run_params(run, K=float(cutoff))))
    return EstimatorResult.merge_all(parts)


def pd_same_element_statistic(runs, cutoff):
    """Probability that two uniform points of the macroscopic mass share a
    loop: mean of sum w_i^2 over the partition restricted to loops >= cutoff.

    Returns an undefined result (mean None, n_samples 0) when no sample
    carries macroscopic mass.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    parts = []
    n_undefined = 0
    for run in _as_runs(runs):
        norm = run.beta * run.n
        mask = run.top * norm >= cutoff
        masses = (run.top * mask).sum(axis=1)
        defined = masses > 0
        n_undefined += int((~defined).sum())
        if not defined.any():
            continue
        w = run.top[defined] * mask[defined]
        series = (w ** 2).sum(axis=1) / masses[defined] ** 2
        parts.append(_series_estimate(
            "pd_same_element", series,
            _run_params(run, K=float(cutoff))))
    if not parts:
        run0 = _as_runs(runs)[0]
        return EstimatorResult("pd_same_element", None, None, 0,
                               _run_params(run0, K=float(cutoff),
                                           undefined=True))
    out = EstimatorResult.merge_all(parts)
    out.params["n_undefined"] = n_undefined
    return out


def nu_relations_table(same_loop_far, nu_result, u):
    """Diagnostic comparison of the far-pair same-loop probability against
    the heuristic macroscopic predictions nu^2/3 (extreme couplings) and
    nu^2/2 (intermediate).  Informational only; the predictions hold in
    double limits the finite runs cannot take.
    """
    nu = nu_result.mean or 0.0
    extreme = abs(abs(u) - 1.0) < 1e-12
    pred_same = nu * nu / (3.0 if extreme else 2.0)
    pred_corr = nu * nu / (12.0 if extreme else 8.0)
    return {
        "u": u,
        "nu": nu,
        "cutoff": nu_result.params.get("K"),
        "same_loop_far": same_loop_far.mean,
        "predicted_same_loop": pred_same,
        "corr_far": None if same_loop_far.mean is None
        else same_loop_far.mean / 4.0,
        "predicted_corr": pred_corr,
        "regime": "PD(2)" if extreme else "PD(1)",
    }
