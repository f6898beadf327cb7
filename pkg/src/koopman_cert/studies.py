"""Convergence-rate studies, variance cross-checks, and bound-validity grids.

All studies are driven by a JSON-serializable config, run on derived
per-chunk seeds (deterministic for a fixed config, regardless of thread
count), and emit schema-versioned CSV tables plus log-log rate fits.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import bounds as bounds_mod
from . import rng
from .dictionaries import evaluate_batch
from .edmd import SVD_RTOL
from .errors import ConfigError, InsufficientPoints, UnsupportedSystem
from .galerkin import galerkin_matrix
from .systems import (
    CircleRotationSystem,
    FiniteMarkovSystem,
    Regime,
    categorical_sampler,
    ergodic_chunk,
    iid_chunk,
)
from .variance import (
    build_rep,
    exact_reference_gram,
    exact_variance,
    montecarlo_variance_oracle,
)

CSV_SCHEMAS = {
    "convergence": "koopman-cert/convergence-v1",
    "variance": "koopman-cert/variance-v1",
    "bounds": "koopman-cert/bounds-v1",
}


# ---------------------------------------------------------------------------
# Monte-Carlo error engine
# ---------------------------------------------------------------------------

def _psi_on_states(sys, dictionary, states):
    """(B, k, N) dictionary values on a (B, k) state block."""
    if isinstance(sys, FiniteMarkovSystem):
        table = dictionary.evaluate(np.arange(sys.n_states)).T
        return table[np.asarray(states, dtype=np.int64)]
    B, k = states.shape
    flat = evaluate_batch(dictionary, states.ravel())
    return flat.T.reshape(B, k, -1)

# cap on feature-block floats per slice (keeps peak memory ~tens of MB)
_SLICE_BUDGET = 4_000_000


def _gram_errors_block(psi_x, psi_y, ref, m):
    Chat = np.einsum("bki,bkj->bij", psi_x, psi_x) / m
    Cphat = np.einsum("bki,bkj->bij", psi_x, psi_y) / m
    C, Cplus, KV = ref
    err_C = np.sqrt(np.sum((Chat - C) ** 2, axis=(1, 2)))
    err_Cp = np.sqrt(np.sum((Cphat - Cplus) ** 2, axis=(1, 2)))
    sv = np.linalg.svd(Chat, compute_uv=False)
    good = sv[:, -1] > SVD_RTOL * np.maximum(sv[:, 0], 1e-300)
    err_K = np.full(len(psi_x), np.nan)
    if np.any(good):
        Khat = np.linalg.solve(Chat[good], Cphat[good])
        err_K[good] = np.sqrt(np.sum((Khat - KV) ** 2, axis=(1, 2)))
    return err_C, err_Cp, err_K


def _indicator_errors(paths_or_pairs, ref, m, n, ergodic):
    """Closed-form indicator estimates via transition counts."""
    from . import kernels

    C, Cplus, KV = ref
    if ergodic:
        counts = kernels.pair_counts(paths_or_pairs, n).astype(np.float64)
    else:
        xs, ys = paths_or_pairs
        B = xs.shape[0]
        flat = xs.astype(np.int64) * n + ys.astype(np.int64)
        flat += np.arange(B, dtype=np.int64)[:, None] * (n * n)
        counts = (
            np.bincount(flat.ravel(), minlength=B * n * n)
            .reshape(B, n, n)
            .astype(np.float64)
        )
    visits = counts.sum(axis=2)
    Cp_hat = counts / m
    err_Cp = np.sqrt(np.sum((Cp_hat - Cplus) ** 2, axis=(1, 2)))
    diag_err = visits / m - np.diag(C)
    err_C = np.sqrt(np.sum(diag_err**2, axis=1))
    good = np.all(visits > 0, axis=1)
    err_K = np.full(len(visits), np.nan)
    if np.any(good):
        Khat = counts[good] / visits[good][:, :, None]
        err_K[good] = np.sqrt(np.sum((Khat - KV) ** 2, axis=(1, 2)))
    return err_C, err_Cp, err_K


def _chunk_trial_errors(sys, dictionary, ref, m, seed, chunk, count, regime,
                        mu0_sampler=None):
    """Per-trial Frobenius errors (err_C, err_Cplus, err_K) for one chunk.

    err_K is NaN for trials whose empirical mass matrix is numerically
    singular.  Indicator dictionaries use the transition-count closed form;
    other dictionaries stream feature blocks under a fixed memory budget.
    """
    from .dictionaries import DictionaryKind

    indicator = (
        isinstance(sys, FiniteMarkovSystem)
        and dictionary.kind is DictionaryKind.INDICATOR
        and dictionary.size == sys.n_states
    )
    if regime is Regime.ERGODIC:
        paths = ergodic_chunk(sys, m, seed, chunk, count)
        if indicator:
            return _indicator_errors(paths, ref, m, sys.n_states, True)
        rows = max(1, _SLICE_BUDGET // ((m + 1) * dictionary.size))
        parts = []
        for lo in range(0, count, rows):
            block = paths[lo : lo + rows]
            psi = _psi_on_states(sys, dictionary, block)
            parts.append(_gram_errors_block(psi[:, :m], psi[:, 1:], ref, m))
    else:
        xs, ys = iid_chunk(sys, mu0_sampler, m, seed, chunk, count)
        if indicator:
            return _indicator_errors((xs, ys), ref, m, sys.n_states, False)
        rows = max(1, _SLICE_BUDGET // (2 * m * dictionary.size))
        parts = []
        for lo in range(0, count, rows):
            psi_x = _psi_on_states(sys, dictionary, xs[lo : lo + rows])
            psi_y = _psi_on_states(sys, dictionary, ys[lo : lo + rows])
            parts.append(_gram_errors_block(psi_x, psi_y, ref, m))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def mc_trial_errors(sys, dictionary, ref, m, n_trials, seed, regime,
                    mu0_sampler=None, threads=1):
    """Stacked per-trial errors over n_trials independent estimates."""
    chunks = list(rng.trial_chunks(n_trials))

    def work(spec):
        c, _, count = spec
        return _chunk_trial_errors(
            sys, dictionary, ref, m, seed, c, count, regime, mu0_sampler
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(work, chunks))
    else:
        out = [work(s) for s in chunks]
    err_C = np.concatenate([o[0] for o in out])
    err_Cp = np.concatenate([o[1] for o in out])
    err_K = np.concatenate([o[2] for o in out])
    return err_C, err_Cp, err_K


def exact_reference(sys, dictionary):
    """(C, C_plus, K_V) for systems with computable Gram matrices."""
    gram = exact_reference_gram(sys, dictionary)
    kv = galerkin_matrix(gram)
    return gram.C, gram.Cplus, kv.KV


def reference_model(sys, dictionary, m_ref, seed):
    """Surrogate reference learned from one long trajectory of length m_ref.

    Used when no exact Gram matrices exist; comparisons against it should
    stay at m <= m_ref / 10 to limit reference contamination.
    """
    from .edmd import edmd_estimate
    from .systems import sample_ergodic

    pairs = sample_ergodic(sys, int(m_ref), seed=seed)
    est = edmd_estimate(dictionary, pairs)
    return est.gram.C, est.gram.Cplus, est.Khat


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------

@dataclass
class StudyConfig:
    system: dict
    dictionary: dict
    regime: str = "ergodic"
    m_grid: List[int] = field(default_factory=lambda: [100, 1000, 10000])
    n_trials: int = 50
    seed: int = 0
    error_quantiles: List[float] = field(default_factory=lambda: [0.9])
    tail_epsilon: Optional[float] = None
    tail_branch: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        grid = list(self.m_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("m_grid must be strictly increasing")
        if self.n_trials < 30:
            raise ConfigError("n_trials must be >= 30 for stderr validity")
        if self.regime not in ("ergodic", "iid"):
            raise ConfigError("regime must be 'ergodic' or 'iid'")

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown study config keys: {sorted(extra)}")
        if "system" not in d or "dictionary" not in d:
            raise ConfigError("study config needs 'system' and 'dictionary'")
        return cls(**d)


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    slope_stderr: float
    n_points: int

    def to_json_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "slope_stderr": self.slope_stderr,
            "n_points": self.n_points,
        }


def fit_rate(m_values, rmse_values) -> RateFit:
    """OLS of log(rmse) on log(m); slope is the empirical convergence rate."""
    m_values = np.asarray(m_values, dtype=float)
    rmse_values = np.asarray(rmse_values, dtype=float)
    mask = np.isfinite(rmse_values) & (rmse_values > 0)
    x = np.log(m_values[mask])
    y = np.log(rmse_values[mask])
    n = len(x)
    if n < 4:
        raise InsufficientPoints("rate fits need at least 4 grid points")
    xbar, ybar = x.mean(), y.mean()
    sxx = np.sum((x - xbar) ** 2)
    slope = float(np.sum((x - xbar) * (y - ybar)) / sxx)
    intercept = float(ybar - slope * xbar)
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ybar) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else float("inf")
    return RateFit(slope, intercept, min(max(r2, 0.0), 1.0), stderr, n)


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------

def _default_mu0(sys):
    if isinstance(sys, FiniteMarkovSystem):
        return categorical_sampler(sys.pi)
    if isinstance(sys, CircleRotationSystem):
        return lambda gen, m: gen.random(m)
    raise UnsupportedSystem("i.i.d. studies need an initial-measure sampler")


def run_convergence_study(cfg: StudyConfig, sys=None, dictionary=None):
    """RMSE of the three estimation errors per m, with rate fits.

    Returns (rows, fits) where fits maps 'C', 'Cplus', 'K' to RateFit.
    Theoretical RMSE predictions sqrt(sigma^2_m / m) ride along when an
    exact representation exists.
    """
    from .config import dictionary_from_config, system_from_config

    sys = system_from_config(cfg.system) if sys is None else sys
    dictionary = dictionary_from_config(cfg.dictionary, system=sys) if dictionary is None else dictionary
    regime = Regime(cfg.regime)
    try:
        ref = exact_reference(sys, dictionary)
    except UnsupportedSystem:
        # reference-model mode: the largest grid entry stays a factor 10
        # below the surrogate's sample size
        ref = reference_model(sys, dictionary, 10 * max(cfg.m_grid),
                              seed=_derived_seed(cfg.seed, len(cfg.m_grid)))
    try:
        rep = build_rep(sys, dictionary)
    except UnsupportedSystem:
        rep = None
    mu0 = _default_mu0(sys) if regime is Regime.IID else None

    tail_report = None
    if cfg.tail_epsilon is not None and cfg.tail_branch is not None:
        try:
            inputs = bounds_mod.bound_inputs_from_exact(
                sys,
                dictionary,
                thin_params=(1.5, 0.2)
                if cfg.tail_branch
                in (bounds_mod.BRANCH_ERGODIC_SUPERLINEAR,
                    bounds_mod.BRANCH_ERGODIC_KAPPA_ZERO)
                else None,
            )

            def tail_p(m):
                return _branch_bound(inputs, cfg.tail_branch, m, cfg.tail_epsilon).p_bound

            tail_report = tail_p
        except UnsupportedSystem:
            tail_report = None  # no exact constants: tail column stays NaN

    rows = []
    for mi, m in enumerate(cfg.m_grid):
        err_C, err_Cp, err_K = mc_trial_errors(
            sys, dictionary, ref, int(m), cfg.n_trials,
            _derived_seed(cfg.seed, mi), regime, mu0, cfg.threads,
        )
        good = np.isfinite(err_K)
        row = {
            "m": int(m),
            "n_trials": cfg.n_trials,
            "n_singular": int(np.sum(~good)),
            "rmse_C": float(np.sqrt(np.mean(err_C**2))),
            "rmse_Cplus": float(np.sqrt(np.mean(err_Cp**2))),
            "rmse_K": float(np.sqrt(np.mean(err_K[good] ** 2))) if good.any() else float("nan"),
        }
        for q in cfg.error_quantiles:
            tag = f"q{int(round(q * 100))}"
            row[f"{tag}_C"] = float(np.quantile(err_C, q))
            row[f"{tag}_Cplus"] = float(np.quantile(err_Cp, q))
            row[f"{tag}_K"] = float(np.quantile(err_K[good], q)) if good.any() else float("nan")
        if rep is not None:
            vr = exact_variance(rep, dictionary, int(m))
            row["pred_rmse_C"] = math.sqrt(max(vr.var_C, 0.0))
            row["pred_rmse_Cplus"] = math.sqrt(max(vr.var_Cplus, 0.0))
        else:
            row["pred_rmse_C"] = float("nan")
            row["pred_rmse_Cplus"] = float("nan")
        if cfg.tail_epsilon is not None:
            row["tail_eps"] = float(cfg.tail_epsilon)
            exceed = np.where(good, err_K > cfg.tail_epsilon, True)
            row["tail_frac_K"] = float(np.mean(exceed))
            row["tail_p_bound"] = tail_report(int(m)) if tail_report else float("nan")
        rows.append(row)

    fits = {}
    for key, col in (("C", "rmse_C"), ("Cplus", "rmse_Cplus"), ("K", "rmse_K")):
        try:
            fits[key] = fit_rate([r["m"] for r in rows], [r[col] for r in rows])
        except InsufficientPoints:
            fits[key] = None
    return rows, fits


def _derived_seed(seed, index):
    # distinct m-grid entries must not share trial streams
    return (int(seed) << 16) + int(index)


def run_variance_check(cfg: StudyConfig, sys=None, dictionary=None):
    """Exact variances vs the Monte-Carlo oracle, flagged at 3 stderr."""
    from .config import dictionary_from_config, system_from_config

    sys = system_from_config(cfg.system) if sys is None else sys
    dictionary = dictionary_from_config(cfg.dictionary, system=sys) if dictionary is None else dictionary
    rep = build_rep(sys, dictionary)
    rows = []
    for mi, m in enumerate(cfg.m_grid):
        vr = exact_variance(rep, dictionary, int(m))
        oracle = montecarlo_variance_oracle(
            sys, dictionary, int(m), cfg.n_trials, _derived_seed(cfg.seed, mi),
            threads=cfg.threads,
        )
        # degenerate trials (constant error) have zero stderr; allow float slack
        def _within(exact, mc, stderr):
            slack = 1e-12 * max(abs(exact), abs(mc), 1e-300)
            return abs(exact - mc) <= 3.0 * stderr + slack

        within_c = _within(vr.var_C, oracle.var_C_hat, oracle.stderr_C)
        within_p = _within(vr.var_Cplus, oracle.var_Cplus_hat, oracle.stderr_Cplus)
        rows.append(
            {
                "m": int(m),
                "n_trials": cfg.n_trials,
                "var_C_exact": vr.var_C,
                "var_C_mc": oracle.var_C_hat,
                "stderr_C": oracle.stderr_C,
                "within_3sigma_C": within_c,
                "var_Cplus_exact": vr.var_Cplus,
                "var_Cplus_mc": oracle.var_Cplus_hat,
                "stderr_Cplus": oracle.stderr_Cplus,
                "within_3sigma_Cplus": within_p,
            }
        )
    return rows


def _branch_bound(inputs, branch, m, epsilon):
    if branch == bounds_mod.BRANCH_ERGODIC_LINEAR:
        return bounds_mod.ergodic_linear_bound(inputs, m, epsilon)
    if branch in (bounds_mod.BRANCH_ERGODIC_SUPERLINEAR, bounds_mod.BRANCH_ERGODIC_KAPPA_ZERO):
        return bounds_mod.superlinear_bound(inputs, m, epsilon)
    if branch == bounds_mod.BRANCH_IID_MARKOV:
        return bounds_mod.iid_bounds(inputs, m, epsilon)[0]
    if branch == bounds_mod.BRANCH_IID_HOEFFDING:
        return bounds_mod.iid_bounds(inputs, m, epsilon)[1]
    raise ConfigError(f"unknown branch {branch}")


def run_bound_validity(sys, dictionary, branch, m_values, epsilons, n_trials,
                       seed, thin_params=None, threads=1):
    """Empirical exceedance frequencies against a branch's p_bound.

    The composite bound is checked on ||K_V - K_hat||_F (singular trials
    count as exceedances); per-matrix bounds are checked alongside on
    ||C - C_hat||_F and ||C_+ - C_hat_plus||_F at their shifted thresholds.
    """
    regime = (
        Regime.IID
        if branch in (bounds_mod.BRANCH_IID_MARKOV, bounds_mod.BRANCH_IID_HOEFFDING)
        else Regime.ERGODIC
    )
    inputs = bounds_mod.bound_inputs_from_exact(sys, dictionary, thin_params=thin_params)
    ref = exact_reference(sys, dictionary)
    mu0 = _default_mu0(sys) if regime is Regime.IID else None
    rows = []
    for gi, m in enumerate(m_values):
        err_C, err_Cp, err_K = mc_trial_errors(
            sys, dictionary, ref, int(m), n_trials,
            _derived_seed(seed, gi), regime, mu0, threads,
        )
        exceed_base = ~np.isfinite(err_K)
        for eps in epsilons:
            report = _branch_bound(inputs, branch, int(m), float(eps))
            rc, rp = bounds_mod.estimator_error_bounds(inputs, int(m), float(eps), branch)
            tau = 2.0 * inputs.norm_Cinv * inputs.norm_Cplus + float(eps)
            delta_p = float(eps) / tau * inputs.norm_Cplus
            delta_c = float(eps) / tau / inputs.norm_Cinv
            frac_K = float(np.mean(np.where(exceed_base, True, err_K > float(eps))))
            frac_C = float(np.mean(err_C > delta_c))
            frac_Cp = float(np.mean(err_Cp > delta_p))

            def _ok(frac, p):
                if p > 0.5:
                    return True
                stderr = math.sqrt(max(frac * (1.0 - frac), 0.0) / n_trials)
                return frac <= p + 3.0 * stderr

            rows.append(
                {
                    "branch": report.branch,
                    "m": int(m),
                    "epsilon": float(eps),
                    "p_bound": report.p_bound,
                    "p_empirical": frac_K,
                    "stderr": math.sqrt(max(frac_K * (1 - frac_K), 0.0) / n_trials),
                    "n_trials": int(n_trials),
                    "ok": _ok(frac_K, report.p_bound),
                    "p_bound_C": rc.at(int(m), delta_c),
                    "p_empirical_C": frac_C,
                    "ok_C": _ok(frac_C, rc.at(int(m), delta_c)),
                    "p_bound_Cplus": rp.at(int(m), delta_p),
                    "p_empirical_Cplus": frac_Cp,
                    "ok_Cplus": _ok(frac_Cp, rp.at(int(m), delta_p)),
                }
            )
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def write_csv(path, rows, schema):
    """Schema-tagged CSV; float cells use repr for byte-stable round-trips."""
    if not rows:
        raise ConfigError("no rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {CSV_SCHEMAS[schema]}\n")
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_cell(row[k]) for k in fields])


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, np.floating):
        return repr(float(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v
