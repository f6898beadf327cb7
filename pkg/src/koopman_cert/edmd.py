"""Empirical estimators C_hat, C_hat_plus, K_hat and invertibility diagnostics."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dictionaries import evaluate_batch
from .errors import ConfigError, DimensionMismatch, SingularEmpiricalMass
from .galerkin import GramPair, KoopmanGalerkinMatrix, Provenance
from .systems import FiniteMarkovSystem, Regime, SamplePairs

SVD_RTOL = 1e-12


@dataclass
class EdmdEstimate:
    gram: GramPair
    Khat: np.ndarray
    m: int
    regime: Regime

    def to_json_dict(self):
        d = self.gram.to_json_dict()
        d.update({"Khat": self.Khat.tolist(), "m": self.m, "regime": self.regime.value})
        return d


def empirical_gram(dictionary, pairs: SamplePairs, ridge=0.0) -> GramPair:
    """C_hat = Psi_X Psi_X^T / m, C_hat_plus = Psi_X Psi_Y^T / m.

    No regularization by default; `ridge` adds eps*I for exploratory use
    only (certification paths always run with ridge=0).
    """
    psi_x = evaluate_batch(dictionary, pairs.xs)
    psi_y = evaluate_batch(dictionary, pairs.ys)
    m = pairs.m
    C = psi_x @ psi_x.T / m
    C = 0.5 * (C + C.T)
    if ridge:
        C = C + ridge * np.eye(C.shape[0])
    Cplus = psi_x @ psi_y.T / m
    return GramPair(C, Cplus, Provenance("empirical", m=m, seed=pairs.seed))


def solve_khat(C, Cplus):
    """K_hat from C_hat K_hat = C_hat_plus, with an SVD invertibility gate."""
    s = np.linalg.svd(C, compute_uv=False)
    if s[0] <= 0 or s[-1] <= SVD_RTOL * s[0]:
        raise SingularEmpiricalMass(
            "empirical mass matrix is numerically singular (need m >= N and "
            "non-degenerate sampling)"
        )
    return np.linalg.solve(C, Cplus)


def edmd_estimate(dictionary, pairs: SamplePairs, ridge=0.0) -> EdmdEstimate:
    gram = empirical_gram(dictionary, pairs, ridge=ridge)
    Khat = solve_khat(gram.C, gram.Cplus)
    return EdmdEstimate(gram, Khat, pairs.m, pairs.regime)


def estimation_error(est: EdmdEstimate, ref: KoopmanGalerkinMatrix):
    """Frobenius errors of K_hat, C_hat, C_hat_plus against the exact reference."""
    if est.Khat.shape != ref.KV.shape:
        raise DimensionMismatch(
            f"estimate is {est.Khat.shape}, reference is {ref.KV.shape}"
        )
    return {
        "err_K": float(np.linalg.norm(ref.KV - est.Khat)),
        "err_C": float(np.linalg.norm(ref.source.C - est.gram.C)),
        "err_Cplus": float(np.linalg.norm(ref.source.Cplus - est.gram.Cplus)),
    }


def transition_count_estimator(pairs: SamplePairs, n_states):
    """K_hat in closed form for the indicator dictionary: counts(i->j)/visits(i)."""
    xs = np.asarray(pairs.xs, dtype=np.int64)
    ys = np.asarray(pairs.ys, dtype=np.int64)
    n = int(n_states)
    counts = np.bincount(xs * n + ys, minlength=n * n).reshape(n, n).astype(np.float64)
    visits = counts.sum(axis=1)
    if np.any(visits == 0):
        raise SingularEmpiricalMass("some states were never visited")
    return counts / visits[:, None]


def ergodic_invertibility_condition(sys: FiniteMarkovSystem, dictionary, max_states=12):
    """Check the trajectory-invertibility hypothesis on a finite chain.

    For every subspace spanned by at most N-1 dictionary columns, states
    mapping into the subspace must carry zero transition mass back into its
    preimage.  Sufficient for a.s. invertibility of the empirical mass matrix
    along ergodic trajectories of length >= N+1.
    """
    n = sys.n_states
    if n > max_states:
        raise ConfigError(f"subspace enumeration limited to {max_states} states")
    vals = dictionary.evaluate(np.arange(n))  # (N, n)
    N = dictionary.size
    P = sys.transition
    seen = set()
    for size in range(1, N):
        for subset in combinations(range(n), size):
            basis = vals[:, subset]
            rank = np.linalg.matrix_rank(basis)
            if rank >= N:
                continue
            # preimage of span(basis): states whose column stays in the span
            pre = []
            for x in range(n):
                aug = np.column_stack([basis, vals[:, x]])
                if np.linalg.matrix_rank(aug) == rank:
                    pre.append(x)
            key = tuple(pre)
            if key in seen or not pre:
                continue
            seen.add(key)
            mass = P[np.ix_(pre, pre)].sum(axis=1)
            if np.any(mass > 0):
                return False
    return True
