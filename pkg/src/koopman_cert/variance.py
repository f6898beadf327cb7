"""Exact variance representations for the empirical Gram estimators.

Under ergodic sampling the mean-square errors of C_hat and C_hat_plus admit
closed finite-dimensional expressions built from the operator K restricted
to mean-zero functions (K0), the polynomial

    p_m(z) = 2 * sum_{k=1}^{m-1} (1 - k/m) z^{k-1},

and, in the unitary case, the Fejer kernel.  Everything here is evaluated
exactly on a finite matrix representation; a brute-force Monte-Carlo oracle
is provided for verification.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .dictionaries import DictionaryKind, evaluate_batch
from .errors import (
    NotUnitary,
    NumericalError,
    UnsupportedSystem,
)
from .galerkin import exact_gram, exact_gram_circle, quadrature_gram_circle
from .systems import CircleRotationSystem, FiniteMarkovSystem, ergodic_chunk

HORNER_MAX = 4096
GAP_THRESHOLD = 1e-10
UNITARY_TOL = 1e-8


# ---------------------------------------------------------------------------
# the polynomial p_m
# ---------------------------------------------------------------------------

def pm_polynomial(m, z):
    """p_m(z) = 2 sum_{k=1}^{m-1} (1 - k/m) z^{k-1}; p_m(1) = m - 1."""
    m = int(m)
    z = complex(z)
    if m <= 1:
        return 0.0 + 0.0j
    if abs(1.0 - z) < 1e-6:
        # closed form is ill-conditioned near z = 1: sum directly
        k = np.arange(1, m)
        return complex(2.0 * np.sum((1.0 - k / m) * z ** (k - 1)))
    geo = (1.0 - z**m) / (1.0 - z)
    return 2.0 / (1.0 - z) * (1.0 - geo / m)


def _pm_eigvals(lam, m):
    """p_m evaluated on an array of (possibly complex) eigenvalues."""
    lam = np.asarray(lam)
    out = np.empty(lam.shape, dtype=complex)
    for idx, z in np.ndenumerate(lam):
        out[idx] = pm_polynomial(m, z)
    return out


def pm_apply_vectors(M, U, m):
    """Columns of p_m(M) @ U for the reduced mean-zero operator M.

    Uses the forward recurrence for moderate m; for large m it switches to
    the eigendecomposition when M is normal, or to the closed form
    2 (I-M)^{-1} (I - S_m / m) with S_m = sum_{k<m} M^k when 1 is outside
    the spectrum.
    """
    m = int(m)
    U = np.asarray(U, dtype=np.float64)
    if m <= 1 or U.size == 0:
        return np.zeros_like(U)
    d = M.shape[0]
    if m <= HORNER_MAX:
        V = U.copy()
        acc = 2.0 * (1.0 - 1.0 / m) * V
        for k in range(2, m):
            V = M @ V
            acc += 2.0 * (1.0 - k / m) * V
        return acc
    if _is_symmetric(M):
        lam, Q = np.linalg.eigh(M)
        vals = _pm_eigvals(lam, m).real
        return Q @ (vals[:, None] * (Q.T @ U))
    gap = spectral_gap_of(M)
    if gap > GAP_THRESHOLD:
        ImM = np.eye(d) - M
        Mm_U = np.linalg.matrix_power(M, m) @ U
        S = np.linalg.solve(ImM, U - Mm_U)
        return 2.0 * np.linalg.solve(ImM, U - S / m)
    # last resort: exact but O(m) recurrence
    V = U.copy()
    acc = 2.0 * (1.0 - 1.0 / m) * V
    for k in range(2, m):
        V = M @ V
        acc += 2.0 * (1.0 - k / m) * V
    return acc


def pm_apply(rep, m):
    """Natural-coordinate matrix acting as p_m(K0) on mean-zero functions
    (and as zero on constants)."""
    P = pm_apply_vectors(rep.M, np.eye(rep.dim - 1), int(m))
    lifted = rep.B @ P @ rep.B.T
    return (lifted * rep.sqrtw[None, :]) / rep.sqrtw[:, None]


def mean_power_apply(M, U, m):
    """(1/m) sum_{k=0}^{m-1} M^k U (the ergodic average of the orbit of U)."""
    U = np.asarray(U, dtype=np.float64)
    acc = U.copy()
    V = U.copy()
    for _ in range(1, int(m)):
        V = M @ V
        acc += V
    return acc / m


def _is_symmetric(M, tol=1e-12):
    return np.max(np.abs(M - M.T)) <= tol * max(1.0, np.max(np.abs(M)))


def spectral_gap_of(M):
    """Distance of 1 from the spectrum of the reduced operator."""
    lam = np.linalg.eigvals(M)
    if lam.size == 0:
        return np.inf
    return float(np.min(np.abs(1.0 - lam)))


# ---------------------------------------------------------------------------
# Fejer kernel
# ---------------------------------------------------------------------------

def fejer_kernel(m, t):
    """F_m(t) = sum_{|k| <= m-1} (1 - |k|/m) e^{ikt}, t in radians.

    Evaluated via F_m(t) = (1/m) (sin(mt/2) / sin(t/2))^2, which equals the
    sum definition; note this is (1/m) (1-cos(mt)) / (1-cos t) *without* an
    outer square on the ratio - squaring the cosine ratio is a tempting
    transcription slip that does not match the sum.  F_m(0) = m.
    """
    m = int(m)
    t = np.asarray(t, dtype=np.float64)
    s = np.sin(t / 2.0)
    small = np.abs(s) < 1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(m * t / 2.0) / s
        vals = ratio * ratio / m
    # quadratic Taylor expansion around the removable singularity
    vals = np.where(small, m * (1.0 - (m * m - 1.0) * t * t / 12.0), vals)
    if vals.ndim == 0:
        return float(vals)
    return vals


def fejer_kernel_sum(m, t):
    """O(m) reference evaluation: 1 + 2 sum_{k=1}^{m-1} (1 - k/m) cos(kt)."""
    m = int(m)
    k = np.arange(1, m)
    return float(1.0 + 2.0 * np.sum((1.0 - k / m) * np.cos(k * np.asarray(t, dtype=float))))


# ---------------------------------------------------------------------------
# finite matrix representation
# ---------------------------------------------------------------------------

class KoopmanMatrixRep:
    """K, its weighted adjoint, and the mean-zero compression K0 on a
    computable function space.

    Functions are coefficient vectors in natural coordinates: values on
    states for finite chains, real Fourier coefficients (constant, then
    sqrt2-normalized cos/sin pairs) for the circle.  `M` is K0 expressed in
    an orthonormal basis of the mean-zero subspace, so Euclidean geometry on
    reduced coordinates equals the weighted L2 geometry.
    """

    def __init__(self, kind, K, Kstar, weights, one, meta):
        self.kind = kind
        self.K = K
        self.Kstar = Kstar
        self.weights = weights
        self.one = one
        self.meta = meta
        self.dim = K.shape[0]
        sqrtw = np.sqrt(weights)
        self.sqrtw = sqrtw
        # unit vector of the scaled constant function; ||1||_w = 1
        e = sqrtw * one
        e = e / np.linalg.norm(e)
        self.B = _complement_basis(e)
        G = (sqrtw[:, None] * K) / sqrtw[None, :]
        self.M = self.B.T @ G @ self.B
        self.unitary = bool(np.linalg.norm(G.T @ G - np.eye(self.dim)) <= UNITARY_TOL)
        self.Q = np.eye(self.dim) - np.outer(one, weights * one)

    # -- geometry ---------------------------------------------------------
    def inner(self, f, g):
        """Weighted inner product; conjugate-linear in the second slot."""
        val = np.sum(self.weights * np.asarray(f) * np.conj(np.asarray(g)))
        if np.iscomplexobj(f) or np.iscomplexobj(g):
            return complex(val)
        return float(val)

    def norm_sq(self, f):
        return float(np.sum(self.weights * np.abs(np.asarray(f)) ** 2))

    def project_zero(self, f):
        """Remove the component along the constant function."""
        f = np.asarray(f)
        coeff = np.sum(self.weights * f * self.one)
        return f - coeff * self.one

    def to_reduced(self, X):
        """Natural (d, ...) -> orthonormal mean-zero coordinates (d-1, ...).

        Constant components are annihilated, so to_reduced(f) equals
        to_reduced(Qf).
        """
        X = np.asarray(X)
        return self.B.T @ (self.sqrtw[:, None] * X if X.ndim == 2 else self.sqrtw * X)

    def from_reduced(self, U):
        U = np.asarray(U)
        lifted = self.B @ U
        return lifted / (self.sqrtw[:, None] if lifted.ndim == 2 else self.sqrtw)

    # -- operators --------------------------------------------------------
    def apply_K(self, f):
        return self.K @ np.asarray(f)

    def apply_Kstar(self, f):
        return self.Kstar @ np.asarray(f)

    def multiply(self, f, g):
        """Pointwise product of two functions, in natural coordinates."""
        if self.kind == "chain":
            return np.asarray(f) * np.asarray(g)
        return _fourier_multiply(f, g, self.meta["R"])

    def spectral_gap(self):
        return spectral_gap_of(self.M)

    def resolvent_norms(self):
        """(||(I-K0)^{-1}||, ||K0 (I-K0)^{-1}||) in the weighted operator norm."""
        from .errors import NoSpectralGap

        if self.spectral_gap() <= GAP_THRESHOLD:
            raise NoSpectralGap("eigenvalue 1 is not isolated in the representation")
        R = np.linalg.inv(np.eye(self.dim - 1) - self.M)
        return (
            float(np.linalg.norm(R, 2)),
            float(np.linalg.norm(self.M @ R, 2)),
        )

    def pm_operator_norms(self, m):
        """(||p_m(K0)||, ||K0 p_m(K0)||) as largest singular values."""
        P = pm_apply_vectors(self.M, np.eye(self.dim - 1), m)
        return float(np.linalg.norm(P, 2)), float(np.linalg.norm(self.M @ P, 2))

    def eigen_system(self):
        """Unitary eigen-decomposition of the mean-zero compression.

        Returns (ts, V): angles in revolutions within [-1/2, 1/2) and an
        orthonormal complex eigenvector matrix in reduced coordinates.  The
        circle representation is enumerated analytically; generic unitary
        representations fall back to a numerical eigensolver.
        """
        if not self.unitary:
            raise NotUnitary("eigen-system on the unit circle requires a unitary K")
        if self.kind == "circle":
            return self._circle_eigs()
        lam, V = np.linalg.eig(self.M)
        V = V / np.linalg.norm(V, axis=0)
        if np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1])) > 1e-8:
            V = _orthonormalize_clusters(lam, V)
        ts = wrap_angle(np.angle(lam) / (2.0 * np.pi))
        return ts, V

    def _circle_eigs(self):
        t0 = self.meta["t0"]
        R = self.meta["R"]
        d0 = self.dim - 1
        ts = np.empty(2 * R)
        V = np.zeros((d0, 2 * R), dtype=complex)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for k in range(1, R + 1):
            # reduced coords drop the constant: block k sits at 2k-2, 2k-1
            i = 2 * (k - 1)
            ts[i] = wrap_angle(k * t0)
            V[2 * k - 2, i] = inv_sqrt2
            V[2 * k - 1, i] = 1j * inv_sqrt2
            ts[i + 1] = wrap_angle(-k * t0)
            V[2 * k - 2, i + 1] = inv_sqrt2
            V[2 * k - 1, i + 1] = -1j * inv_sqrt2
        return ts, V


def wrap_angle(t):
    """Map revolutions to the principal interval [-1/2, 1/2)."""
    return (np.asarray(t) + 0.5) % 1.0 - 0.5


def _complement_basis(e):
    """Deterministic orthonormal basis of the complement of a unit vector.

    Columns 1..d-1 of the Householder reflection sending e to -sign(e0) e0.
    When e is already the first standard basis vector this is exactly the
    remaining standard basis, which keeps the circle's reduced coordinates
    aligned with its Fourier blocks.
    """
    e = np.asarray(e, dtype=np.float64)
    d = len(e)
    sign = 1.0 if e[0] >= 0 else -1.0
    v = e.copy()
    v[0] += sign
    H = np.eye(d) - 2.0 * np.outer(v, v) / (v @ v)
    return H[:, 1:]


def _orthonormalize_clusters(lam, V, tol=1e-9):
    """Re-orthonormalize eigenvectors within near-degenerate eigenvalue groups."""
    order = np.argsort(np.angle(lam))
    lam_s = lam[order]
    V = V[:, order].astype(complex)
    start = 0
    for i in range(1, len(lam_s) + 1):
        if i == len(lam_s) or abs(lam_s[i] - lam_s[start]) > tol:
            block = V[:, start:i]
            q, _ = np.linalg.qr(block)
            V[:, start:i] = q
            start = i
    return V


def _fourier_multiply(f, g, R):
    """Product of two trig polynomials in the real coefficient basis.

    Coefficients are converted to complex exponentials, convolved, and
    converted back; exact for products whose degree still fits in R.
    """
    gamma_f = _real_to_complex(f)
    gamma_g = _real_to_complex(g)
    prod = np.convolve(gamma_f, gamma_g)
    deg = (len(prod) - 1) // 2
    if deg > R:
        head = prod[: deg - R]
        tail = prod[deg + R + 1 :]
        if np.max(np.abs(head)) > 1e-12 or np.max(np.abs(tail)) > 1e-12:
            raise NumericalError("product degree exceeds the representation size")
        prod = prod[deg - R : deg + R + 1]
        deg = R
    return _complex_to_real(prod, R)


def _real_to_complex(f):
    f = np.asarray(f, dtype=np.float64)
    R = (len(f) - 1) // 2
    gamma = np.zeros(2 * R + 1, dtype=complex)  # index shift: gamma[R + k]
    gamma[R] = f[0]
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for k in range(1, R + 1):
        a, b = f[2 * k - 1], f[2 * k]
        gamma[R + k] = (a - 1j * b) * inv_sqrt2
        gamma[R - k] = (a + 1j * b) * inv_sqrt2
    return gamma


def _complex_to_real(gamma, R_out):
    deg = (len(gamma) - 1) // 2
    out = np.zeros(2 * R_out + 1)
    out[0] = gamma[deg].real
    sqrt2 = np.sqrt(2.0)
    for k in range(1, min(deg, R_out) + 1):
        gp, gm = gamma[deg + k], gamma[deg - k]
        out[2 * k - 1] = ((gp + gm) / sqrt2).real
        out[2 * k] = (1j * (gp - gm) / sqrt2).real
    return out


def build_rep(sys, dictionary):
    """Finite representation carrying 1, all psi_i, and all of their products.

    Finite chains represent every function exactly; the circle uses the
    Fourier space truncated at twice the dictionary's maximal frequency
    (products of dictionary elements close at the doubled degree).
    """
    if isinstance(sys, FiniteMarkovSystem):
        pi = sys.pi
        K = sys.transition.copy()
        Kstar = (pi[None, :] * sys.transition.T) / pi[:, None]
        one = np.ones(sys.n_states)
        return KoopmanMatrixRep("chain", K, Kstar, pi, one, {"system": sys})
    if isinstance(sys, CircleRotationSystem):
        if dictionary.kind is not DictionaryKind.FOURIER:
            raise UnsupportedSystem(
                "circle representations require a Fourier dictionary"
            )
        F = dictionary.metadata["max_freq"]
        R = 2 * F
        d = 2 * R + 1
        K = np.zeros((d, d))
        K[0, 0] = 1.0
        for k in range(1, R + 1):
            ang = 2.0 * np.pi * k * sys.t0
            c, s = np.cos(ang), np.sin(ang)
            i = 2 * k - 1
            # K maps coefficient pairs by the transposed rotation block
            K[i : i + 2, i : i + 2] = [[c, s], [-s, c]]
        one = np.zeros(d)
        one[0] = 1.0
        weights = np.ones(d)
        return KoopmanMatrixRep(
            "circle", K, K.T, weights, one, {"t0": sys.t0, "R": R, "system": sys}
        )
    raise UnsupportedSystem(
        f"no exact representation for {type(sys).__name__}"
    )


def embed_dictionary(rep, dictionary):
    """Dictionary functions as rows of an (N, dim) natural-coordinate array."""
    if rep.kind == "chain":
        return dictionary.evaluate(np.arange(rep.dim))
    F = dictionary.metadata["max_freq"]
    N = dictionary.size
    out = np.zeros((N, rep.dim))
    out[0, 0] = 1.0
    for k in range(1, F + 1):
        out[2 * k - 1, 2 * k - 1] = 1.0
        out[2 * k, 2 * k] = 1.0
    return out


def function_family(rep, dictionary):
    """psi_ij = psi_i psi_j, g_ij = psi_i K psi_j, gs[i,j] = psi_j K* psi_i,
    and phi = sum_j psi_j^2, all in natural coordinates."""
    psis = embed_dictionary(rep, dictionary)
    N = psis.shape[0]
    kpsis = (rep.K @ psis.T).T
    kstar_psis = (rep.Kstar @ psis.T).T
    psi_ij = np.empty((N, N, rep.dim))
    g_ij = np.empty((N, N, rep.dim))
    gs_ij = np.empty((N, N, rep.dim))  # gs_ij[i, j] = psi_j * K* psi_i
    for i in range(N):
        for j in range(N):
            psi_ij[i, j] = rep.multiply(psis[i], psis[j])
            g_ij[i, j] = rep.multiply(psis[i], kpsis[j])
            gs_ij[i, j] = rep.multiply(psis[j], kstar_psis[i])
    phi = psi_ij.reshape(N * N, rep.dim)[:: N + 1].sum(axis=0)
    return {"psi": psis, "psi_ij": psi_ij, "g_ij": g_ij, "gs_ij": gs_ij, "phi": phi}


def gram_from_rep(rep, fam):
    """Exact C and C_+ recomputed inside the representation."""
    psis = fam["psi"]
    w = psis * rep.weights
    C = w @ psis.T
    Cplus = w @ (rep.K @ psis.T)
    return C, Cplus


@dataclass
class VarianceReport:
    """sigma^2 constants and the per-sample variances they induce."""

    m: int
    sigma2_plus: float
    sigma2_zero: float
    E_plus: float
    E_zero: float
    var_Cplus: float
    var_C: float

    def to_json_dict(self):
        return {
            "m": self.m,
            "sigma2_plus": self.sigma2_plus,
            "sigma2_zero": self.sigma2_zero,
            "E_plus": self.E_plus,
            "E_zero": self.E_zero,
            "var_Cplus": self.var_Cplus,
            "var_C": self.var_C,
        }


def variance_constants(rep, fam):
    """E_plus = <K phi, phi> - ||C_+||_F^2 and E_zero = ||phi||^2 - ||C||_F^2."""
    C, Cplus = gram_from_rep(rep, fam)
    phi = fam["phi"]
    E_plus = float(np.sum(rep.weights * (rep.K @ phi) * phi) - np.sum(Cplus * Cplus))
    E_zero = float(np.sum(rep.weights * phi * phi) - np.sum(C * C))
    return E_plus, E_zero


def exact_variance(rep, dictionary, m) -> VarianceReport:
    """Exact E||C - C_hat||_F^2 = sigma2_zero / m and the C_+ analogue.

    sigma2_plus = E_plus + sum_ij <p_m(K0) Q g_ij, Q g*_ji> and
    sigma2_zero = E_zero + sum_ij <K0 p_m(K0) Q psi_ij, Q psi_ij>.
    """
    m = int(m)
    fam = function_family(rep, dictionary)
    E_plus, E_zero = variance_constants(rep, fam)
    N = fam["psi"].shape[0]
    d = rep.dim

    U = rep.to_reduced(fam["g_ij"].reshape(N * N, d).T)
    Us = rep.to_reduced(fam["gs_ij"].reshape(N * N, d).T)
    V = rep.to_reduced(fam["psi_ij"].reshape(N * N, d).T)

    PU = pm_apply_vectors(rep.M, U, m)
    sigma2_plus = E_plus + float(np.sum(PU * Us))
    PV = pm_apply_vectors(rep.M, V, m)
    sigma2_zero = E_zero + float(np.sum((rep.M @ PV) * V))
    return VarianceReport(
        m, sigma2_plus, sigma2_zero, E_plus, E_zero, sigma2_plus / m, sigma2_zero / m
    )


def ergodic_average_sq_norm(rep, f_natural, m):
    """|| (1/m) sum_{k<m} K0^k Q f ||^2 in the weighted norm."""
    u = rep.to_reduced(np.asarray(f_natural, dtype=np.float64))
    v = mean_power_apply(rep.M, u[:, None], m)
    return float(np.sum(v * v))


def spectral_fejer_value(ts, weights, m):
    """(1/m) sum_n F_m(2 pi t_n) w_n, the spectral form of the mean norm."""
    return float(np.sum(fejer_kernel(m, 2.0 * np.pi * np.asarray(ts)) * weights) / m)


def geometric_mean_sq(ts, weights, m):
    """Per-atom geometric sums: sum_n w_n |1 - c^m|^2 / (m^2 |1 - c|^2)."""
    c = np.exp(2j * np.pi * np.asarray(ts))
    num = np.abs(1.0 - c**m) ** 2
    den = (m * np.abs(1.0 - c)) ** 2
    vals = np.where(den == 0, 1.0, num / np.where(den == 0, 1.0, den))
    return float(np.sum(vals * weights))


def _family_fejer_forms(rep, vectors_reduced, m):
    """(ergodic-average form, spectral form) for a stack of reduced vectors."""
    V = vectors_reduced
    avg = mean_power_apply(rep.M, V, m)
    form_avg = float(np.sum(avg * avg))
    ts, E = rep.eigen_system()
    proj = E.conj().T @ V  # (n_eigs, n_funcs)
    weights = np.abs(proj) ** 2
    form_spec = float(
        np.sum(fejer_kernel(m, 2.0 * np.pi * ts)[:, None] * weights) / m
    )
    return form_avg, form_spec


def fejer_variance(rep, dictionary, m, rtol=1e-9) -> VarianceReport:
    """Unitary-case variances via ergodic averages, cross-checked spectrally.

    E||C_+ - C_hat_plus||^2 = sum_ij ||(1/m) sum_{k<m} K0^k Q g_ij||^2 and
    the analogous psi_ij expression for C; the spectral evaluation
    integrates the Fejer kernel against each function's spectral measure.
    """
    if not rep.unitary:
        raise NotUnitary("Fejer variance requires a unitary representation")
    m = int(m)
    fam = function_family(rep, dictionary)
    E_plus, E_zero = variance_constants(rep, fam)
    N = fam["psi"].shape[0]
    d = rep.dim
    U = rep.to_reduced(fam["g_ij"].reshape(N * N, d).T)
    V = rep.to_reduced(fam["psi_ij"].reshape(N * N, d).T)

    var_plus, var_plus_spec = _family_fejer_forms(rep, U, m)
    var_zero, var_zero_spec = _family_fejer_forms(rep, V, m)
    for a, b in ((var_plus, var_plus_spec), (var_zero, var_zero_spec)):
        scale = max(abs(a), abs(b), 1e-300)
        if abs(a - b) > rtol * scale:
            raise NumericalError(
                f"Fejer forms disagree: ergodic-average {a} vs spectral {b}"
            )
    return VarianceReport(
        m, m * var_plus, m * var_zero, E_plus, E_zero, var_plus, var_zero
    )


# ---------------------------------------------------------------------------
# Monte-Carlo oracle
# ---------------------------------------------------------------------------

@dataclass
class OracleResult:
    m: int
    n_trials: int
    var_C_hat: float
    var_Cplus_hat: float
    stderr_C: float
    stderr_Cplus: float


def _chunk_sq_errors(sys, dictionary, C, Cplus, m, seed, chunk_index, count):
    """Per-trial squared Frobenius errors of C_hat and C_hat_plus."""
    paths = ergodic_chunk(sys, m, seed, chunk_index, count)
    if isinstance(sys, FiniteMarkovSystem):
        table = dictionary.evaluate(np.arange(sys.n_states)).T  # (n, N)
        psi = table[paths]  # (count, m+1, N)
    else:
        flat = evaluate_batch(dictionary, paths.ravel())
        psi = flat.T.reshape(count, m + 1, -1)
    Chat = np.einsum("bki,bkj->bij", psi[:, :m], psi[:, :m]) / m
    Cphat = np.einsum("bki,bkj->bij", psi[:, :m], psi[:, 1:]) / m
    errC = np.sum((Chat - C) ** 2, axis=(1, 2))
    errCp = np.sum((Cphat - Cplus) ** 2, axis=(1, 2))
    return errC, errCp


def exact_reference_gram(sys, dictionary):
    """Exact GramPair for any system supporting one."""
    if isinstance(sys, FiniteMarkovSystem):
        return exact_gram(sys, dictionary)
    if isinstance(sys, CircleRotationSystem):
        if dictionary.kind is DictionaryKind.FOURIER:
            return exact_gram_circle(sys, dictionary)
        return quadrature_gram_circle(sys, dictionary)
    raise UnsupportedSystem(f"no exact Gram reference for {type(sys).__name__}")


def montecarlo_variance_oracle(
    sys, dictionary, m, n_trials, seed, threads=1
) -> OracleResult:
    """Sample mean of ||C - C_hat||_F^2 (and the C_+ analogue) over
    independent stationary trajectories, with standard errors."""
    n_trials = int(n_trials)
    gram = exact_reference_gram(sys, dictionary)
    C, Cplus = gram.C, gram.Cplus
    chunks = list(rng.trial_chunks(n_trials))

    def work(spec):
        chunk, _, count = spec
        return _chunk_sq_errors(sys, dictionary, C, Cplus, m, seed, chunk, count)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(spec) for spec in chunks]

    errC = np.concatenate([r[0] for r in results])
    errCp = np.concatenate([r[1] for r in results])

    def mean_stderr(x):
        mean = float(np.mean(x))
        if len(x) < 2:
            return mean, float("inf")
        return mean, float(np.std(x, ddof=1) / np.sqrt(len(x)))

    vc, sc = mean_stderr(errC)
    vp, sp = mean_stderr(errCp)
    return OracleResult(int(m), n_trials, vc, vp, sc, sp)
