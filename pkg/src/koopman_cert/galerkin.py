"""Exact mass/stiffness matrices and the Galerkin matrix K_V = C^{-1} C_+."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dictionaries import DictionaryKind
from .errors import ConfigError, NumericalError, SingularMass
from .systems import CircleRotationSystem, FiniteMarkovSystem

COND_THRESHOLD = 1e12
QUADRATURE_NODES = 2**16


@dataclass
class Provenance:
    kind: str  # "exact" | "empirical"
    m: Optional[int] = None
    seed: Optional[int] = None


@dataclass
class GramPair:
    """Mass matrix C = (<psi_i, psi_j>) and stiffness C_+ = (<psi_i, K psi_j>)."""

    C: np.ndarray
    Cplus: np.ndarray
    provenance: Provenance

    def to_json_dict(self):
        return {
            "C": self.C.tolist(),
            "Cplus": self.Cplus.tolist(),
            "provenance": {
                "kind": self.provenance.kind,
                "m": self.provenance.m,
                "seed": self.provenance.seed,
            },
        }

    @classmethod
    def from_json_dict(cls, d):
        prov = d.get("provenance", {})
        return cls(
            np.asarray(d["C"], dtype=np.float64),
            np.asarray(d["Cplus"], dtype=np.float64),
            Provenance(prov.get("kind", "exact"), prov.get("m"), prov.get("seed")),
        )


@dataclass
class KoopmanGalerkinMatrix:
    KV: np.ndarray
    source: GramPair


def _check_condition(C):
    s = np.linalg.svd(C, compute_uv=False)
    if s[-1] == 0 or s[0] / s[-1] > COND_THRESHOLD:
        raise SingularMass(
            f"mass matrix condition number exceeds {COND_THRESHOLD:g}"
        )


def exact_gram(sys: FiniteMarkovSystem, dictionary) -> GramPair:
    """Exact finite sums over the invariant distribution of a chain."""
    vals = dictionary.evaluate(np.arange(sys.n_states))  # (N, n)
    w = vals * sys.pi  # psi_i(x) pi(x)
    C = w @ vals.T
    kvals = vals @ sys.transition.T  # (K psi_j)(x) in row j
    Cplus = w @ kvals.T
    C = 0.5 * (C + C.T)
    _check_condition(C)
    return GramPair(C, Cplus, Provenance("exact"))


def exact_gram_circle(sys: CircleRotationSystem, dictionary) -> GramPair:
    """Analytic C = I and block-rotation C_+ for the Fourier dictionary.

    Per frequency k the stiffness block is
    [[cos(2 pi k t0), sin(2 pi k t0)], [-sin(2 pi k t0), cos(2 pi k t0)]].
    """
    if dictionary.kind is not DictionaryKind.FOURIER:
        raise ConfigError("analytic circle Gram matrices require a Fourier dictionary")
    F = dictionary.metadata["max_freq"]
    N = dictionary.size
    C = np.eye(N)
    Cplus = np.zeros((N, N))
    Cplus[0, 0] = 1.0
    for k in range(1, F + 1):
        ang = 2.0 * np.pi * k * sys.t0
        c, s = np.cos(ang), np.sin(ang)
        i = 2 * k - 1
        Cplus[i : i + 2, i : i + 2] = [[c, s], [-s, c]]
    return GramPair(C, Cplus, Provenance("exact"))


def quadrature_mass_circle(dictionary, nodes=QUADRATURE_NODES):
    """Composite-trapezoid mass matrix on the circle (periodic: plain mean)."""
    t = np.arange(nodes) / nodes
    vals = dictionary.evaluate(t)
    return (vals @ vals.T) / nodes


def quadrature_gram_circle(sys, dictionary, nodes=QUADRATURE_NODES):
    """Quadrature C and C_+ for arbitrary circle observables (tol ~1e-10)."""
    t = np.arange(nodes) / nodes
    vals = dictionary.evaluate(t)
    kvals = dictionary.evaluate(np.mod(t + sys.t0, 1.0))
    C = (vals @ vals.T) / nodes
    Cplus = (vals @ kvals.T) / nodes
    C = 0.5 * (C + C.T)
    _check_condition(C)
    return GramPair(C, Cplus, Provenance("exact"))


def galerkin_matrix(gram: GramPair) -> KoopmanGalerkinMatrix:
    """Solve C X = C_+ by LU factorization; never forms C^{-1} explicitly."""
    _check_condition(gram.C)
    KV = np.linalg.solve(gram.C, gram.Cplus)
    resid = np.linalg.norm(gram.C @ KV - gram.Cplus)
    if resid > 1e-9 * max(np.linalg.norm(gram.Cplus), 1e-300):
        raise NumericalError("Galerkin solve residual exceeds 1e-9 relative")
    return KoopmanGalerkinMatrix(KV, gram)


def inv_fro_norm(C):
    """||C^{-1}||_F via explicit inverse of the small N x N mass matrix."""
    _check_condition(C)
    return float(np.linalg.norm(np.linalg.inv(C)))
