"""Dynamical-system abstractions and sample-pair generation.

Four system classes are provided: finite Markov chains (the exactly
computable reference class), circle rotations by an irrational angle, noisy
iterated maps, and Euler-Maruyama discretizations of SDEs.  Samplers produce
(x_k, y_k) pairs either from one stationary trajectory (ergodic regime) or
as independent draws (i.i.d. regime), always from explicit seeds.
"""

import enum
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from . import kernels, rng
from .errors import ConfigError, NonErgodicChain


class Regime(enum.Enum):
    ERGODIC = "ergodic"
    IID = "iid"


@dataclass
class SamplePairs:
    """m sample pairs (xs[k], ys[k]) plus the regime and seed they came from."""

    xs: np.ndarray
    ys: np.ndarray
    regime: Regime
    seed: int

    @property
    def m(self):
        return len(self.xs)


def _check_square_stochastic(P, tol=1e-12):
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ConfigError(f"transition matrix must be square, got {P.shape}")
    if np.any(P < 0):
        raise ConfigError("transition matrix has negative entries")
    rows = P.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > tol:
        raise ConfigError("transition matrix rows must sum to 1 within 1e-12")
    return P


class FiniteMarkovSystem:
    """Finite-state Markov chain given by a row-stochastic transition matrix.

    The invariant distribution is computed (never user-supplied) and is only
    defined when the chain is ergodic (irreducible and aperiodic).
    """

    def __init__(self, transition):
        P = _check_square_stochastic(transition).copy()
        P.setflags(write=False)
        self.transition = P
        self.n_states = P.shape[0]
        g = nx.DiGraph(
            [(i, j) for i in range(self.n_states) for j in range(self.n_states) if P[i, j] > 0.0]
        )
        g.add_nodes_from(range(self.n_states))
        self._irreducible = nx.is_strongly_connected(g)
        self.is_ergodic = self._irreducible and nx.is_aperiodic(g)
        self._pi = self._solve_invariant() if self._irreducible else None
        # row-wise cdf for the sampling kernels; force the last column to
        # dominate every uniform in [0, 1)
        cdf = np.cumsum(P, axis=1)
        cdf[:, -1] = np.maximum(cdf[:, -1], 1.0)
        cdf.setflags(write=False)
        self._cdf = cdf

    def _solve_invariant(self):
        # solve pi (P - I) = 0 with the normalization sum(pi) = 1 by
        # replacing the last equation
        n = self.n_states
        A = self.transition.T - np.eye(n)
        A[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        pi = np.linalg.solve(A, b)
        pi = np.maximum(pi, 0.0)
        pi /= pi.sum()
        pi.setflags(write=False)
        return pi

    @property
    def pi(self):
        if not self.is_ergodic:
            raise NonErgodicChain(
                "invariant distribution requires an irreducible aperiodic chain"
            )
        return self._pi

    def is_reversible(self, tol=1e-10):
        pi = self.pi
        flux = pi[:, None] * self.transition
        return bool(np.max(np.abs(flux - flux.T)) <= tol)


def invariant_measure(sys):
    """Invariant probability vector pi with pi P = pi, pi > 0."""
    return sys.pi


def koopman_matrix_exact(sys):
    """Transition matrix acting on observables: (K psi)(i) = sum_j P[i,j] psi(j)."""
    return sys.transition.copy()


@dataclass(frozen=True)
class QuadraticIrrational:
    """(a + b*sqrt(d)) / c with integer a, b, c, d; irrational by construction."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.c == 0:
            raise ConfigError("quadratic irrational needs c != 0")
        if self.b == 0:
            raise ConfigError("quadratic irrational needs b != 0")
        if self.d <= 0 or math.isqrt(self.d) ** 2 == self.d:
            raise ConfigError("d must be a positive non-square integer")

    def value(self):
        return (self.a + self.b * math.sqrt(self.d)) / self.c


class CircleRotationSystem:
    """Rotation t -> (t + t0) mod 1 on the circle, t0 in revolutions.

    Arc length is the ergodic invariant measure when t0 is irrational.  t0
    should be given as a QuadraticIrrational; a plain float is accepted for
    unit tests with rational angles.
    """

    def __init__(self, t0):
        if isinstance(t0, QuadraticIrrational):
            self.t0_exact = t0
            t0 = t0.value()
        else:
            self.t0_exact = None
        t0 = float(t0) % 1.0
        if not 0.0 <= t0 < 1.0:
            raise ConfigError("t0 must reduce to [0, 1)")
        self.t0 = t0

    @classmethod
    def from_quadratic(cls, a, b, c, d):
        return cls(QuadraticIrrational(a, b, c, d))

    def orbit(self, x0, n):
        """States x0, T(x0), ..., T^n(x0)."""
        return np.mod(float(x0) + self.t0 * np.arange(n + 1), 1.0)


def golden_rotation():
    """Rotation by (sqrt(5) - 1) / 2, the canonical irrational test angle."""
    return CircleRotationSystem.from_quadratic(-1, 1, 2, 5)


class NoisyMapSystem:
    """x_{n+1} = T(x_n) + eps_n with i.i.d. noise from a seeded sampler.

    map_fn maps (m, d) state arrays to (m, d) arrays; noise_sampler takes
    (generator, shape) and returns increments of that shape.  With zero
    noise the trajectory equals the deterministic orbit bit for bit.
    """

    def __init__(self, map_fn, noise_sampler, state_dim, x0=None):
        self.map_fn = map_fn
        self.noise_sampler = noise_sampler
        self.state_dim = int(state_dim)
        if self.state_dim < 1:
            raise ConfigError("state_dim must be positive")
        self.x0 = (
            np.zeros(self.state_dim) if x0 is None else np.asarray(x0, dtype=np.float64)
        )

    def step(self, x, gen):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        nxt = np.asarray(self.map_fn(x), dtype=np.float64)
        nxt = nxt + self.noise_sampler(gen, nxt.shape)
        return nxt


class SdeSystem:
    """Euler-Maruyama discretization of dY = f(Y) dt + sigma(Y) dW.

    One Koopman-lag sample advances by exactly lag / integrator_dt
    Euler-Maruyama substeps.
    """

    def __init__(self, drift, diffusion, state_dim, lag, integrator_dt=None):
        self.drift = drift
        self.diffusion = diffusion
        self.state_dim = int(state_dim)
        self.lag = float(lag)
        if self.lag <= 0:
            raise ConfigError("lag must be positive")
        self.integrator_dt = self.lag / 100.0 if integrator_dt is None else float(integrator_dt)
        if self.integrator_dt <= 0:
            raise ConfigError("integrator_dt must be positive")
        ratio = self.lag / self.integrator_dt
        self.substeps = int(round(ratio))
        if abs(ratio - self.substeps) > 1e-9 or self.substeps < 1:
            raise ConfigError("lag must be a positive integer multiple of integrator_dt")
        self.x0 = np.zeros(self.state_dim)

    def step(self, x, gen):
        """Advance a batch of states by one Koopman lag."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        dt = self.integrator_dt
        sq = math.sqrt(dt)
        for _ in range(self.substeps):
            dw = gen.standard_normal(x.shape) * sq
            x = x + np.asarray(self.drift(x)) * dt + np.asarray(self.diffusion(x)) * dw
        return x


def _default_burn_in(sys, m):
    # systems with an exactly sampleable invariant measure need no burn-in
    if isinstance(sys, (FiniteMarkovSystem, CircleRotationSystem)):
        return 0
    return 10 * m


def sample_ergodic(sys, m, burn_in=None, seed=0):
    """One stationary trajectory of length m+1: ys[k] = xs[k+1].

    For finite chains x0 is drawn from the exact invariant distribution; the
    circle draws x0 uniformly (its exact invariant measure); other systems
    rely on burn-in (default 10*m steps).
    """
    m = int(m)
    if m < 1:
        raise ConfigError("m must be >= 1")
    if burn_in is None:
        burn_in = _default_burn_in(sys, m)
    burn_in = int(burn_in)

    if isinstance(sys, FiniteMarkovSystem):
        if not sys.is_ergodic:
            raise NonErgodicChain("ergodic sampling requires an ergodic chain")
        gen = rng.stream(seed, 0)
        x0 = np.searchsorted(np.cumsum(sys.pi), gen.random(), side="right")
        x0 = np.array([min(int(x0), sys.n_states - 1)], dtype=np.int64)
        u = gen.random((1, burn_in + m))
        paths = kernels.chain_paths(sys._cdf, x0, u)[0]
        traj = paths[burn_in:]
        return SamplePairs(traj[:m].copy(), traj[1:].copy(), Regime.ERGODIC, seed)

    if isinstance(sys, CircleRotationSystem):
        gen = rng.stream(seed, 0)
        x0 = gen.random()
        traj = np.mod(x0 + sys.t0 * np.arange(burn_in, burn_in + m + 1), 1.0)
        return SamplePairs(traj[:m], traj[1:], Regime.ERGODIC, seed)

    if isinstance(sys, (NoisyMapSystem, SdeSystem)):
        gen = rng.stream(seed, 0)
        x = np.atleast_2d(sys.x0)
        for _ in range(burn_in):
            x = sys.step(x, gen)
        traj = np.empty((m + 1, sys.state_dim))
        traj[0] = x[0]
        for k in range(m):
            x = sys.step(x, gen)
            traj[k + 1] = x[0]
        return SamplePairs(traj[:m].copy(), traj[1:].copy(), Regime.ERGODIC, seed)

    raise ConfigError(f"unknown system type {type(sys).__name__}")


def categorical_sampler(weights):
    """mu0 sampler drawing state indices from the given probability vector."""
    weights = np.asarray(weights, dtype=np.float64)
    cdf = np.cumsum(weights)
    cdf[-1] = max(cdf[-1], 1.0)

    def sampler(gen, m):
        return np.minimum(
            np.searchsorted(cdf, gen.random(m), side="right"), len(weights) - 1
        ).astype(np.int64)

    return sampler


def point_mass_sampler(x_star):
    """mu0 sampler that always returns x_star."""

    def sampler(gen, m):
        arr = np.asarray(x_star)
        if arr.ndim == 0:
            return np.full(m, arr[()])
        return np.tile(arr, (m, 1))

    return sampler


def transition_step(sys, xs, gen):
    """Draw y ~ rho(x, .) for each x in a batch."""
    if isinstance(sys, FiniteMarkovSystem):
        xs = np.asarray(xs, dtype=np.int64)
        u = gen.random((len(xs), 1))
        return kernels.chain_paths(sys._cdf, xs, u)[:, 1]
    if isinstance(sys, CircleRotationSystem):
        return np.mod(np.asarray(xs, dtype=np.float64) + sys.t0, 1.0)
    if isinstance(sys, (NoisyMapSystem, SdeSystem)):
        return sys.step(np.asarray(xs, dtype=np.float64), gen)
    raise ConfigError(f"unknown system type {type(sys).__name__}")


def sample_iid(sys, mu0_sampler, m, seed=0):
    """m independent pairs: x_k ~ mu0, y_k ~ rho(x_k, .)."""
    m = int(m)
    if m < 1:
        raise ConfigError("m must be >= 1")
    gen = rng.stream(seed, 1)
    xs = mu0_sampler(gen, m)
    ys = transition_step(sys, xs, gen)
    return SamplePairs(np.asarray(xs), np.asarray(ys), Regime.IID, seed)


def ergodic_chunk(sys, m, seed, chunk_index, count):
    """One block of `count` independent stationary trajectories, (count, m+1).

    The block is a pure function of (seed, chunk_index); Monte-Carlo drivers
    may therefore evaluate chunks in any order or in parallel.
    """
    gen = rng.stream(seed, chunk_index)
    if isinstance(sys, FiniteMarkovSystem):
        if not sys.is_ergodic:
            raise NonErgodicChain("ergodic sampling requires an ergodic chain")
        pi_cdf = np.cumsum(sys.pi)
        x0 = np.minimum(
            np.searchsorted(pi_cdf, gen.random(count), side="right"),
            sys.n_states - 1,
        ).astype(np.int64)
        u = gen.random((count, m))
        return kernels.chain_paths(sys._cdf, x0, u)
    if isinstance(sys, CircleRotationSystem):
        x0 = gen.random(count)
        steps = sys.t0 * np.arange(m + 1)
        return np.mod(x0[:, None] + steps[None, :], 1.0)
    if isinstance(sys, (NoisyMapSystem, SdeSystem)):
        # batched over trials; scalar state space only (burn-in 10 m steps)
        if sys.state_dim != 1:
            raise ConfigError("batched sampling supports 1-d noisy/SDE systems only")
        x = np.tile(np.atleast_2d(sys.x0), (count, 1))
        for _ in range(10 * m):
            x = sys.step(x, gen)
        traj = np.empty((count, m + 1))
        traj[:, 0] = x[:, 0]
        for k in range(m):
            x = sys.step(x, gen)
            traj[:, k + 1] = x[:, 0]
        return traj
    raise ConfigError(f"no batched ergodic sampler for {type(sys).__name__}")


def iid_chunk(sys, mu0_sampler, m, seed, chunk_index, count):
    """One block of `count` independent i.i.d. pair sets: (xs, ys), (count, m)."""
    gen = rng.stream(seed, chunk_index)
    if isinstance(sys, FiniteMarkovSystem):
        xs = mu0_sampler(gen, count * m).reshape(count, m)
        u = gen.random((count * m, 1))
        ys = kernels.chain_paths(sys._cdf, xs.ravel(), u)[:, 1].reshape(count, m)
    else:
        xs = np.stack([mu0_sampler(gen, m) for _ in range(count)])
        ys = np.stack([transition_step(sys, row, gen) for row in xs])
    return xs, ys


def sample_ergodic_batch(sys, m, n_trials, seed):
    """Yield (start, xs_chunk) blocks covering n_trials trajectories."""
    for chunk, start, count in rng.trial_chunks(n_trials):
        yield start, ergodic_chunk(sys, m, seed, chunk, count)


def sample_iid_batch(sys, mu0_sampler, m, n_trials, seed):
    """Yield (start, xs_chunk, ys_chunk) blocks covering n_trials pair sets."""
    for chunk, start, count in rng.trial_chunks(n_trials):
        xs, ys = iid_chunk(sys, mu0_sampler, m, seed, chunk, count)
        yield start, xs, ys
