import numpy as np
import pytest

from koopman_cert import dictionaries, galerkin, systems
from koopman_cert.errors import ConfigError, NonErgodicChain


class TestInvariantMeasure:
    def test_reducible_identity_raises(self):
        sys = systems.FiniteMarkovSystem(np.eye(2))
        with pytest.raises(NonErgodicChain):
            systems.invariant_measure(sys)

    def test_two_state_symmetric(self):
        sys = systems.FiniteMarkovSystem(np.array([[0.7, 0.3], [0.3, 0.7]]))
        pi = systems.invariant_measure(sys)
        # eigenvector oracle: stationary left eigenvector of P for eigenvalue 1
        w, v = np.linalg.eig(sys.transition.T)
        vec = np.real(v[:, np.argmin(np.abs(w - 1))])
        vec /= vec.sum()
        assert np.allclose(pi, [0.5, 0.5], atol=1e-12)
        assert np.allclose(pi, vec, atol=1e-10)

    def test_periodic_chain_raises(self):
        sys = systems.FiniteMarkovSystem(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert not sys.is_ergodic
        with pytest.raises(NonErgodicChain):
            systems.invariant_measure(sys)

    def test_invariance_identity(self, five_state_chain):
        pi = five_state_chain.pi
        # integral of rho(x, {j}) d pi equals pi({j}) for every singleton
        assert np.max(np.abs(pi @ five_state_chain.transition - pi)) < 1e-10
        assert np.all(pi > 0)
        assert abs(pi.sum() - 1.0) < 1e-12

    def test_non_stochastic_rejected(self):
        with pytest.raises(ConfigError):
            systems.FiniteMarkovSystem(np.array([[0.5, 0.4], [0.3, 0.7]]))


class TestKoopmanMatrix:
    def test_constant_fixed_point(self, five_state_chain):
        K = systems.koopman_matrix_exact(five_state_chain)
        one = np.ones(5)
        assert np.allclose(K @ one, one, atol=1e-12)

    def test_two_state_eigenvalues(self, two_state_chain):
        K = systems.koopman_matrix_exact(two_state_chain)
        lam = np.sort(np.linalg.eigvals(K).real)
        # 2x2 characteristic polynomial roots: 1 and 1 - p - q
        assert np.allclose(lam, [0.4, 1.0], atol=1e-12)

    def test_doubly_stochastic_reversible_self_adjoint(self):
        P = np.array([[0.5, 0.3, 0.2], [0.3, 0.4, 0.3], [0.2, 0.3, 0.5]])
        sys = systems.FiniteMarkovSystem(P)
        # detailed-balance oracle
        pi = sys.pi
        flux = pi[:, None] * P
        assert np.allclose(flux, flux.T, atol=1e-12)
        assert sys.is_reversible()
        # pi-self-adjoint: <Kf, g>_pi = <f, Kg>_pi for basis functions
        for i in range(3):
            for j in range(3):
                f = np.eye(3)[i]
                g = np.eye(3)[j]
                lhs = np.sum(pi * (P @ f) * g)
                rhs = np.sum(pi * f * (P @ g))
                assert abs(lhs - rhs) < 1e-12


class TestErgodicSampling:
    def test_single_step(self, two_state_chain):
        pairs = systems.sample_ergodic(two_state_chain, 1, seed=0)
        assert pairs.m == 1
        assert pairs.regime is systems.Regime.ERGODIC

    def test_trajectory_stitches(self, five_state_chain):
        pairs = systems.sample_ergodic(five_state_chain, 50, seed=1)
        assert np.array_equal(pairs.ys[:-1], pairs.xs[1:])

    def test_reproducible_bit_for_bit(self, five_state_chain):
        a = systems.sample_ergodic(five_state_chain, 100, seed=42)
        b = systems.sample_ergodic(five_state_chain, 100, seed=42)
        assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
        c = systems.sample_ergodic(five_state_chain, 100, seed=43)
        assert not np.array_equal(a.xs, c.xs)

    def test_empirical_occupation_clt(self, two_state_chain):
        m = 10**6
        pairs = systems.sample_ergodic(two_state_chain, m, seed=2)
        frac0 = np.mean(pairs.xs == 0)
        # CLT band around the exact invariant mass of state 0
        assert abs(frac0 - 0.5) < 3 * 0.5 / 10**3

    def test_circle_rotation_increments(self, golden):
        pairs = systems.sample_ergodic(golden, 5, seed=3)
        inc = np.mod(pairs.ys - pairs.xs, 1.0)
        assert np.allclose(inc, golden.t0, atol=1e-12)

    def test_nonergodic_raises(self):
        sys = systems.FiniteMarkovSystem(np.eye(3))
        with pytest.raises(NonErgodicChain):
            systems.sample_ergodic(sys, 10, seed=0)


class TestIidSampling:
    def test_point_mass_deterministic_map(self, golden):
        mu0 = systems.point_mass_sampler(0.25)
        pairs = systems.sample_iid(golden, mu0, 3, seed=0)
        assert np.allclose(pairs.xs, 0.25)
        assert np.allclose(pairs.ys, np.mod(0.25 + golden.t0, 1.0))

    def test_joint_law(self, two_state_chain):
        m = 10**5
        mu0 = systems.categorical_sampler(two_state_chain.pi)
        pairs = systems.sample_iid(two_state_chain, mu0, m, seed=4)
        P = two_state_chain.transition
        pi = two_state_chain.pi
        for i in range(2):
            for j in range(2):
                emp = np.mean((pairs.xs == i) & (pairs.ys == j))
                assert abs(emp - pi[i] * P[i, j]) < 0.01

    def test_permutation_invariance_of_grams(self, two_state_chain, indicator2):
        from koopman_cert.edmd import empirical_gram

        mu0 = systems.categorical_sampler(two_state_chain.pi)
        pairs = systems.sample_iid(two_state_chain, mu0, 200, seed=5)
        perm = np.random.Generator(np.random.Philox(1)).permutation(200)
        shuffled = systems.SamplePairs(
            pairs.xs[perm], pairs.ys[perm], pairs.regime, pairs.seed
        )
        g1 = empirical_gram(indicator2, pairs)
        g2 = empirical_gram(indicator2, shuffled)
        assert np.allclose(g1.C, g2.C, atol=1e-15)
        assert np.allclose(g1.Cplus, g2.Cplus, atol=1e-15)


class TestContraction:
    def test_mean_zero_operator_norm_at_most_one(self, five_state_chain):
        from koopman_cert.variance import build_rep
        from koopman_cert import dictionaries

        rep = build_rep(five_state_chain, dictionaries.indicator(5))
        # largest singular value of the weighted symmetrization
        s = np.linalg.svd(rep.M, compute_uv=False)
        assert s[0] <= 1.0 + 1e-12


class TestCirclePreservesMeasure:
    def test_mass_matrix_invariant_under_composition(self, golden):
        d = dictionaries.fourier(2)
        # exact C for the Fourier dictionary is the identity (orthonormality)
        gram = galerkin.quadrature_gram_circle(golden, d)
        assert np.allclose(gram.C, np.eye(d.size), atol=1e-10)
        # C computed after composing every observable with T stays the same

        class Composed:
            size = d.size
            kind = d.kind
            metadata = d.metadata

            @staticmethod
            def evaluate(states):
                return d.evaluate(np.mod(np.asarray(states) + golden.t0, 1.0))

        gram2 = galerkin.quadrature_mass_circle(Composed())
        assert np.allclose(gram2, gram.C, atol=1e-10)


class TestNoisyMapAndSde:
    def test_zero_noise_equals_deterministic_orbit(self):
        def tent(x):
            return 1.0 - 2.0 * np.abs(x - 0.5)

        sysA = systems.NoisyMapSystem(tent, lambda g, s: np.zeros(s), 1, x0=[0.2])
        a = systems.sample_ergodic(sysA, 20, burn_in=0, seed=0)
        x = np.array([0.2])
        expect = [x.copy()]
        for _ in range(20):
            x = tent(x)
            expect.append(x.copy())
        expect = np.array(expect)
        assert np.array_equal(a.xs[:, 0], expect[:20, 0])
        assert np.array_equal(a.ys[:, 0], expect[1:, 0])

    def test_sde_substep_count(self):
        calls = {"n": 0}

        def drift(x):
            calls["n"] += 1
            return -x

        sde = systems.SdeSystem(drift, lambda x: np.ones_like(x), 1, lag=0.5,
                                integrator_dt=0.1)
        assert sde.substeps == 5
        gen = np.random.Generator(np.random.Philox(0))
        sde.step(np.zeros((1, 1)), gen)
        assert calls["n"] == 5

    def test_sde_invalid_lag_ratio(self):
        with pytest.raises(ConfigError):
            systems.SdeSystem(lambda x: -x, lambda x: np.ones_like(x), 1,
                              lag=0.5, integrator_dt=0.3)


class TestQuadraticIrrational:
    def test_golden_value(self):
        q = systems.QuadraticIrrational(-1, 1, 2, 5)
        assert abs(q.value() - (np.sqrt(5) - 1) / 2) < 1e-15

    def test_square_d_rejected(self):
        with pytest.raises(ConfigError):
            systems.QuadraticIrrational(0, 1, 1, 4)
