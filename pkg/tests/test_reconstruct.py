"""Tests for the pairwise least-squares reconstruction machinery."""

import dataclasses

import numpy as np
import pytest

from pairtomo import channels as ch
from pairtomo.gates import GateLayer
from pairtomo.model import (
    PairwiseModel,
    all_pairs,
    build_superop,
    ideal_initial_guess,
    identity_model,
    pack,
    unpack,
)
from pairtomo.reconstruct import (
    SolverConfig,
    SolverDivergedError,
    TomographyData,
    _Engine,
    cost_c1,
    cost_c2,
    finite_diff_jacobian,
    residual_vector,
    solve,
)
from pairtomo.simulate import CoherentLocal, Decoherence, simulate_noisy_process


def random_model(n_qubits: int, seed: int, spread: float = 0.05) -> PairwiseModel:
    """Valid CPTP factors perturbed by a Hermitian kick of the given size."""
    rng = np.random.default_rng(seed)
    basis = ch.pauli_basis(2).unit()
    model = identity_model(n_qubits)
    for pair in all_pairs(n_qubits):
        s = ch.random_cptp_superop(4, seed=int(rng.integers(2**31)))
        chi = ch.superop_to_chi(s, basis)
        kick = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        chi = chi + spread * (kick + kick.conj().T) / 2.0
        model = model.replace_factor(pair, chi)
    return model


class TestSolverConfig:
    def test_defaults(self):
        cfg = SolverConfig()
        assert cfg.eps_tol == 1e-7
        assert cfg.max_iters == 500
        assert cfg.fd_step == 1e-6
        assert cfg.penalty_weight == 1.0
        assert cfg.seed == 0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eps_tol": 0.0},
            {"eps_tol": -1e-9},
            {"max_iters": 0},
            {"fd_step": 0.0},
            {"penalty_weight": -0.1},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)


class TestTomographyData:
    def test_from_superop_infers_width(self):
        proc = simulate_noisy_process(GateLayer(3, ("X", "Y", "X")), CoherentLocal(0.02))
        data = TomographyData.from_superop(proc.superop)
        assert data.n_qubits == 3
        assert data.pairs == ((1, 2), (1, 3), (2, 3))
        direct = TomographyData.from_process(proc)
        for a, b in zip(data.targets, direct.targets):
            assert np.array_equal(a, b)

    def test_pair_order_enforced(self):
        t = [np.eye(16) / 4.0] * 3
        with pytest.raises(ch.DimensionError):
            TomographyData(3, ((2, 1), (1, 3), (2, 3)), tuple(t))

    def test_target_count_and_shape(self):
        with pytest.raises(ch.DimensionError):
            TomographyData(3, all_pairs(3), (np.eye(16) / 4.0,) * 2)
        with pytest.raises(ch.DimensionError):
            TomographyData(2, all_pairs(2), (np.eye(4),))

    def test_targets_frozen(self):
        data = TomographyData(2, all_pairs(2), (np.eye(16, dtype=complex) / 4.0,))
        with pytest.raises(ValueError):
            data.targets[0][0, 0] = 9.0

    def test_validate_cptp(self):
        proc = simulate_noisy_process(GateLayer(2, ("X", "I")), CoherentLocal(0.1))
        TomographyData.from_process(proc).validate_cptp()
        bad = TomographyData(2, all_pairs(2), (np.eye(16, dtype=complex),))
        with pytest.raises(ch.InvalidKrausError):
            bad.validate_cptp()


class TestResidualLayout:
    def test_lengths(self):
        # per pair 2*16*16 data entries, per factor 34 penalty entries
        for n, n_pairs in ((2, 1), (3, 3)):
            model = identity_model(n)
            gate = GateLayer(n, ("I",) * n)
            data = TomographyData.from_process(
                simulate_noisy_process(gate, CoherentLocal(0.05))
            )
            r = residual_vector(model, data)
            assert r.size == n_pairs * 512 + n_pairs * 34

    def test_data_block_vanishes_on_exact_model(self):
        proc = simulate_noisy_process(GateLayer(2, ("X", "Y")), CoherentLocal(0.07))
        data = TomographyData.from_process(proc)
        model = identity_model(2).replace_factor(
            (1, 2), ch.superop_to_chi(proc.superop, ch.pauli_basis(2).unit())
        )
        r = residual_vector(model, data)
        assert np.max(np.abs(r[:512])) < 1e-12
        # the factor is a valid channel, so the penalty block vanishes too
        assert np.max(np.abs(r[512:])) < 1e-10

    def test_penalty_block_scales_with_weight(self):
        model = identity_model(2).replace_factor((1, 2), 1.25 * np.eye(16, dtype=complex) / 4.0)
        gate = GateLayer(2, ("I", "I"))
        data = TomographyData.from_process(simulate_noisy_process(gate, CoherentLocal(0.0)))
        r1 = residual_vector(model, data, penalty_weight=1.0)
        r4 = residual_vector(model, data, penalty_weight=4.0)
        assert np.allclose(r4[512:], 2.0 * r1[512:], atol=1e-14)
        assert np.allclose(r4[:512], r1[:512], atol=1e-14)

    def test_qubit_count_mismatch(self):
        data = TomographyData(2, all_pairs(2), (np.eye(16, dtype=complex) / 4.0,))
        with pytest.raises(ch.DimensionError):
            residual_vector(identity_model(3), data)


class TestCosts:
    def test_c1_frobenius_oracle(self):
        # all-identity model against data from an X Y X layer
        gate = GateLayer(3, ("X", "Y", "X"))
        proc = simulate_noisy_process(gate, CoherentLocal(0.0))
        data = TomographyData.from_process(proc)
        model = identity_model(3)
        choi = ch.superop_to_choi(build_superop(model))
        oracle = 0.0
        for pair, target in zip(data.pairs, data.targets):
            diff = ch.partial_trace_choi(choi, pair) - target
            oracle += float(np.sum(np.abs(diff) ** 2))
        assert cost_c1(model, data) == pytest.approx(oracle, rel=1e-12)
        assert cost_c1(model, data) > 0.1

    def test_c2_is_residual_norm(self):
        model = random_model(3, seed=5)
        gate = GateLayer(3, ("I", "I", "I"), cnot=(1, 2))
        data = TomographyData.from_process(
            simulate_noisy_process(gate, Decoherence(50e-6, 50e-6, 50e-9))
        )
        r = residual_vector(model, data, penalty_weight=0.7)
        assert cost_c2(model, data, penalty_weight=0.7) == pytest.approx(float(r @ r), rel=1e-14)

    def test_c2_splits_into_data_and_penalty(self):
        model = random_model(3, seed=6)
        gate = GateLayer(3, ("X", "Y", "X"))
        data = TomographyData.from_process(
            simulate_noisy_process(gate, CoherentLocal(0.02))
        )
        w = 1.3
        basis = ch.pauli_basis(2).unit()
        penalty = sum(
            float(np.sum(ch.cptp_residuals(chi, basis) ** 2)) for _, chi in model.factors
        )
        total = cost_c2(model, data, penalty_weight=w)
        assert total == pytest.approx(cost_c1(model, data) + w * penalty, rel=1e-12)

    def test_exact_model_costs_vanish(self):
        gate = GateLayer(3, ("X", "Y", "X"))
        proc = simulate_noisy_process(gate, CoherentLocal(0.0))
        data = TomographyData.from_process(proc)
        model = ideal_initial_guess(gate)
        assert cost_c1(model, data) < 1e-18
        assert cost_c2(model, data) < 1e-18


class TestFiniteDiffJacobian:
    def test_linear_function_exact(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((7, 4))
        b = rng.standard_normal(7)
        jac = finite_diff_jacobian(lambda v: a @ v + b, np.array([0.3, -1.0, 2.0, 0.0]), 1e-6)
        assert np.allclose(jac, a, atol=1e-9)

    def test_quadratic_error_scales_with_step(self):
        v = np.array([1.0, -2.0])
        fn = lambda w: w**2
        for step in (1e-4, 1e-6):
            jac = finite_diff_jacobian(fn, v, step)
            # forward differences of v^2 err by exactly +step on the diagonal
            assert np.allclose(np.diag(jac), 2.0 * v + step, atol=1e-8)

    def test_matches_central_difference_on_data_residuals(self):
        gate = GateLayer(3, ("X", "Y", "X"))
        data = TomographyData.from_process(
            simulate_noisy_process(gate, Decoherence(50e-6, 50e-6, 50e-9))
        )
        v0 = pack(ideal_initial_guess(gate))
        fn = lambda v: residual_vector(unpack(v, 3), data, penalty_weight=0.0)
        step = 1e-6
        forward = finite_diff_jacobian(fn, v0, step)
        # probe a handful of parameters with a central-difference oracle
        rng = np.random.default_rng(11)
        for idx in rng.choice(v0.size, size=6, replace=False):
            vp, vm = v0.copy(), v0.copy()
            vp[idx] += step
            vm[idx] -= step
            central = (fn(vp) - fn(vm)) / (2.0 * step)
            assert np.max(np.abs(forward[:, idx] - central)) < 10.0 * step


class TestEngine:
    def test_residual_matches_public_function(self):
        for n, seed in ((2, 1), (3, 2)):
            # round-trip through pack so both paths see identical factors
            # (packing keeps only the Hermitian parameterization)
            model = unpack(pack(random_model(n, seed=seed)), n)
            gate = GateLayer(n, ("I",) * n)
            data = TomographyData.from_process(
                simulate_noisy_process(gate, CoherentLocal(0.03))
            )
            engine = _Engine(data, 1.0)
            v = pack(model)
            assert np.array_equal(engine.residual(v), residual_vector(model, data, 1.0))

    @pytest.mark.parametrize("n,seed", [(2, 7), (3, 8)])
    def test_jacobian_bit_identical_to_generic(self, n, seed):
        # the cached-prefix fast path must reproduce a generic central
        # difference bit for bit, not merely approximately
        model = random_model(n, seed=seed, spread=0.02)
        gate = GateLayer(n, ("I",) * (n - 1) + ("X",))
        data = TomographyData.from_process(
            simulate_noisy_process(gate, Decoherence(60e-6, 40e-6, 100e-9))
        )
        w = 1.0
        engine = _Engine(data, w)
        v = pack(model)
        step = 1e-6
        jac_fast, r0 = engine.jacobian(v, step)
        fn = lambda u: residual_vector(unpack(u, n), data, penalty_weight=w)
        jac_ref = np.empty_like(jac_fast)
        for j in range(v.size):
            e = np.zeros_like(v)
            e[j] = step
            jac_ref[:, j] = (fn(v + e) - fn(v - e)) / (2.0 * step)
        assert np.array_equal(r0, fn(v))
        assert np.array_equal(jac_fast, jac_ref)


class TestSolve:
    def test_recovers_random_two_qubit_channel(self):
        # single-pair fitting is plain process tomography; a tight stopping
        # threshold drives the quadratic tail well below the 1e-6 oracle bound
        s = ch.random_cptp_superop(4, seed=42)
        data = TomographyData.from_superop(s, 2)
        result = solve(data, identity_model(2), SolverConfig(eps_tol=1e-10), true_superop=s)
        assert result.converged
        assert result.full_trace_distance < 1e-6
        assert result.pair_trace_distances[0] < 1e-6

    def test_cnot_decoherence_two_qubit(self):
        proc = simulate_noisy_process(
            GateLayer(2, ("I", "I"), cnot=(1, 2)), Decoherence(50e-6, 50e-6, 400e-9)
        )
        data = TomographyData.from_process(proc)
        # tight stopping threshold: the data is exactly representable, so the
        # quadratic tail runs until the answer matches the closed form
        result = solve(
            data,
            ideal_initial_guess(proc.gate),
            SolverConfig(eps_tol=1e-10),
            true_superop=proc.superop,
        )
        assert result.pair_trace_distances[0] <= 1e-6
        # representable data must converge in a handful of steps, not stall
        # against max_iters
        assert result.converged
        assert result.iterations < 20

    def test_ideal_data_ideal_guess_immediate(self):
        gate = GateLayer(3, ("X", "Y", "X"))
        proc = simulate_noisy_process(gate, CoherentLocal(0.0))
        data = TomographyData.from_process(proc)
        result = solve(data, ideal_initial_guess(gate), true_superop=proc.superop)
        assert result.converged
        assert result.iterations <= 1
        assert result.cost < 1e-14
        assert result.full_trace_distance < 1e-10

    def test_cost_history_monotone(self):
        proc = simulate_noisy_process(GateLayer(2, ("X", "Y")), CoherentLocal(0.1))
        data = TomographyData.from_process(proc)
        result = solve(data, identity_model(2))
        hist = np.asarray(result.cost_history)
        assert hist.size >= 2
        assert np.all(np.diff(hist) <= 0.0)

    def test_max_iters_leaves_unconverged_but_projected(self):
        proc = simulate_noisy_process(
            GateLayer(3, ("I", "I", "I"), cnot=(1, 2)), Decoherence(50e-6, 50e-6, 400e-9)
        )
        data = TomographyData.from_process(proc)
        result = solve(data, ideal_initial_guess(proc.gate), SolverConfig(max_iters=2))
        assert not result.converged
        assert result.iterations == 2
        for _, chi in result.model.factors:
            vals = np.linalg.eigvalsh((chi + chi.conj().T) / 2.0)
            assert vals.min() >= -1e-12
            assert abs(np.trace(chi).real - 4.0) < 1e-12

    def test_vector_init_equals_model_init(self):
        proc = simulate_noisy_process(GateLayer(2, ("Z", "I")), CoherentLocal(0.05))
        data = TomographyData.from_process(proc)
        cfg = SolverConfig(max_iters=30)
        a = solve(data, identity_model(2), cfg)
        b = solve(data, pack(identity_model(2)), cfg)
        assert np.array_equal(pack(a.raw_model), pack(b.raw_model))
        assert a.cost == b.cost

    def test_deterministic(self):
        proc = simulate_noisy_process(GateLayer(2, ("X", "I")), CoherentLocal(0.04))
        data = TomographyData.from_process(proc)
        a = solve(data, ideal_initial_guess(proc.gate))
        b = solve(data, ideal_initial_guess(proc.gate))
        assert np.array_equal(pack(a.raw_model), pack(b.raw_model))
        assert a.cost_history == b.cost_history

    def test_divergence_reported(self):
        bad = np.full((16, 16), np.nan, dtype=complex)
        data = TomographyData(2, all_pairs(2), (bad,))
        with pytest.raises(SolverDivergedError):
            solve(data, identity_model(2))

    def test_truth_optional(self):
        proc = simulate_noisy_process(GateLayer(2, ("I", "I")), CoherentLocal(0.02))
        data = TomographyData.from_process(proc)
        result = solve(data, identity_model(2), SolverConfig(max_iters=5))
        assert result.full_trace_distance is None

    def test_init_width_mismatch(self):
        proc = simulate_noisy_process(GateLayer(2, ("I", "I")), CoherentLocal(0.02))
        data = TomographyData.from_process(proc)
        with pytest.raises(ch.DimensionError):
            solve(data, identity_model(3))
