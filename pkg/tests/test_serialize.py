import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pairtomo import channels as ch
from pairtomo.gates import GateLayer, gate_unitary
from pairtomo.model import chi_of_unitary, ideal_initial_guess
from pairtomo.reconstruct import ReconstructionResult, SolverConfig, TomographyData
from pairtomo.serialize import (
    SCHEMA_VERSION,
    SerializationError,
    config_from_dict,
    config_to_dict,
    data_from_dict,
    data_to_dict,
    error_from_dict,
    error_label,
    error_to_dict,
    gate_from_dict,
    gate_to_dict,
    load_json,
    matrix_from_dict,
    matrix_to_dict,
    model_from_dict,
    model_to_dict,
    process_from_dict,
    process_to_dict,
    result_from_dict,
    result_to_dict,
    save_json,
)
from pairtomo.simulate import (
    CoherentLocal,
    CRCoherent,
    Decoherence,
    simulate_noisy_process,
)
from conftest import random_hermitian


class TestMatrixDict:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_roundtrip_exact(self, rows, cols, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
        back = matrix_from_dict(matrix_to_dict(m))
        assert np.array_equal(back, m)

    def test_real_input_promoted(self):
        back = matrix_from_dict(matrix_to_dict(np.eye(3)))
        assert back.dtype == complex
        assert np.array_equal(back, np.eye(3))

    def test_rejects_vector(self):
        with pytest.raises(SerializationError):
            matrix_to_dict(np.arange(4.0))

    def test_rejects_missing_field(self):
        d = matrix_to_dict(np.eye(2))
        del d["reim"]
        with pytest.raises(SerializationError):
            matrix_from_dict(d)

    def test_rejects_length_mismatch(self):
        d = matrix_to_dict(np.eye(2))
        d["rows"] = 3
        with pytest.raises(SerializationError, match="3x2"):
            matrix_from_dict(d)


class TestGateDict:
    def test_roundtrip_with_cnot(self):
        gate = GateLayer(3, ("I", "I", "I"), cnot=(1, 2))
        assert gate_from_dict(gate_to_dict(gate)) == gate

    def test_roundtrip_single_qubit_only(self):
        gate = GateLayer(3, ("X", "Y", "X"))
        back = gate_from_dict(gate_to_dict(gate))
        assert back == gate
        assert back.cnot is None

    def test_rejects_missing_field(self):
        with pytest.raises(SerializationError):
            gate_from_dict({"single_qubit": ["X"]})

    def test_rejects_bad_label(self):
        d = gate_to_dict(GateLayer(2, ("X", "Y")))
        d["single_qubit"] = ["X", "Q"]
        with pytest.raises(SerializationError):
            gate_from_dict(d)


class TestErrorDict:
    @pytest.mark.parametrize(
        "error",
        [
            CoherentLocal(0.02),
            Decoherence(50e-6, 30e-6, 400e-9),
            CRCoherent(np.pi / 16, 1e-3),
        ],
    )
    def test_roundtrip(self, error):
        assert error_from_dict(error_to_dict(error)) == error

    def test_rejects_unknown_kind(self):
        with pytest.raises(SerializationError, match="unknown error kind"):
            error_from_dict({"kind": "depolarizing", "p": 0.1})

    def test_rejects_missing_parameter(self):
        with pytest.raises(SerializationError):
            error_from_dict({"kind": "coherent_local"})

    def test_label_is_deterministic(self):
        e = Decoherence(50e-6, 30e-6, 400e-9)
        assert error_label(e) == error_label(e)
        assert error_label(CoherentLocal(0.02)) == "coherent_local(phi=0.02)"

    def test_label_distinguishes_parameters(self):
        assert error_label(CoherentLocal(0.01)) != error_label(CoherentLocal(0.02))


class TestModelDict:
    def test_roundtrip(self):
        model = ideal_initial_guess(GateLayer(3, ("X", "Y", "X")))
        model = model.replace_factor(
            (1, 2), chi_of_unitary(gate_unitary(GateLayer(2, ("I", "I"), cnot=(1, 2))))
        )
        back = model_from_dict(model_to_dict(model))
        assert back.n_qubits == model.n_qubits
        assert tuple(p for p, _ in back.factors) == tuple(p for p, _ in model.factors)
        for (_, a), (_, b) in zip(back.factors, model.factors):
            assert np.array_equal(a, b)

    def test_rejects_missing_factors(self):
        with pytest.raises(SerializationError):
            model_from_dict({"n_qubits": 2})


class TestConfigDict:
    def test_roundtrip(self):
        cfg = SolverConfig(eps_tol=1e-8, max_iters=40, fd_step=1e-5, penalty_weight=2.0, seed=7)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_partial_dict_takes_defaults(self):
        cfg = config_from_dict({"max_iters": 9})
        assert cfg.max_iters == 9
        assert cfg == SolverConfig(max_iters=9)

    def test_empty_dict_is_default_config(self):
        assert config_from_dict({}) == SolverConfig()

    def test_rejects_unknown_field(self):
        with pytest.raises(SerializationError, match="learning_rate"):
            config_from_dict({"learning_rate": 0.1})

    def test_rejects_invalid_value(self):
        with pytest.raises(SerializationError):
            config_from_dict({"eps_tol": -1.0})


class TestDataDict:
    def test_roundtrip(self):
        gate = GateLayer(2, ("X", "Y"))
        data = TomographyData.from_superop(ch.unitary_to_superop(gate_unitary(gate)))
        back = data_from_dict(data_to_dict(data))
        assert back.n_qubits == data.n_qubits
        assert back.pairs == data.pairs
        for a, b in zip(back.targets, data.targets):
            assert np.array_equal(a, b)

    def test_rejects_missing_targets(self):
        with pytest.raises(SerializationError):
            data_from_dict({"n_qubits": 2, "pairs": [[1, 2]]})


class TestProcessDict:
    def test_roundtrip(self):
        proc = simulate_noisy_process(GateLayer(2, ("I", "I"), cnot=(1, 2)), CoherentLocal(0.01))
        back = process_from_dict(process_to_dict(proc))
        assert back.n_qubits == proc.n_qubits
        assert back.gate == proc.gate
        assert back.error == proc.error
        assert np.array_equal(back.superop, proc.superop)

    def test_rejects_missing_superop(self):
        proc = simulate_noisy_process(GateLayer(2, ("I", "I")), CoherentLocal(0.01))
        d = process_to_dict(proc)
        del d["superop"]
        with pytest.raises(SerializationError):
            process_from_dict(d)


def small_result() -> ReconstructionResult:
    model = ideal_initial_guess(GateLayer(2, ("I", "I"), cnot=(1, 2)))
    return ReconstructionResult(
        model=model,
        raw_model=model,
        cost=0.25,
        projected_cost=0.26,
        iterations=3,
        converged=True,
        cost_history=(1.0, 0.5, 0.25),
        pair_trace_distances=(0.01,),
        full_trace_distance=0.02,
    )


class TestResultDict:
    def test_roundtrip(self):
        res = small_result()
        back = result_from_dict(result_to_dict(res))
        assert back.cost == res.cost
        assert back.projected_cost == res.projected_cost
        assert back.iterations == res.iterations
        assert back.converged is True
        assert back.cost_history == res.cost_history
        assert back.pair_trace_distances == res.pair_trace_distances
        assert back.full_trace_distance == res.full_trace_distance
        for (_, a), (_, b) in zip(back.model.factors, res.model.factors):
            assert np.array_equal(a, b)

    def test_none_trace_distance_survives(self):
        res = small_result()
        d = result_to_dict(res)
        d["full_trace_distance"] = None
        assert result_from_dict(d).full_trace_distance is None

    def test_rejects_missing_model(self):
        d = result_to_dict(small_result())
        del d["model"]
        with pytest.raises(SerializationError):
            result_from_dict(d)


class TestFiles:
    def test_save_stamps_schema(self, tmp_path):
        path = tmp_path / "doc.json"
        save_json({"kind": "demo"}, path)
        doc = json.loads(path.read_text())
        assert doc["schema"] == SCHEMA_VERSION
        assert doc["kind"] == "demo"

    def test_load_returns_saved_payload(self, tmp_path):
        path = tmp_path / "doc.json"
        save_json({"value": 3}, path)
        assert load_json(path)["value"] == 3

    def test_matrix_survives_file_roundtrip_exactly(self, tmp_path):
        m = random_hermitian(16, seed=5)
        path = tmp_path / "m.json"
        save_json({"m": matrix_to_dict(m)}, path)
        assert np.array_equal(matrix_from_dict(load_json(path)["m"]), m)

    def test_save_is_byte_deterministic(self, tmp_path):
        payload = {"m": matrix_to_dict(random_hermitian(8, seed=3)), "z": 1}
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_json(payload, a)
        save_json(payload, b)
        assert a.read_bytes() == b.read_bytes()

    def test_rejects_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SerializationError, match="not valid JSON"):
            load_json(path)

    def test_rejects_non_object(self, tmp_path):
        path = tmp_path / "arr.json"
        path.write_text("[1, 2]")
        with pytest.raises(SerializationError, match="JSON object"):
            load_json(path)

    def test_rejects_wrong_schema(self, tmp_path):
        path = tmp_path / "old.json"
        path.write_text(json.dumps({"schema": "0"}))
        with pytest.raises(SerializationError, match="schema"):
            load_json(path)
