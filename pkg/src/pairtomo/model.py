"""Pairwise factor model of an n-qubit process.

The modeled channel is a fixed-order product of two-qubit channels, one per
qubit pair:

    E_hat = E_(1,2) o E_(1,3) o ... o E_(N-1,N)

with pairs in lexicographic order and the (1,2) factor applied last.  Each
factor is stored as a Hermitian 16x16 chi matrix in the trace-4
normalization (see :mod:`pairtomo.channels`), giving 256 real parameters
per factor in the flat packing used by the fitter: 16 diagonal entries,
then the real parts and imaginary parts of the 120 upper-triangle entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels as ch
from .gates import CNOT_2Q, GateLayer

__all__ = [
    "N_PARAMS_PER_FACTOR",
    "all_pairs",
    "PairwiseModel",
    "identity_chi",
    "identity_model",
    "chi_of_unitary",
    "factor_superop",
    "build_superop",
    "reduced_choi_of_model",
    "n_parameters",
    "pack",
    "unpack",
    "ideal_initial_guess",
]

N_PARAMS_PER_FACTOR = 256

_TRIU = np.triu_indices(16, k=1)


def all_pairs(n_qubits: int) -> tuple[tuple[int, int], ...]:
    """Qubit pairs (1-based) in lexicographic order."""
    if n_qubits < 2:
        raise ch.DimensionError("need at least two qubits")
    return tuple(
        (k, l) for k in range(1, n_qubits + 1) for l in range(k + 1, n_qubits + 1)
    )


@dataclass(frozen=True)
class PairwiseModel:
    """One trace-4 chi matrix per qubit pair, in lexicographic pair order."""

    n_qubits: int
    factors: tuple[tuple[tuple[int, int], np.ndarray], ...]

    def __post_init__(self) -> None:
        pairs = tuple(p for p, _ in self.factors)
        if pairs != all_pairs(self.n_qubits):
            raise ValueError(
                f"factors must cover pairs {all_pairs(self.n_qubits)} in order, got {pairs}"
            )
        for pair, chi in self.factors:
            if np.asarray(chi).shape != (16, 16):
                raise ch.DimensionError(f"factor {pair} chi has shape {np.asarray(chi).shape}")

    def chi(self, pair) -> np.ndarray:
        pair = tuple(int(q) for q in pair)
        for p, chi in self.factors:
            if p == pair:
                return chi
        raise KeyError(f"no factor for pair {pair}")

    def replace_factor(self, pair, chi: np.ndarray) -> "PairwiseModel":
        pair = tuple(int(q) for q in pair)
        new = tuple((p, chi if p == pair else c) for p, c in self.factors)
        if pair not in (p for p, _ in self.factors):
            raise KeyError(f"no factor for pair {pair}")
        return PairwiseModel(self.n_qubits, new)


def identity_chi() -> np.ndarray:
    """Trace-4 chi matrix of the two-qubit identity channel."""
    chi = np.zeros((16, 16), dtype=complex)
    chi[0, 0] = 4.0
    return chi


def identity_model(n_qubits: int) -> PairwiseModel:
    return PairwiseModel(
        n_qubits, tuple((p, identity_chi()) for p in all_pairs(n_qubits))
    )


def chi_of_unitary(u: np.ndarray) -> np.ndarray:
    """Trace-4 chi matrix of a two-qubit unitary conjugation."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ch.DimensionError(f"expected a 4x4 unitary, got {u.shape}")
    return ch.superop_to_chi(ch.unitary_to_superop(u), ch.pauli_basis(2).unit())


def factor_superop(chi: np.ndarray, pair, n_qubits: int) -> np.ndarray:
    """n-qubit superoperator of one factor.  The stored chi is trace-4
    normalized, i.e. expanded over Pauli products scaled by 1/2, so the
    raw-basis chi fed to the embedding is ``chi / 4``."""
    return ch.embed_chi(np.asarray(chi, dtype=complex) / 4.0, pair, n_qubits)


def build_superop(model: PairwiseModel, factor_order=None) -> np.ndarray:
    """Superoperator of the full model: left-to-right product over factors,
    so the first factor in the order is applied last.

    ``factor_order`` may permute the pairs (sensitivity studies); default is
    the model's lexicographic order.
    """
    if factor_order is None:
        ordered = model.factors
    else:
        factor_order = tuple(tuple(int(q) for q in p) for p in factor_order)
        if sorted(factor_order) != sorted(p for p, _ in model.factors):
            raise ValueError(f"factor_order {factor_order} is not a permutation of the pairs")
        ordered = tuple((p, model.chi(p)) for p in factor_order)
    out = None
    for pair, chi in ordered:
        s = factor_superop(chi, pair, model.n_qubits)
        out = s if out is None else out @ s
    return out


def reduced_choi_of_model(model: PairwiseModel, pair) -> np.ndarray:
    """Reduced two-qubit Choi state of the full model on ``pair``."""
    return ch.partial_trace_choi(ch.superop_to_choi(build_superop(model)), pair)


def n_parameters(n_qubits: int) -> int:
    return N_PARAMS_PER_FACTOR * len(all_pairs(n_qubits))


def pack(model: PairwiseModel) -> np.ndarray:
    """Flatten a model into the fitter's real parameter vector."""
    blocks = []
    for _, chi in model.factors:
        chi = np.asarray(chi)
        upper = chi[_TRIU]
        blocks.append(np.concatenate([chi.diagonal().real, upper.real, upper.imag]))
    return np.concatenate(blocks)


def unpack(v: np.ndarray, n_qubits: int) -> PairwiseModel:
    """Inverse of :func:`pack`; bit-exact round trip in both directions."""
    v = np.asarray(v, dtype=float)
    pairs = all_pairs(n_qubits)
    if v.shape != (N_PARAMS_PER_FACTOR * len(pairs),):
        raise ch.DimensionError(
            f"parameter vector of length {v.size}, expected {N_PARAMS_PER_FACTOR * len(pairs)}"
        )
    factors = []
    for i, pair in enumerate(pairs):
        w = v[i * N_PARAMS_PER_FACTOR : (i + 1) * N_PARAMS_PER_FACTOR]
        factors.append((pair, _chi_from_params(w)))
    return PairwiseModel(n_qubits, tuple(factors))


def _chi_from_params(w: np.ndarray) -> np.ndarray:
    chi = np.zeros((16, 16), dtype=complex)
    np.fill_diagonal(chi, w[:16])
    upper = w[16:136] + 1j * w[136:256]
    chi[_TRIU] = upper
    chi[_TRIU[1], _TRIU[0]] = upper.conj()
    return chi


def ideal_initial_guess(gate: GateLayer) -> PairwiseModel:
    """Model whose product equals the ideal gate layer exactly.

    The CNOT goes to its own pair's factor; each non-identity single-qubit
    gate goes to the lowest-index pair containing that qubit; every other
    factor is the identity.
    """
    n = gate.n_qubits
    pairs = all_pairs(n)
    unitaries = {p: np.eye(4, dtype=complex) for p in pairs}
    if gate.cnot is not None:
        c, t = gate.cnot
        pair = (min(c, t), max(c, t))
        orientation = (1, 2) if c < t else (2, 1)
        unitaries[pair] = ch.embed_operator(CNOT_2Q, orientation, 2)
    for q, lab in enumerate(gate.single_qubit, start=1):
        if lab == "I":
            continue
        pair = next(p for p in pairs if q in p)
        slot = (ch.PAULI_1Q[lab], np.eye(2)) if q == pair[0] else (np.eye(2), ch.PAULI_1Q[lab])
        unitaries[pair] = np.kron(*slot) @ unitaries[pair]
    return PairwiseModel(
        n, tuple((p, chi_of_unitary(unitaries[p])) for p in pairs)
    )
