"""Least-squares reconstruction of a pairwise-factorized model from
two-qubit tomography data.

The fit minimizes, over all factor chi matrices,

    C2 = sum_pairs || sigma_pair(model) - rho_pair ||_F^2
         + penalty_weight * sum_factors || cptp_residuals(chi) ||^2

with a damped least-squares (Levenberg-Marquardt) loop on a central
finite-difference Jacobian.  After the loop each factor is projected onto
the PSD trace-4 cone, which repairs the small CPTP violations the soft
penalty leaves behind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels as ch
from .model import (
    N_PARAMS_PER_FACTOR,
    PairwiseModel,
    _chi_from_params,
    all_pairs,
    build_superop,
    factor_superop,
    pack,
    unpack,
)

__all__ = [
    "SolverDivergedError",
    "SolverConfig",
    "TomographyData",
    "ReconstructionResult",
    "cost_c1",
    "cost_c2",
    "residual_vector",
    "finite_diff_jacobian",
    "solve",
]

_LAMBDA_INIT = 1e-3
_LAMBDA_FLOOR = 1e-12
_DIAG_FLOOR = 1e-12
_MAX_DAMPING_TRIES = 20

# the CPTP penalty always scores two-qubit factors in the trace-4 convention
_UNIT_BASIS_2Q = None


def _unit_basis() -> "ch.OperatorBasis":
    global _UNIT_BASIS_2Q
    if _UNIT_BASIS_2Q is None:
        _UNIT_BASIS_2Q = ch.pauli_basis(2).unit()
    return _UNIT_BASIS_2Q


class SolverDivergedError(RuntimeError):
    """Residuals became non-finite; the fit cannot continue."""


@dataclass(frozen=True)
class SolverConfig:
    """Stopping and stepping controls for :func:`solve`.

    ``eps_tol`` is the per-step cost decrease below which the fit counts as
    converged.  ``seed`` is carried for provenance in saved results; the
    solver itself is deterministic.
    """

    eps_tol: float = 1e-7
    max_iters: int = 500
    fd_step: float = 1e-6
    penalty_weight: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.eps_tol > 0:
            raise ValueError("eps_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.penalty_weight < 0:
            raise ValueError("penalty_weight must be nonnegative")


@dataclass(frozen=True)
class TomographyData:
    """Reduced two-qubit Choi targets, one per qubit pair in lexicographic
    order."""

    n_qubits: int
    pairs: tuple[tuple[int, int], ...]
    targets: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        expected = all_pairs(self.n_qubits)
        if tuple(self.pairs) != expected:
            raise ch.DimensionError(
                f"pairs {self.pairs} must be the lexicographic list {expected}"
            )
        if len(self.targets) != len(expected):
            raise ch.DimensionError("one target per pair required")
        frozen = []
        for t in self.targets:
            t = np.asarray(t, dtype=complex)
            if t.shape != (16, 16):
                raise ch.DimensionError(f"target shape {t.shape}, expected (16, 16)")
            t = t.copy()
            t.setflags(write=False)
            frozen.append(t)
        object.__setattr__(self, "targets", tuple(frozen))
        object.__setattr__(self, "pairs", expected)

    def validate_cptp(self, psd_tol: float = 1e-8, tp_tol: float = 1e-8) -> None:
        for pair, t in zip(self.pairs, self.targets):
            if not ch.is_cptp_choi(t, psd_tol=psd_tol, tp_tol=tp_tol):
                raise ch.InvalidKrausError(f"target for pair {pair} is not CPTP")

    @classmethod
    def from_superop(cls, superop: np.ndarray, n_qubits: int | None = None) -> "TomographyData":
        """Exact pairwise tomography of a known n-qubit superoperator."""
        superop = np.asarray(superop, dtype=complex)
        if n_qubits is None:
            n_qubits = ch.n_qubits_of(superop.shape[0]) // 2
        choi = ch.superop_to_choi(superop)
        pairs = all_pairs(n_qubits)
        targets = tuple(ch.partial_trace_choi(choi, p) for p in pairs)
        return cls(n_qubits, pairs, targets)

    @classmethod
    def from_process(cls, process) -> "TomographyData":
        return cls.from_superop(process.superop, process.n_qubits)


@dataclass(frozen=True)
class ReconstructionResult:
    """Fit output.  ``model`` has factors projected to PSD trace 4;
    ``raw_model`` is the unprojected solver iterate."""

    model: PairwiseModel
    raw_model: PairwiseModel
    cost: float
    projected_cost: float
    iterations: int
    converged: bool
    cost_history: tuple[float, ...]
    pair_trace_distances: tuple[float, ...]
    full_trace_distance: float | None

    @property
    def mean_pair_trace_distance(self) -> float:
        return float(np.mean(self.pair_trace_distances))


def _stack_residual(
    product: np.ndarray,
    chis: list[np.ndarray],
    data: TomographyData,
    penalty_weight: float,
) -> np.ndarray:
    """Residual vector given the full-model superoperator and factor chis.

    Layout: per pair, real then imaginary entries of (sigma - rho); then per
    factor the weighted CPTP residuals.
    """
    choi = ch.superop_to_choi(product)
    parts = []
    for pair, target in zip(data.pairs, data.targets):
        diff = ch.partial_trace_choi(choi, pair) - target
        parts.append(diff.real.ravel())
        parts.append(diff.imag.ravel())
    root = np.sqrt(penalty_weight)
    basis = _unit_basis()
    for chi in chis:
        parts.append(root * ch.cptp_residuals(chi, basis))
    return np.concatenate(parts)


def residual_vector(
    model: PairwiseModel, data: TomographyData, penalty_weight: float = 1.0
) -> np.ndarray:
    if model.n_qubits != data.n_qubits:
        raise ch.DimensionError("model and data qubit counts differ")
    chis = [chi for _, chi in model.factors]
    return _stack_residual(build_superop(model), chis, data, penalty_weight)


def cost_c1(model: PairwiseModel, data: TomographyData) -> float:
    """Data misfit: summed squared Frobenius distance of the pair reductions."""
    choi = ch.superop_to_choi(build_superop(model))
    total = 0.0
    for pair, target in zip(data.pairs, data.targets):
        diff = ch.partial_trace_choi(choi, pair) - target
        total += float(np.sum(diff.real**2 + diff.imag**2))
    return total


def cost_c2(model: PairwiseModel, data: TomographyData, penalty_weight: float = 1.0) -> float:
    """Data misfit plus weighted CPTP penalty; the quantity :func:`solve`
    minimizes."""
    r = residual_vector(model, data, penalty_weight)
    return float(r @ r)


def finite_diff_jacobian(residual_fn, v: np.ndarray, step: float) -> np.ndarray:
    """Forward finite-difference Jacobian of a vector-valued function."""
    v = np.asarray(v, dtype=float)
    r0 = residual_fn(v)
    jac = np.empty((r0.size, v.size))
    for i in range(v.size):
        vp = v.copy()
        vp[i] += step
        jac[:, i] = (residual_fn(vp) - r0) / step
    return jac


class _Engine:
    """Residual and Jacobian evaluations for one data set.

    The Jacobian path recomputes only the factor a perturbed parameter
    belongs to and reuses cached superoperators for the rest, keeping the
    exact multiplication order of :func:`build_superop` so columns are
    bit-identical to a generic central difference on :func:`residual_vector`.
    Central differences keep the Jacobian usable near the PSD boundary,
    where the one-sided slope of the negative-eigenvalue penalty would
    otherwise bias every column.
    """

    def __init__(self, data: TomographyData, penalty_weight: float) -> None:
        self.data = data
        self.n = data.n_qubits
        self.pairs = data.pairs
        self.penalty_weight = penalty_weight

    def _parts(self, v: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        chis = []
        superops = []
        for j, pair in enumerate(self.pairs):
            w = v[j * N_PARAMS_PER_FACTOR : (j + 1) * N_PARAMS_PER_FACTOR]
            chi = _chi_from_params(w)
            chis.append(chi)
            superops.append(factor_superop(chi, pair, self.n))
        return chis, superops

    @staticmethod
    def _fold(superops: list[np.ndarray]) -> np.ndarray:
        out = None
        for s in superops:
            out = s if out is None else out @ s
        return out

    def residual(self, v: np.ndarray) -> np.ndarray:
        chis, superops = self._parts(v)
        return _stack_residual(self._fold(superops), chis, self.data, self.penalty_weight)

    def jacobian(self, v: np.ndarray, step: float) -> tuple[np.ndarray, np.ndarray]:
        """Central-difference Jacobian and the base residual at ``v``."""
        v = np.asarray(v, dtype=float)
        chis, superops = self._parts(v)
        m = len(self.pairs)
        # prefixes[j] = product of factors 0..j-1 in build_superop order
        prefixes: list[np.ndarray | None] = [None] * (m + 1)
        for j in range(m):
            s = superops[j]
            prefixes[j + 1] = s if prefixes[j] is None else prefixes[j] @ s
        r0 = _stack_residual(prefixes[m], chis, self.data, self.penalty_weight)
        jac = np.empty((r0.size, v.size))
        for j, pair in enumerate(self.pairs):
            base = v[j * N_PARAMS_PER_FACTOR : (j + 1) * N_PARAMS_PER_FACTOR]
            for t in range(N_PARAMS_PER_FACTOR):
                sides = []
                for sign in (1.0, -1.0):
                    w = base.copy()
                    w[t] += sign * step
                    chi = _chi_from_params(w)
                    s = factor_superop(chi, pair, self.n)
                    out = s if prefixes[j] is None else prefixes[j] @ s
                    for rest in superops[j + 1 :]:
                        out = out @ rest
                    trial_chis = chis.copy()
                    trial_chis[j] = chi
                    sides.append(
                        _stack_residual(out, trial_chis, self.data, self.penalty_weight)
                    )
                jac[:, j * N_PARAMS_PER_FACTOR + t] = (sides[0] - sides[1]) / (2.0 * step)
        return jac, r0


def solve(
    data: TomographyData,
    init: PairwiseModel | np.ndarray,
    config: SolverConfig | None = None,
    true_superop: np.ndarray | None = None,
) -> ReconstructionResult:
    """Fit a pairwise-factorized model to tomography data.

    ``init`` is a starting model or packed parameter vector.  When the true
    process superoperator is supplied the result carries the trace distance
    between the full Choi states as well.
    """
    cfg = config if config is not None else SolverConfig()
    if isinstance(init, PairwiseModel):
        if init.n_qubits != data.n_qubits:
            raise ch.DimensionError("initial model and data qubit counts differ")
        v = pack(init)
    else:
        v = np.asarray(init, dtype=float).copy()

    engine = _Engine(data, cfg.penalty_weight)
    r = engine.residual(v)
    if not np.all(np.isfinite(r)):
        raise SolverDivergedError("initial residuals are not finite")
    cost = float(r @ r)
    history = [cost]
    lam = _LAMBDA_INIT
    converged = False
    iterations = 0

    for iteration in range(cfg.max_iters):
        iterations = iteration + 1
        jac, _ = engine.jacobian(v, cfg.fd_step)
        h = jac.T @ jac
        g = jac.T @ r
        h_diag = np.diag(h) + _DIAG_FLOOR
        accepted = False
        drop = 0.0
        for _attempt in range(_MAX_DAMPING_TRIES):
            try:
                delta = np.linalg.solve(h + np.diag(lam * h_diag), -g)
            except np.linalg.LinAlgError:
                lam *= 3.0
                continue
            trial = v + delta
            r_trial = engine.residual(trial)
            if np.all(np.isfinite(r_trial)):
                cost_trial = float(r_trial @ r_trial)
                if cost_trial < cost:
                    drop = cost - cost_trial
                    v, r, cost = trial, r_trial, cost_trial
                    history.append(cost)
                    lam = max(lam / 3.0, _LAMBDA_FLOOR)
                    accepted = True
                    break
            lam *= 3.0
        if not accepted:
            # no improving damped step exists at this point: local optimum
            converged = True
            break
        if drop < cfg.eps_tol:
            converged = True
            break

    raw_model = unpack(v, data.n_qubits)
    projected = raw_model
    for pair, chi in raw_model.factors:
        projected = projected.replace_factor(pair, ch.project_psd_chi(chi))

    proj_super = build_superop(projected)
    proj_choi = ch.superop_to_choi(proj_super)
    pair_tds = tuple(
        ch.trace_distance(ch.partial_trace_choi(proj_choi, pair), target)
        for pair, target in zip(data.pairs, data.targets)
    )
    full_td = None
    if true_superop is not None:
        full_td = ch.trace_distance(proj_choi, ch.superop_to_choi(np.asarray(true_superop)))

    return ReconstructionResult(
        model=projected,
        raw_model=raw_model,
        cost=cost,
        projected_cost=cost_c2(projected, data, cfg.penalty_weight),
        iterations=iterations,
        converged=converged,
        cost_history=tuple(history),
        pair_trace_distances=pair_tds,
        full_trace_distance=full_td,
    )
