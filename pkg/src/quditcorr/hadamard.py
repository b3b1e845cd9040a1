"""Ancilla-interferometric measurement of two-time spin correlators.

One circuit realization (ancilla = register site 0, system = the rest):

    prep (|0> + e^{i alpha}|1>)/sqrt(2)  x  |psi0>
    X on ancilla
    evolve system to t1
    controlled-V_A  (control = ancilla |1>)
    X on ancilla
    evolve system by t2 - t1
    controlled-V_B  (control = ancilla |1>)
    Hadamard on ancilla
    measure P = P(ancilla = |0>)

Working through the gate sequence state by state gives

    4 P - 2 = 2 Re( e^{i alpha} <V_A^+(t1) V_B(t2)> ),

with Heisenberg operators O(t) = U^+(t) O U(t).  Splitting the
observables A and B into unitary pairs (W, W^+) of norms ||A||, ||B||
and summing the circuit outputs over all four gate pairs yields the
correlator assembly used below; the gate in the first slot enters
daggered, but the sum over both choices makes the assembled value
independent of that bookkeeping.

Sign conventions, pinned against the dense brute-force oracle (N = 2, 3):

    alpha = 0     ->  C+ = <{A(t1), B(t2)}>          (anti-commutator)
    alpha = pi/2  ->  C- = i <[A(t1), B(t2)]>        (commutator)
    C+- = (||A|| ||B|| / 4) * sum_{V_A, V_B} (4 P - 2)

Shot noise on an estimate built from the four probabilities obeys

    Var[C+-] = 4 ||A||^2 ||B||^2 * sum P (1 - P)

per total shot when the budget splits evenly over the four circuits
(each circuit then receives shots/4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Propagator, evolve
from .observables import HermitianObservable, UnitaryDecomposition, decompose
from .register import (
    LocalOperator,
    QuditState,
    RegisterShape,
    ancilla_zero_probability,
    apply_controlled,
    apply_local,
)
from .rng import as_generator

W = "w"
W_DAGGER = "w_dagger"
COMBOS = ((W, W), (W, W_DAGGER), (W_DAGGER, W), (W_DAGGER, W_DAGGER))

ALPHA_PLUS = 0.0  # anti-commutator phase
ALPHA_MINUS = math.pi / 2  # commutator phase

_X_GATE = LocalOperator(
    np.array([[0, 1], [1, 0]], dtype=np.complex128), (0,), hermitian=True, unitary=True
)
_H_GATE = LocalOperator(
    np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2),
    (0,),
    hermitian=True,
    unitary=True,
)

EXACT = "exact"
SAMPLED = "sampled"


@dataclass(frozen=True)
class HadamardTask:
    """One circuit realization: times, gate choices, ancilla phase.

    t1 > t2 is allowed (the middle segment then propagates backwards),
    which is what the time-swapped symmetry checks exercise.
    """

    t1: float
    t2: float
    va_choice: str
    vb_choice: str
    alpha: float
    observable_a: HermitianObservable
    observable_b: HermitianObservable

    def __post_init__(self):
        if self.t1 < 0 or self.t2 < 0:
            raise ValueError("times must be nonnegative")
        if self.va_choice not in (W, W_DAGGER) or self.vb_choice not in (W, W_DAGGER):
            raise ValueError(f"gate choices must be '{W}' or '{W_DAGGER}'")
        if not (
            math.isclose(self.alpha, ALPHA_PLUS, abs_tol=1e-12)
            or math.isclose(self.alpha, ALPHA_MINUS, abs_tol=1e-12)
        ):
            raise ValueError("alpha must be 0 or pi/2")


@dataclass(frozen=True)
class CorrelatorEstimate:
    """Correlator value with its shot-noise error bar and provenance."""

    value: float
    std_error: float
    shots: int
    mode: str  # "exact" | "sampled"


def attach_ancilla(psi0: QuditState, alpha: float) -> QuditState:
    """(|0> + e^{i alpha}|1>)/sqrt(2) (x) |psi0>, ancilla as site 0."""
    shape = RegisterShape((2,) + psi0.dims)
    amp = np.concatenate(
        [psi0.amplitudes, np.exp(1j * alpha) * psi0.amplitudes]
    ) / math.sqrt(2)
    return QuditState(shape, amp)


def _shift(op: LocalOperator) -> LocalOperator:
    """Re-anchor a system-site operator behind the ancilla."""
    return op.on(*(s + 1 for s in op.support))


def run_hadamard_circuit(
    task: HadamardTask,
    psi0: QuditState,
    prop: Propagator,
    decomp_a: UnitaryDecomposition | None = None,
    decomp_b: UnitaryDecomposition | None = None,
) -> float:
    """Execute one realization on the system state and return P(|0>).

    psi0 is the system-only state; the ancilla is prepared internally.
    The two unitary splittings may be passed in to avoid recomputing
    them for every one of the eight realizations of a measurement.
    """
    decomp_a = decomp_a or decompose(task.observable_a)
    decomp_b = decomp_b or decompose(task.observable_b)
    va = _shift(decomp_a.pick(task.va_choice))
    vb = _shift(decomp_b.pick(task.vb_choice))

    state = attach_ancilla(psi0, task.alpha)
    state = apply_local(state, _X_GATE)
    state = evolve(prop, state, task.t1)
    state = apply_controlled(state, 0, 1, va)
    state = apply_local(state, _X_GATE)
    state = evolve(prop, state, task.t2 - task.t1)
    state = apply_controlled(state, 0, 1, vb)
    state = apply_local(state, _H_GATE)
    return ancilla_zero_probability(state)


def probability_to_correlator(p: float) -> float:
    """Map an ancilla-|0> probability to the unitary-pair correlator 4p - 2."""
    if not -1e-12 <= p <= 1.0 + 1e-12:
        raise ValueError(f"probability {p} outside [0, 1]")
    return 4.0 * min(max(p, 0.0), 1.0) - 2.0


def sample_probability(p_exact: float, shots: int, seed) -> float:
    """Binomial estimate of a probability from a finite shot budget."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not -1e-12 <= p_exact <= 1.0 + 1e-12:
        raise ValueError(f"probability {p_exact} outside [0, 1]")
    rng = as_generator(seed)
    p = min(max(p_exact, 0.0), 1.0)
    return rng.binomial(shots, p) / shots


def variance_model(p_values, norm_a: float, norm_b: float) -> float:
    """Single-shot variance of the assembled correlator.

    ``shots`` here means the total budget split evenly over the four
    circuits, so the estimator at total budget n has variance
    variance_model / n.  All four probabilities at 1/2 saturate the
    a priori bound 4 ||A||^2 ||B||^2.
    """
    ps = np.asarray(p_values, dtype=float)
    if ps.shape != (4,):
        raise ValueError("expected one probability per gate pair (4 values)")
    if np.any(ps < -1e-12) or np.any(ps > 1 + 1e-12):
        raise ValueError("probabilities must lie in [0, 1]")
    ps = np.clip(ps, 0.0, 1.0)
    return float(4.0 * norm_a**2 * norm_b**2 * np.sum(ps * (1.0 - ps)))


def assemble_correlator(parts, norm_a: float, norm_b: float) -> CorrelatorEstimate:
    """Combine the four per-gate-pair estimates into the observable correlator.

    ``parts`` maps each (va_choice, vb_choice) pair to a
    CorrelatorEstimate of 4P - 2; errors combine in quadrature with the
    same ||A|| ||B|| / 4 prefactor.
    """
    missing = [c for c in COMBOS if c not in parts]
    if missing or len(parts) != 4:
        raise ValueError(f"need exactly one part per gate pair; missing {missing}")
    pref = norm_a * norm_b / 4.0
    value = pref * sum(parts[c].value for c in COMBOS)
    var = pref**2 * sum(parts[c].std_error ** 2 for c in COMBOS)
    shots = sum(parts[c].shots for c in COMBOS)
    mode = EXACT if all(parts[c].mode == EXACT for c in COMBOS) else SAMPLED
    return CorrelatorEstimate(float(value), float(math.sqrt(var)), shots, mode)


def circuit_probabilities(
    obs_a: HermitianObservable,
    obs_b: HermitianObservable,
    t1: float,
    t2: float,
    psi0: QuditState,
    prop: Propagator,
    alpha: float,
) -> np.ndarray:
    """Exact P(|0>) for the four gate pairs at one ancilla phase."""
    decomp_a = decompose(obs_a)
    decomp_b = decompose(obs_b)
    ps = np.empty(4)
    for k, (va, vb) in enumerate(COMBOS):
        task = HadamardTask(t1, t2, va, vb, alpha, obs_a, obs_b)
        ps[k] = run_hadamard_circuit(task, psi0, prop, decomp_a, decomp_b)
    return ps


def estimate_from_probabilities(
    ps,
    norm_a: float,
    norm_b: float,
    shots_per_circuit: int | None,
    rng=None,
    nominal_total: int | None = None,
) -> CorrelatorEstimate:
    """Assemble one correlator estimate from the four exact probabilities.

    shots_per_circuit = None gives the exact value; an attached nominal
    total budget then supplies the error bar sqrt(variance_model / n).
    Otherwise each probability is replaced by an independent binomial
    draw and the error bar uses the empirical binomial variances.
    """
    ps = np.asarray(ps, dtype=float)
    parts = {}
    if shots_per_circuit is None:
        if nominal_total:
            std = math.sqrt(variance_model(ps, norm_a, norm_b) / nominal_total)
            total = nominal_total
        else:
            std = 0.0
            total = 0
        value = (norm_a * norm_b / 4.0) * sum(4.0 * p - 2.0 for p in ps)
        return CorrelatorEstimate(float(value), std, total, EXACT)
    rng = as_generator(rng if rng is not None else 0)
    for combo, p in zip(COMBOS, ps):
        p_hat = sample_probability(p, shots_per_circuit, rng)
        sigma = 4.0 * math.sqrt(p_hat * (1.0 - p_hat) / shots_per_circuit)
        parts[combo] = CorrelatorEstimate(
            probability_to_correlator(p_hat), sigma, shots_per_circuit, SAMPLED
        )
    return assemble_correlator(parts, norm_a, norm_b)


def measure_dynamical_correlator(
    obs_a: HermitianObservable,
    obs_b: HermitianObservable,
    t1: float,
    t2: float,
    psi0: QuditState,
    prop: Propagator,
    budget: int | None = None,
    rng=None,
    nominal_total: int | None = None,
) -> tuple[CorrelatorEstimate, CorrelatorEstimate]:
    """Measure (C+, C-) via the eight circuit realizations.

    budget is the per-circuit shot count (None = exact expectation
    values).  The full correlator is recoverable as C = C+/2 - i C-/2.
    Draws consume the caller's generator in a fixed order (anti-
    commutator circuits first), keeping sweeps reproducible.
    """
    if budget is not None and budget < 1:
        raise ValueError("per-circuit budget must be >= 1 (or None for exact)")
    rng = as_generator(rng if rng is not None else 0)
    out = []
    for alpha in (ALPHA_PLUS, ALPHA_MINUS):
        ps = circuit_probabilities(obs_a, obs_b, t1, t2, psi0, prop, alpha)
        out.append(
            estimate_from_probabilities(
                ps,
                obs_a.spectral_norm,
                obs_b.spectral_norm,
                budget,
                rng,
                nominal_total,
            )
        )
    return out[0], out[1]
