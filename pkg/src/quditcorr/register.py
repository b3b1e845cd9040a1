"""Mixed-radix state vectors and local operator application.

A register is an ordered list of qudits with independent local
dimensions, stored as a dense complex amplitude vector in row-major
mixed-radix order: site 0 is the slowest-varying digit.  When an
ancilla qubit is present it occupies site 0, so a controlled operation
on it touches two contiguous halves of the amplitude vector.

Operators are applied by gathering the support axes to the front,
multiplying the small operator matrix into the reshaped block, and
scattering back; the full-register matrix is never materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .rng import as_generator

# Hard budget on register size (amplitude count).
MAX_AMPLITUDES = 2**27

# Tolerance for structural checks (hermiticity/unitarity flags).
FLAG_ATOL = 1e-12


@dataclass(frozen=True)
class RegisterShape:
    """Ordered local dimensions, e.g. (2, 3, 3, 3) = ancilla + 3 spin-1 sites."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError("register needs at least one site")
        if any(d < 2 for d in dims):
            raise ValueError(f"every local dimension must be >= 2, got {dims}")
        if self.size > MAX_AMPLITUDES:
            raise ValueError(
                f"register with {self.size} amplitudes exceeds the "
                f"{MAX_AMPLITUDES} amplitude budget"
            )

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    @property
    def n_sites(self) -> int:
        return len(self.dims)


@dataclass
class QuditState:
    """Dense state vector over a mixed-radix register.

    The squared norm is tracked explicitly: non-unitary evolution is
    allowed to shrink (or slightly grow) it, and probabilities are then
    understood relative to ``squared_norm`` instead of renormalizing.
    """

    shape: RegisterShape
    amplitudes: np.ndarray
    squared_norm: float = field(init=False)

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amp.shape != (self.shape.size,):
            raise ValueError(
                f"amplitude vector of length {amp.shape} does not match "
                f"register size {self.shape.size}"
            )
        self.amplitudes = amp
        self.squared_norm = float(np.real(np.vdot(amp, amp)))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.shape.dims

    @property
    def is_normalized(self) -> bool:
        # 1e-9 slack: matches the norm drift allowed for long evolutions.
        return abs(math.sqrt(self.squared_norm) - 1.0) <= 1e-9

    def copy(self) -> "QuditState":
        return QuditState(self.shape, self.amplitudes.copy())


def basis_state(dims, levels) -> QuditState:
    """Computational basis state |levels[0], levels[1], ...>."""
    shape = RegisterShape(tuple(dims))
    levels = tuple(int(l) for l in levels)
    if len(levels) != shape.n_sites:
        raise ValueError("one level per site required")
    idx = 0
    for d, l in zip(shape.dims, levels):
        if not 0 <= l < d:
            raise ValueError(f"level {l} out of range for dimension {d}")
        idx = idx * d + l
    amp = np.zeros(shape.size, dtype=np.complex128)
    amp[idx] = 1.0
    return QuditState(shape, amp)


@dataclass(frozen=True)
class LocalOperator:
    """Square matrix acting on an ordered tuple of sites.

    The matrix lives in the tensor-product basis of the support sites in
    the listed order; everywhere else the operator acts as identity.
    """

    matrix: np.ndarray
    support: tuple[int, ...]
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator matrix must be square, got {mat.shape}")
        object.__setattr__(self, "matrix", mat)
        support = tuple(int(s) for s in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise ValueError("operator needs at least one support site")
        if len(set(support)) != len(support):
            raise ValueError(f"support sites must be distinct, got {support}")
        if any(s < 0 for s in support):
            raise ValueError(f"support sites must be nonnegative, got {support}")
        if self.hermitian:
            err = np.max(np.abs(mat - mat.conj().T))
            if err > FLAG_ATOL:
                raise ValueError(f"hermitian flag set but max|M - M^+| = {err:.2e}")
        if self.unitary:
            err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
            if err > FLAG_ATOL:
                raise ValueError(f"unitary flag set but max|M^+ M - 1| = {err:.2e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def on(self, *sites: int) -> "LocalOperator":
        """Same matrix re-anchored on different sites."""
        if len(sites) != len(self.support):
            raise ValueError("site count must match the operator's support size")
        return replace(self, support=tuple(int(s) for s in sites))

    def dagger(self) -> "LocalOperator":
        return replace(self, matrix=self.matrix.conj().T)


def _check_support(state: QuditState, op: LocalOperator) -> int:
    dims = state.dims
    for s in op.support:
        if s >= len(dims):
            raise IndexError(f"support site {s} out of range for {len(dims)} sites")
    d_sup = math.prod(dims[s] for s in op.support)
    if op.dim != d_sup:
        raise ValueError(
            f"operator dimension {op.dim} does not match support dimension {d_sup}"
        )
    return d_sup


def _apply_to_tensor(psi: np.ndarray, op: LocalOperator, axes: tuple[int, ...]) -> np.ndarray:
    """Apply op to the given axes of an amplitude tensor (gather/scatter)."""
    k = len(axes)
    moved = np.moveaxis(psi, axes, range(k))
    head = moved.shape[:k]
    blk = moved.reshape(math.prod(head), -1)
    out = op.matrix @ blk
    out = out.reshape(head + moved.shape[k:])
    return np.moveaxis(out, range(k), axes)


def apply_local(state: QuditState, op: LocalOperator) -> QuditState:
    """Return op|state> with op embedded as identity off its support.

    Preserves the norm iff the operator is unitary; non-unitary
    (e.g. bare spin) operators produce a state whose squared norm equals
    <psi|M^+ M|psi>.
    """
    _check_support(state, op)
    psi = state.amplitudes.reshape(state.dims)
    out = _apply_to_tensor(psi, op, op.support)
    return QuditState(state.shape, out.reshape(-1))


def apply_controlled(
    state: QuditState, control_site: int, control_value: int, op: LocalOperator
) -> QuditState:
    """Apply op only on the subspace where control_site is at control_value."""
    dims = state.dims
    if control_site < 0 or control_site >= len(dims):
        raise IndexError(f"control site {control_site} out of range")
    if control_site in op.support:
        raise ValueError(f"control site {control_site} lies inside the op support")
    if not 0 <= control_value < dims[control_site]:
        raise ValueError(
            f"control value {control_value} out of range for dimension {dims[control_site]}"
        )
    _check_support(state, op)

    psi = state.amplitudes.reshape(dims).copy()
    slicer = [slice(None)] * len(dims)
    slicer[control_site] = control_value
    slab = psi[tuple(slicer)]  # view into the copy
    # Axes after the control site shift down by one inside the slab.
    axes = tuple(s if s < control_site else s - 1 for s in op.support)
    psi[tuple(slicer)] = _apply_to_tensor(slab, op, axes)
    return QuditState(state.shape, psi.reshape(-1))


def ancilla_zero_probability(state: QuditState) -> float:
    """P(ancilla = |0>), with site 0 the ancilla qubit.

    For unnormalized states the probability is relative to the total
    squared norm.
    """
    if state.dims[0] != 2:
        raise ValueError(f"site 0 has dimension {state.dims[0]}, expected a qubit")
    if state.squared_norm <= 0.0:
        raise ValueError("state has vanishing norm")
    half = state.shape.size // 2
    p0 = float(np.sum(np.abs(state.amplitudes[:half]) ** 2))
    return p0 / state.squared_norm


def site_marginal(state: QuditState, site: int) -> np.ndarray:
    """Outcome distribution of a projective measurement of one site."""
    dims = state.dims
    if site < 0 or site >= len(dims):
        raise IndexError(f"site {site} out of range")
    if state.squared_norm <= 0.0:
        raise ValueError("state has vanishing norm")
    psi = state.amplitudes.reshape(dims)
    moved = np.moveaxis(psi, site, 0).reshape(dims[site], -1)
    p = np.sum(np.abs(moved) ** 2, axis=1) / state.squared_norm
    # Guard tiny negative round-off before handing to a sampler.
    return np.clip(p, 0.0, None) / np.sum(np.clip(p, 0.0, None))


def sample_outcomes(state: QuditState, site: int, shots: int, seed) -> np.ndarray:
    """Multinomial histogram of projective outcomes on one site.

    Deterministic for a fixed seed (or Generator); shots = 0 returns an
    all-zero histogram.
    """
    if shots < 0:
        raise ValueError("shots must be nonnegative")
    p = site_marginal(state, site)
    if shots == 0:
        return np.zeros(len(p), dtype=np.int64)
    rng = as_generator(seed)
    return rng.multinomial(shots, p)


def expectation(state: QuditState, op: LocalOperator) -> complex:
    """<psi|M|psi> without normalizing (see linear_response for the ratio)."""
    out = apply_local(state, op)
    return complex(np.vdot(state.amplitudes, out.amplitudes))
