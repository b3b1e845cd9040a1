"""Spin operators and the unitary splitting of Hermitian observables.

Any Hermitian X with spectral norm n = max|eig(X)| can be written as

    X = (n / 2) * (W + W^+),     W = X/n + i * sqrt(1 - X^2 / n^2),

where W is unitary and the square root is taken on the principal
(nonnegative) branch, eigenvalue by eigenvalue.  Both operators are
functions of the same eigenbasis, so W commutes with X and the choice
of eigenvectors inside degenerate subspaces is immaterial.

For the spin-1 z operator this gives

    S^z = diag(1, 0, -1)   ->   W = diag(1, i, -1),

and the x/y versions follow by the basis change that diagonalizes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .register import LocalOperator

_SUPPORTED_SPINS = (0.5, 1.0, 1.5, 2.0)

# Numerical floor below which an observable counts as zero (rejected:
# the splitting divides by the norm and a zero observable has a
# trivially zero correlator anyway).
_ZERO_NORM = 1e-14


def spin_matrix(spin: float, axis: str) -> LocalOperator:
    """Standard spin matrix in the S^z eigenbasis (level 0 = m = +s).

    Satisfies [S^x, S^y] = i S^z and its cyclic permutations.
    """
    spin = float(spin)
    if spin not in _SUPPORTED_SPINS:
        raise ValueError(f"unsupported spin {spin}; expected one of {_SUPPORTED_SPINS}")
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    d = int(round(2 * spin + 1))
    m = spin - np.arange(d)
    if axis == "z":
        mat = np.diag(m).astype(np.complex128)
    else:
        raising = np.zeros((d, d))
        for k in range(1, d):
            raising[k - 1, k] = math.sqrt(spin * (spin + 1) - m[k] * (m[k] + 1))
        if axis == "x":
            mat = (raising + raising.T) / 2.0
        else:
            mat = (raising - raising.T) / 2.0j
    return LocalOperator(mat, support=(0,), hermitian=True)


def spectral_norm(op: LocalOperator) -> float:
    """Largest eigenvalue magnitude of a Hermitian operator."""
    if not op.hermitian:
        raise ValueError("spectral norm is defined here for Hermitian operators only")
    vals = np.linalg.eigvalsh(op.matrix)
    return float(np.max(np.abs(vals)))


@dataclass(frozen=True)
class HermitianObservable:
    """Hermitian operator with its spectral norm cached at construction."""

    op: LocalOperator
    spectral_norm: float = 0.0

    def __post_init__(self):
        if not self.op.hermitian:
            raise ValueError("observable must carry the hermitian flag")
        norm = spectral_norm(self.op)
        if norm <= _ZERO_NORM:
            raise ValueError("zero observable rejected (norm below 1e-14)")
        object.__setattr__(self, "spectral_norm", norm)

    @property
    def support(self) -> tuple[int, ...]:
        return self.op.support

    def on(self, *sites: int) -> "HermitianObservable":
        return HermitianObservable(self.op.on(*sites))


@dataclass(frozen=True)
class UnitaryDecomposition:
    """The pair (norm, W) with X = (norm/2)(W + W^+)."""

    norm: float
    w: LocalOperator
    w_dagger: LocalOperator

    def pick(self, choice: str) -> LocalOperator:
        if choice == "w":
            return self.w
        if choice == "w_dagger":
            return self.w_dagger
        raise ValueError(f"choice must be 'w' or 'w_dagger', got {choice!r}")


def _unitary_from_scaled(xn: np.ndarray) -> np.ndarray:
    """W for a Hermitian matrix with spectrum inside [-1, 1]."""
    try:
        vals, vecs = np.linalg.eigh(xn)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise np.linalg.LinAlgError(
            f"eigensolver did not converge while splitting an observable: {exc}"
        ) from exc
    vals = np.clip(vals, -1.0, 1.0)
    phases = vals + 1j * np.sqrt(1.0 - vals**2)
    return (vecs * phases) @ vecs.conj().T


def decompose(obs: HermitianObservable) -> UnitaryDecomposition:
    """Split a Hermitian observable into (norm/2)(W + W^+) with W unitary.

    Each eigenvalue x maps to x/norm + i sqrt(1 - (x/norm)^2); the
    nonnegative root keeps the eigenphases inside [0, pi].
    """
    w_mat = _unitary_from_scaled(obs.op.matrix / obs.spectral_norm)
    w = LocalOperator(w_mat, support=obs.op.support, unitary=True)
    return UnitaryDecomposition(norm=obs.spectral_norm, w=w, w_dagger=w.dagger())


@dataclass(frozen=True)
class OperatorString:
    """Product of single-site Hermitian factors on distinct sites."""

    factors: tuple[tuple[int, HermitianObservable], ...]

    def __post_init__(self):
        factors = tuple((int(s), o) for s, o in self.factors)
        object.__setattr__(self, "factors", factors)
        if not factors:
            raise ValueError("operator string needs at least one factor")
        sites = [s for s, _ in factors]
        if len(set(sites)) != len(sites):
            raise ValueError(f"string sites must be distinct, got {sites}")
        for s, obs in factors:
            if len(obs.op.support) != 1:
                raise ValueError(f"factor on site {s} must be a single-site operator")


@dataclass(frozen=True)
class StringDecomposition:
    """Expansion of the string's W as a sum of product unitaries.

    ``terms`` holds 2^(n-1) entries (coefficient, per-site unitaries);
    together with their Hermitian conjugates these are the 2^n raw
    product terms, and the string is reconstructed as

        X = (norm / 2) * sum_terms coeff * (T + T^+),   T = kron(factors).
    """

    norm: float
    terms: tuple[tuple[float, tuple[LocalOperator, ...]], ...]


def decompose_string(s: OperatorString) -> StringDecomposition:
    """Expand the W of a product string into single-site W/W^+ factors.

    Splitting every factor as S_k = (n_k/2)(W_k + W_k^+) and collecting
    the product gives 2^n tensor terms with overall prefactor
    (prod_k n_k) / 2^n.  Conjugate pairs are merged by fixing the first
    slot to W_1, leaving 2^(n-1) terms of weight 1/2^(n-1) each; the
    coefficient is pinned by requiring the reconstruction identity above
    to hold exactly (checked densely in the tests).
    """
    parts = [(site, decompose(obs)) for site, obs in s.factors]
    n = len(parts)
    norm = math.prod(d.norm for _, d in parts)
    coeff = 1.0 / 2 ** (n - 1)
    terms = []
    for mask in range(2 ** (n - 1)):
        ops = [parts[0][1].w.on(parts[0][0])]
        for k in range(1, n):
            site, dec = parts[k]
            pick = dec.w if (mask >> (k - 1)) & 1 == 0 else dec.w_dagger
            ops.append(pick.on(site))
        terms.append((coeff, tuple(ops)))
    return StringDecomposition(norm=norm, terms=tuple(terms))
