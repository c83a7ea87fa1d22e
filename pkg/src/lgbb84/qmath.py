"""Small fixed-dimension complex linear algebra and quantum-state primitives.

Everything here operates on plain numpy complex arrays wrapped in thin
validated types. Supported Hilbert-space dimensions are 2, 4 and 16
(qubit, qubit+probe, two two-qubit pairs); nothing more general is needed
or provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SUPPORTED_DIMS = (2, 4, 16)

HERMITICITY_ATOL = 1e-12
TRACE_ATOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
UNIT_NORM_ATOL = 1e-12
IMPOSSIBLE_OUTCOME_PROB = 1e-15

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class OutcomeImpossibleError(ValueError):
    """Raised when a projective update is requested for a zero-probability outcome."""


def _freeze(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BlochVector:
    """Unit 3-vector fixing a dichotomic qubit observable n . sigma."""

    nx: float
    ny: float
    nz: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.nx**2 + self.ny**2 + self.nz**2)
        if abs(norm - 1.0) > UNIT_NORM_ATOL:
            raise ValueError(f"Bloch vector must have unit norm, got |n| = {norm!r}")

    @classmethod
    def from_array(cls, v) -> "BlochVector":
        v = np.asarray(v, dtype=float)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(float(v[0] / norm), float(v[1] / norm), float(v[2] / norm))

    @classmethod
    def in_xy_plane(cls, angle: float) -> "BlochVector":
        """Equatorial direction at `angle` radians from the X axis."""
        return cls(math.cos(angle), math.sin(angle), 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz], dtype=float)

    def dot(self, other: "BlochVector") -> float:
        return self.nx * other.nx + self.ny * other.ny + self.nz * other.nz


X_DIRECTION = BlochVector(1.0, 0.0, 0.0)
Y_DIRECTION = BlochVector(0.0, 1.0, 0.0)
Z_DIRECTION = BlochVector(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density operator on a 2-, 4- or 16-dimensional space."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _freeze(self.matrix)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if m.shape[0] not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension {m.shape[0]}, expected one of {SUPPORTED_DIMS}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValueError("density matrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_ATOL:
            raise ValueError("density matrix must be Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix must have unit trace, got {tr!r}")
        if np.linalg.eigvalsh(m).min() < EIGENVALUE_FLOOR:
            raise ValueError("density matrix must be positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, statevector) -> "DensityMatrix":
        v = np.asarray(statevector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > UNIT_NORM_ATOL:
            raise ValueError(f"statevector must be normalized, got |v| = {norm!r}")
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class Projector:
    """Rank-1 qubit projector labelled with its measurement outcome (+1 or -1)."""

    matrix: np.ndarray
    outcome: int

    def __post_init__(self) -> None:
        m = _freeze(self.matrix)
        object.__setattr__(self, "matrix", m)
        if self.outcome not in (1, -1):
            raise ValueError(f"outcome must be +1 or -1, got {self.outcome}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_ATOL:
            raise ValueError("projector must be Hermitian")
        if np.max(np.abs(m @ m - m)) > HERMITICITY_ATOL:
            raise ValueError("projector must be idempotent")


def bloch_to_observable(n: BlochVector) -> np.ndarray:
    """Hermitian, traceless, involutory observable n . sigma for a unit vector n."""
    return n.nx * PAULI_X + n.ny * PAULI_Y + n.nz * PAULI_Z


def projector_of(n: BlochVector, outcome: int) -> Projector:
    """Projector (I + m n.sigma)/2 onto the outcome-m eigenspace of n.sigma."""
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")
    return Projector((IDENTITY_2 + outcome * bloch_to_observable(n)) / 2.0, outcome)


def eigenstate_of(n: BlochVector, outcome: int) -> np.ndarray:
    """Normalized statevector of the outcome eigenspace of n.sigma.

    The global phase is fixed by taking the dominant column of the projector,
    which is deterministic for every direction.
    """
    p = projector_of(n, outcome).matrix
    col = int(np.argmax(np.abs(np.diag(p))))
    v = p[:, col]
    return v / np.linalg.norm(v)


def tensor(*matrices: np.ndarray) -> np.ndarray:
    """Kronecker product of two or more operators, in left-to-right order."""
    if len(matrices) < 2:
        raise ValueError("tensor requires at least two factors")
    out = np.asarray(matrices[0], dtype=complex)
    for m in matrices[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def partial_trace(rho: DensityMatrix, dims: list[int], keep: list[int]) -> DensityMatrix:
    """Trace out all subsystems not listed in `keep`.

    Args:
        rho: state on the full space.
        dims: dimension of each subsystem, in tensor order; their product
            must equal rho.dim.
        keep: indices (into dims) of the subsystems to retain; must be
            nonempty and is returned in ascending subsystem order.
    """
    dims = list(dims)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep must be nonempty")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    if int(np.prod(dims)) != rho.dim:
        raise ValueError(f"product of dims {dims} does not match state dimension {rho.dim}")

    n = len(dims)
    tensor_form = rho.matrix.reshape(dims + dims)
    traced = tensor_form
    # Trace highest-index discarded subsystems first so axis numbers stay valid.
    for idx in sorted(set(range(n)) - set(keep), reverse=True):
        current = traced.ndim // 2
        traced = np.trace(traced, axis1=idx, axis2=idx + current)
    kept_dim = int(np.prod([dims[k] for k in keep]))
    return DensityMatrix(traced.reshape(kept_dim, kept_dim))


def expectation(rho: DensityMatrix, observable: np.ndarray) -> float:
    """Born-rule expectation Tr(O rho) of a Hermitian observable."""
    obs = np.asarray(observable, dtype=complex)
    if obs.shape != rho.matrix.shape:
        raise ValueError(f"dimension mismatch: observable {obs.shape} vs state {rho.matrix.shape}")
    if np.max(np.abs(obs - obs.conj().T)) > HERMITICITY_ATOL:
        raise ValueError("observable must be Hermitian")
    value = np.trace(obs @ rho.matrix)
    if abs(value.imag) > 1e-10:
        raise ValueError(f"expectation has non-negligible imaginary part {value.imag!r}")
    return float(value.real)


def luders_update(rho: DensityMatrix, projector: Projector) -> tuple[float, DensityMatrix]:
    """Projective (Lueders) measurement update.

    Returns the outcome probability Tr(P rho P) and the normalized
    post-measurement state P rho P / prob. Raises OutcomeImpossibleError
    when the outcome probability vanishes, in which case no post-state exists.
    """
    p = projector.matrix
    if p.shape != rho.matrix.shape:
        raise ValueError(f"dimension mismatch: projector {p.shape} vs state {rho.matrix.shape}")
    updated = p @ rho.matrix @ p
    prob = float(np.trace(updated).real)
    if prob <= IMPOSSIBLE_OUTCOME_PROB:
        raise OutcomeImpossibleError(f"outcome {projector.outcome} has probability {prob!r}")
    post = (updated + updated.conj().T) / (2.0 * prob)  # re-symmetrize round-off
    return prob, DensityMatrix(post)
