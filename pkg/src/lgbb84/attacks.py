"""Adversary models: the four-qubit cheat state and the probe channel attack.

The cheat state is a separable sixteen-dimensional state built from two
classically correlated qubit pairs; the devices it ships with wire each
party's basis choice to one particle of the appropriate pair, so
matched-basis outcomes agree perfectly while the supplier keeps a full
classical record of every bit.

The channel attack couples each transmitted qubit to a fresh probe qubit
through a partial-swap unitary with interaction angle theta; the probe is
measured only after bases are announced.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .qmath import (
    BlochVector,
    DensityMatrix,
    IDENTITY_2,
    X_DIRECTION,
    Y_DIRECTION,
    Z_DIRECTION,
    eigenstate_of,
    expectation,
    partial_trace,
    projector_of,
    tensor,
)

UNITARITY_ATOL = 1e-12


class Basis(enum.Enum):
    """Measurement / preparation bases used by the protocols."""

    X = "X"
    Y = "Y"
    Z = "Z"
    M_PLUS = "M+"
    M_MINUS = "M-"

    @property
    def bloch(self) -> BlochVector:
        return _BASIS_DIRECTIONS[self]

    @property
    def label(self) -> str:
        return self.value


_SQRT_HALF = 1.0 / math.sqrt(2.0)
_BASIS_DIRECTIONS = {
    Basis.X: X_DIRECTION,
    Basis.Y: Y_DIRECTION,
    Basis.Z: Z_DIRECTION,
    Basis.M_PLUS: BlochVector(_SQRT_HALF, _SQRT_HALF, 0.0),
    Basis.M_MINUS: BlochVector(_SQRT_HALF, -_SQRT_HALF, 0.0),
}


class CheatPolicy(enum.Enum):
    """What the cheat device feeds Bob's M+/M- measurement.

    The source model asserts the cheat state produces no inequality
    violation without fixing the wiring; UNWIRED_RANDOM (a fair coin,
    uncorrelated with everything) reproduces that. The two wired policies
    measure one of Bob's particles in the requested direction instead; both
    stay at or below sqrt(2), well under the classical bound 2.
    """

    UNWIRED_RANDOM = "unwired_random"
    MEASURE_X_PAIR = "measure_x_pair"
    MEASURE_Y_PAIR = "measure_y_pair"


@dataclass(frozen=True)
class CheatState:
    """Separable four-qubit state plus the device wiring that exploits it.

    Particles 0 and 2 sit in Alice's device, particles 1 and 3 in Bob's.
    Pair (0, 1) is perfectly correlated in basis_pair[0], pair (2, 3) in
    basis_pair[1].
    """

    state: DensityMatrix
    basis_pair: tuple[Basis, Basis]
    policy: CheatPolicy
    alice_wiring: dict[Basis, int]
    bob_wiring: dict[Basis, int | None]


def _pair_state(basis: Basis) -> np.ndarray:
    """(P_+ x P_+ + P_- x P_-)/2: a classical perfect correlation in `basis`."""
    plus = projector_of(basis.bloch, +1).matrix
    minus = projector_of(basis.bloch, -1).matrix
    return (tensor(plus, plus) + tensor(minus, minus)) / 2.0


def build_cheat_state(
    basis_pair: str = "XY", policy: CheatPolicy = CheatPolicy.UNWIRED_RANDOM
) -> CheatState:
    """Construct the cheat state for a two-basis protocol.

    basis_pair "ZX" gives the Z/X construction used against plain BB84;
    "XY" gives the analogous state for the X/Y encoding. The state is
    (pair correlated in first basis) x (pair correlated in second basis),
    manifestly separable.
    """
    pairs = {"ZX": (Basis.Z, Basis.X), "XY": (Basis.X, Basis.Y)}
    if basis_pair not in pairs:
        raise ValueError(f"basis_pair must be one of {sorted(pairs)}, got {basis_pair!r}")
    first, second = pairs[basis_pair]

    state = DensityMatrix(tensor(_pair_state(first), _pair_state(second)))
    alice_wiring = {first: 0, second: 2}
    bob_wiring: dict[Basis, int | None] = {first: 1, second: 3}

    if policy is CheatPolicy.UNWIRED_RANDOM:
        m_particle: int | None = None
    elif policy is CheatPolicy.MEASURE_X_PAIR:
        if Basis.X not in bob_wiring:
            raise ValueError(f"basis pair {basis_pair} has no X-correlated pair")
        m_particle = bob_wiring[Basis.X]
    else:
        if Basis.Y not in bob_wiring:
            raise ValueError(f"basis pair {basis_pair} has no Y-correlated pair")
        m_particle = bob_wiring[Basis.Y]
    bob_wiring[Basis.M_PLUS] = m_particle
    bob_wiring[Basis.M_MINUS] = m_particle

    return CheatState(state, (first, second), policy, alice_wiring, bob_wiring)


def _embed(projector: np.ndarray, particle: int) -> np.ndarray:
    factors = [IDENTITY_2] * 4
    factors[particle] = projector
    return tensor(*factors)


@functools.lru_cache(maxsize=None)
def cheat_joint_probabilities(basis_pair: str, policy: CheatPolicy) -> dict:
    """P(a, b | alice_basis, bob_basis) for every wired setting combination.

    Computed directly on the sixteen-dimensional state; Bob's M+/M- columns
    under UNWIRED_RANDOM are a fair coin independent of Alice's outcome.
    """
    cs = build_cheat_state(basis_pair, policy)
    table: dict[tuple[Basis, Basis], np.ndarray] = {}
    bob_bases = list(cs.basis_pair) + [Basis.M_PLUS, Basis.M_MINUS]
    for alice_basis in cs.basis_pair:
        i = cs.alice_wiring[alice_basis]
        for bob_basis in bob_bases:
            j = cs.bob_wiring[bob_basis]
            cell = np.zeros((2, 2))
            for ai, a in enumerate((1, -1)):
                pa = _embed(projector_of(alice_basis.bloch, a).matrix, i)
                if j is None:
                    marginal = expectation(cs.state, pa)
                    cell[ai, 0] = marginal / 2.0
                    cell[ai, 1] = marginal / 2.0
                    continue
                for bi, b in enumerate((1, -1)):
                    pb = _embed(projector_of(bob_basis.bloch, b).matrix, j)
                    cell[ai, bi] = expectation(cs.state, (pa @ pb + pb @ pa) / 2.0)
            table[(alice_basis, bob_basis)] = cell
    return table


def cheat_round_outcomes(
    cs: CheatState,
    alice_setting: Basis,
    bob_setting: Basis,
    rng: np.random.Generator,
) -> tuple[int, int, bool]:
    """Sample one cheat-state round.

    Returns Alice's outcome, Bob's outcome, and the flag that the supplier
    knows Alice's bit (always true: the state is a classical mixture whose
    label the supplier retains).
    """
    table = cheat_joint_probabilities("".join(b.value for b in cs.basis_pair), cs.policy)
    try:
        cell = table[(alice_setting, bob_setting)]
    except KeyError as exc:
        raise ValueError(
            f"settings ({alice_setting}, {bob_setting}) are outside the device wiring"
        ) from exc
    flat = cell.reshape(-1)
    index = int(rng.choice(4, p=flat))
    a = 1 - 2 * (index // 2)
    b = 1 - 2 * (index % 2)
    return a, b, True


@dataclass(frozen=True)
class ChannelAttack:
    """Probe-coupling unitary at interaction angle theta, on qubit x probe."""

    theta: float
    unitary: np.ndarray


def channel_unitary(theta: float) -> ChannelAttack:
    """Partial-swap interaction: |00> -> |00>, |10> -> cos|10> + sin|01>.

    The action on |01> and |11> is not constrained by a probe starting in
    |0>; it is completed as the rotation |01> -> cos|01> - sin|10>,
    |11> -> |11>, the simplest unitary completion.
    """
    if not 0.0 <= theta <= math.pi / 2:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    u = np.eye(4, dtype=complex)
    u[1, 1] = c
    u[2, 1] = -s
    u[1, 2] = s
    u[2, 2] = c
    if np.max(np.abs(u.conj().T @ u - np.eye(4))) > UNITARITY_ATOL:
        raise AssertionError("channel unitary failed unitarity check")
    return ChannelAttack(theta, u)


def channel_joint_state(psi: np.ndarray, theta: float) -> DensityMatrix:
    """Joint qubit-probe state U (psi x |0>) for a pure input qubit."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (2,):
        raise ValueError("psi must be a single-qubit statevector")
    attack = channel_unitary(theta)
    joint = attack.unitary @ np.kron(psi, np.array([1.0, 0.0], dtype=complex))
    return DensityMatrix.pure(joint)


def apply_channel_attack(psi: np.ndarray, theta: float) -> tuple[DensityMatrix, DensityMatrix]:
    """States left with the receiver and with the attacker's probe.

    The probe starts in |0>; the returned pair is (transmitted-qubit
    marginal, probe marginal) of U (psi x |0>).
    """
    joint = channel_joint_state(psi, theta)
    bob = partial_trace(joint, [2, 2], keep=[0])
    eve = partial_trace(joint, [2, 2], keep=[1])
    return bob, eve


def prepared_state(basis: Basis, bit: int) -> np.ndarray:
    """Statevector for bit 0 -> +1 eigenstate, bit 1 -> -1 eigenstate of `basis`."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    return eigenstate_of(basis.bloch, 1 - 2 * bit)


def eve_optimal_probe_basis(announced_basis: Basis) -> BlochVector:
    """Probe measurement direction maximizing discrimination of the probe states.

    The probe states for the two bit values differ only in the sign of their
    coherence in the announced basis, so the optimal projective measurement
    is along that same basis direction.
    """
    if announced_basis is Basis.X:
        return X_DIRECTION
    if announced_basis is Basis.Y:
        return Y_DIRECTION
    raise ValueError(f"announcement must be X or Y, got {announced_basis}")
