"""Sequential (temporal) measurement statistics on a single qubit.

Implements two-time and three-time correlators by chained projective
updates, the CHSH-form temporal inequality built from them, the
weakened monogamy relations for an eavesdropper measuring between the
two legitimate parties, and estimators that recover the inequality
value from counted data.

Every correlator is computed twice: once through the explicit
measurement chain and once through its closed dot-product form. The two
routes must agree to 1e-12 or the call fails loudly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .qmath import (
    IMPOSSIBLE_OUTCOME_PROB,
    BlochVector,
    DensityMatrix,
    bloch_to_observable,
    expectation,
    luders_update,
    projector_of,
)

ROUTE_AGREEMENT_ATOL = 1e-12
TSIRELSON = 2.0 * math.sqrt(2.0)
SEQUENTIAL_MONOGAMY_BOUND = 3.0 * math.sqrt(2.0)
ANCHORED_MONOGAMY_BOUND = 4.0 * math.sqrt(2.0)
NO_SIGNALING_BOUND = 4.0


class InsufficientStatisticsError(ValueError):
    """Raised when an empirical estimate is requested from an empty cell."""


@dataclass(frozen=True)
class SettingsPair:
    """One party's two measurement directions."""

    first: BlochVector
    second: BlochVector


@dataclass(frozen=True)
class SettingsQuad:
    """First-time settings (x, x_prime) and second-time settings (y, y_prime)."""

    x: BlochVector
    x_prime: BlochVector
    y: BlochVector
    y_prime: BlochVector

    @property
    def first_pair(self) -> SettingsPair:
        return SettingsPair(self.x, self.x_prime)

    @property
    def second_pair(self) -> SettingsPair:
        return SettingsPair(self.y, self.y_prime)


@dataclass(frozen=True)
class CorrelationTable:
    """Per-setting-pair joint outcome tallies.

    `counts` maps a (first_label, second_label) setting pair to a 2x2 array
    indexed by [first_outcome, second_outcome] with index 0 meaning +1 and
    index 1 meaning -1. Entries may be non-negative integer counts or
    probabilities; probability tables must sum to 1 per pair.
    """

    counts: Mapping[tuple[str, str], np.ndarray]

    def __post_init__(self) -> None:
        frozen: dict[tuple[str, str], np.ndarray] = {}
        for pair, cell in self.counts.items():
            arr = np.array(cell, dtype=float, copy=True)
            if arr.shape != (2, 2):
                raise ValueError(f"cell for {pair} must be 2x2, got {arr.shape}")
            if np.any(arr < 0):
                raise ValueError(f"cell for {pair} has negative entries")
            total = arr.sum()
            is_integer = np.allclose(arr, np.round(arr))
            if not is_integer and abs(total - 1.0) > 1e-9:
                raise ValueError(f"probability cell for {pair} must sum to 1, got {total!r}")
            arr.setflags(write=False)
            frozen[pair] = arr
        object.__setattr__(self, "counts", frozen)

    def total(self, pair: tuple[str, str]) -> float:
        return float(self.counts[pair].sum())

    def correlator(self, pair: tuple[str, str]) -> tuple[float, float]:
        """Empirical product correlator and its binomial standard error."""
        cell = self.counts[pair]
        n = cell.sum()
        if n <= 0:
            raise InsufficientStatisticsError(f"insufficient statistics for setting pair {pair}")
        value = (cell[0, 0] + cell[1, 1] - cell[0, 1] - cell[1, 0]) / n
        stderr = math.sqrt(max(1.0 - value**2, 0.0) / n)
        return float(value), stderr


def _check_routes(chain_value: float, closed_value: float, what: str) -> float:
    if abs(chain_value - closed_value) > ROUTE_AGREEMENT_ATOL:
        raise RuntimeError(
            f"{what}: measurement-chain value {chain_value!r} disagrees with "
            f"closed form {closed_value!r}"
        )
    return chain_value


def sequence_probability(
    rho: DensityMatrix,
    directions: Sequence[BlochVector],
    outcomes: Sequence[int],
) -> float:
    """Probability of an outcome sequence under chained projective measurements."""
    if len(directions) != len(outcomes):
        raise ValueError("directions and outcomes must have equal length")
    prob = 1.0
    state = rho
    for direction, outcome in zip(directions, outcomes):
        projector = projector_of(direction, outcome)
        step = float(np.trace(projector.matrix @ state.matrix @ projector.matrix).real)
        if step <= IMPOSSIBLE_OUTCOME_PROB:
            return 0.0
        step_prob, state = luders_update(state, projector)
        prob *= step_prob
    return prob


def seq_joint_prob(
    rho: DensityMatrix, x: BlochVector, y: BlochVector, alpha: int, beta: int
) -> float:
    """Joint probability of outcome alpha at t1 (along x) then beta at t2 (along y).

    Evaluated both as the projector chain Tr(P_y P_x rho P_x) and as the
    expanded form

        1/4 + (alpha/4) Tr(x rho) + (beta/8) Tr(y rho)
            + (beta/8) Tr(x y x rho) + (alpha beta / 8) Tr({x, y} rho).
    """
    if rho.dim != 2:
        raise ValueError("sequential statistics are defined on a single qubit")
    if alpha not in (1, -1) or beta not in (1, -1):
        raise ValueError("outcomes must be +1 or -1")
    chain = sequence_probability(rho, [x, y], [alpha, beta])

    ox = bloch_to_observable(x)
    oy = bloch_to_observable(y)
    anticommutator = ox @ oy + oy @ ox
    expanded = (
        0.25
        + (alpha / 4.0) * expectation(rho, ox)
        + (beta / 8.0) * expectation(rho, oy)
        + (beta / 8.0) * expectation(rho, ox @ oy @ ox)
        + (alpha * beta / 8.0) * expectation(rho, anticommutator)
    )
    return _check_routes(chain, expanded, "seq_joint_prob")


def temporal_correlator(rho: DensityMatrix, x: BlochVector, y: BlochVector) -> float:
    """Two-time correlator of sequential measurements, equal to x . y for any state."""
    summed = sum(
        alpha * beta * seq_joint_prob(rho, x, y, alpha, beta)
        for alpha in (1, -1)
        for beta in (1, -1)
    )
    return _check_routes(summed, x.dot(y), "temporal_correlator")


def bob_marginal(rho: DensityMatrix, x: BlochVector, y: BlochVector, beta: int) -> float:
    """Marginal probability of the second outcome, summed over the first.

    The result depends on the first measurement's direction x, which is what
    makes sequential correlations signaling.
    """
    summed = sum(seq_joint_prob(rho, x, y, alpha, beta) for alpha in (1, -1))
    ox = bloch_to_observable(x)
    oy = bloch_to_observable(y)
    closed = 0.5 + (beta / 4.0) * (expectation(rho, oy) + expectation(rho, ox @ oy @ ox))
    return _check_routes(summed, closed, "bob_marginal")


def lgi_value(rho: DensityMatrix, settings: SettingsQuad) -> float:
    """CHSH-form temporal inequality value |E(x,y) + E(x,y') + E(x',y) - E(x',y')|.

    Classically bounded by 2; quantum sequential measurements reach 2*sqrt(2).
    """
    value = (
        temporal_correlator(rho, settings.x, settings.y)
        + temporal_correlator(rho, settings.x, settings.y_prime)
        + temporal_correlator(rho, settings.x_prime, settings.y)
        - temporal_correlator(rho, settings.x_prime, settings.y_prime)
    )
    return abs(value)


def three_time_correlator(
    rho: DensityMatrix, x: BlochVector, e: BlochVector, y: BlochVector
) -> float:
    """Correlator of the first and third of three chained measurements.

    The explicit sum over the 8 outcome triples factorizes to (x.e)(e.y):
    the intermediate projective measurement disentangles the third outcome
    from the first.
    """
    summed = 0.0
    for m1, m2, m3 in itertools.product((1, -1), repeat=3):
        summed += m1 * m3 * sequence_probability(rho, [x, e, y], [m1, m2, m3])
    return _check_routes(summed, x.dot(e) * e.dot(y), "three_time_correlator")


def three_time_correlator_averaged(
    rho: DensityMatrix, x: BlochVector, eve: SettingsPair, y: BlochVector
) -> float:
    """Three-time correlator with the intermediate direction drawn uniformly from a pair."""
    return 0.5 * (
        three_time_correlator(rho, x, eve.first, y)
        + three_time_correlator(rho, x, eve.second, y)
    )


@dataclass(frozen=True)
class SequentialMonogamy:
    lambda_ae: float
    lambda_ab: float
    lambda_ab_by_setting: tuple[float, float]

    @property
    def total(self) -> float:
        return self.lambda_ae + self.lambda_ab


@dataclass(frozen=True)
class AnchoredMonogamy:
    lambda_ae: float
    lambda_eb: float

    @property
    def total(self) -> float:
        return self.lambda_ae + self.lambda_eb


def _chsh_of(correlator, first: SettingsPair, second: SettingsPair) -> float:
    return abs(
        correlator(first.first, second.first)
        + correlator(first.first, second.second)
        + correlator(first.second, second.first)
        - correlator(first.second, second.second)
    )


def monogamy_sum_sequential(
    rho: DensityMatrix,
    alice: SettingsPair,
    eve: SettingsPair,
    bob: SettingsPair,
) -> SequentialMonogamy:
    """Inequality values for the measurement order Alice -> Eve -> Bob.

    lambda_ae uses the two-time correlators between Alice's and Eve's
    outcomes. lambda_ab uses the three-time correlators between Alice's and
    Bob's outcomes with Eve's setting marginalized uniformly over her two
    choices; the per-setting values are also reported.

    When Alice and Bob hold the coplanar pi/4-ladder test settings
    (`lgi_test_quad`), lambda_ae + lambda_ab <= 3*sqrt(2) for every choice
    of Eve's directions, which exceeds the no-signaling bound 4 that
    constrains spatial correlations.
    """
    lambda_ae = _chsh_of(lambda a, b: temporal_correlator(rho, a, b), alice, eve)
    lambda_ab = _chsh_of(
        lambda a, b: three_time_correlator_averaged(rho, a, eve, b), alice, bob
    )
    per_setting = tuple(
        _chsh_of(lambda a, b, e=e: three_time_correlator(rho, a, e, b), alice, bob)
        for e in (eve.first, eve.second)
    )
    return SequentialMonogamy(lambda_ae, lambda_ab, per_setting)


def anchored_monogamy_sum(
    rho: DensityMatrix,
    alice: SettingsPair,
    eve: SettingsPair,
    bob: SettingsPair,
) -> AnchoredMonogamy:
    """Inequality values anchored on the middle party.

    Both lambda_ae (Alice at t1 vs Eve at t1') and lambda_eb (Eve at t1' vs
    Bob at t2) are two-time sequential correlator combinations, each bounded
    by 2*sqrt(2), so the sum is bounded by 4*sqrt(2) and the bound is
    saturable.
    """

    def eve_bob_correlator(e: BlochVector, b: BlochVector) -> float:
        # The Eve-Bob marginal is averaged over Alice's outcomes; the two-time
        # correlator is state independent, so Alice's setting drops out. Use her
        # first setting and sum her outcomes through the explicit chain.
        summed = 0.0
        for m1, m2, m3 in itertools.product((1, -1), repeat=3):
            summed += m2 * m3 * sequence_probability(rho, [alice.first, e, b], [m1, m2, m3])
        return _check_routes(summed, e.dot(b), "eve_bob_correlator")

    lambda_ae = _chsh_of(lambda a, b: temporal_correlator(rho, a, b), alice, eve)
    lambda_eb = _chsh_of(eve_bob_correlator, eve, bob)
    return AnchoredMonogamy(lambda_ae, lambda_eb)


def lgi_from_counts(
    table: CorrelationTable, quad: Sequence[tuple[str, str]]
) -> tuple[float, float]:
    """Empirical inequality value and standard error from counted data.

    `quad` lists the four setting-pair keys in the order (x,y), (x,y'),
    (x',y), (x',y'); the last correlator enters with a negative sign. The
    standard error adds the four independent binomial errors in quadrature.
    """
    if len(quad) != 4:
        raise ValueError(f"expected 4 setting pairs, got {len(quad)}")
    signs = (1.0, 1.0, 1.0, -1.0)
    value = 0.0
    variance = 0.0
    for sign, pair in zip(signs, quad):
        if pair not in table.counts:
            raise InsufficientStatisticsError(f"insufficient statistics for setting pair {pair}")
        corr, stderr = table.correlator(pair)
        value += sign * corr
        variance += stderr**2
    return value, math.sqrt(variance)


# ---------------------------------------------------------------------------
# Canonical configurations and saturation searches
# ---------------------------------------------------------------------------


def lgi_test_quad() -> SettingsQuad:
    """Coplanar ladder x'=90deg, y=45deg, x=0deg, y'=-45deg: saturates 2*sqrt(2)."""
    return SettingsQuad(
        x=BlochVector.in_xy_plane(0.0),
        x_prime=BlochVector.in_xy_plane(math.pi / 2),
        y=BlochVector.in_xy_plane(math.pi / 4),
        y_prime=BlochVector.in_xy_plane(-math.pi / 4),
    )


def sequential_saturation_settings() -> tuple[SettingsPair, SettingsPair, SettingsPair]:
    """Regression fixture saturating the sequential bound 3*sqrt(2).

    Alice and Bob hold the pi/4-ladder test settings and Eve aligns her pair
    with Bob's (e = y, e' = y'); the resulting sum 3*sqrt(2) exceeds the
    no-signaling bound 4.
    """
    quad = lgi_test_quad()
    alice = quad.first_pair
    bob = quad.second_pair
    return alice, SettingsPair(bob.first, bob.second), bob


def anchored_saturation_settings() -> tuple[SettingsPair, SettingsPair, SettingsPair]:
    """Settings with both anchored pairs at Tsirelson configurations (sum 4*sqrt(2))."""
    alice = SettingsPair(BlochVector.in_xy_plane(0.0), BlochVector.in_xy_plane(math.pi / 2))
    eve = SettingsPair(
        BlochVector.in_xy_plane(math.pi / 4), BlochVector.in_xy_plane(-math.pi / 4)
    )
    bob = SettingsPair(BlochVector.in_xy_plane(0.0), BlochVector.in_xy_plane(math.pi / 2))
    return alice, eve, bob


def _unit_from_spherical(polar: float, azimuth: float) -> np.ndarray:
    s = math.sin(polar)
    return np.array([s * math.cos(azimuth), s * math.sin(azimuth), math.cos(polar)])


def _sequential_sum_fast(eve_vectors: np.ndarray) -> np.ndarray:
    """Vectorized lambda_ae + lambda_ab at the ladder test settings.

    `eve_vectors` has shape (n, 2, 3). Uses the closed dot-product forms of
    the correlators; the search result is re-verified through the
    measurement-chain route by the caller.
    """
    quad = lgi_test_quad()
    x, xp = quad.x.as_array(), quad.x_prime.as_array()
    y, yp = quad.y.as_array(), quad.y_prime.as_array()
    e1 = eve_vectors[:, 0, :]
    e2 = eve_vectors[:, 1, :]

    lam_ae = np.abs(e1 @ x + e2 @ x + e1 @ xp - e2 @ xp)

    def c3(a, b):
        return 0.5 * ((e1 @ a) * (e1 @ b) + (e2 @ a) * (e2 @ b))

    lam_ab = np.abs(c3(x, y) + c3(x, yp) + c3(xp, y) - c3(xp, yp))
    return lam_ae + lam_ab


def search_sequential_saturation(
    grid_step_deg: float = 10.0, seed: int = 0, refine_iterations: int = 4000
) -> tuple[float, SequentialMonogamy]:
    """Maximize the sequential sum over Eve's directions at the ladder settings.

    Coarse grid over Eve's two coplanar angles at `grid_step_deg`, followed by
    seeded random local refinement over the full sphere. Returns the best sum
    recomputed through the measurement-chain route along with its breakdown.
    """
    steps = int(round(360.0 / grid_step_deg))
    angles = np.arange(steps) * (2.0 * math.pi / steps)
    g1, g2 = np.meshgrid(angles, angles, indexing="ij")
    coarse = np.stack(
        [
            np.stack([np.cos(g1), np.sin(g1), np.zeros_like(g1)], axis=-1),
            np.stack([np.cos(g2), np.sin(g2), np.zeros_like(g2)], axis=-1),
        ],
        axis=-2,
    ).reshape(-1, 2, 3)
    sums = _sequential_sum_fast(coarse)
    best = coarse[int(np.argmax(sums))]
    best_value = float(sums.max())

    rng = np.random.default_rng(seed)
    step = math.radians(grid_step_deg)
    for iteration in range(refine_iterations):
        candidate = best.copy()
        row = int(rng.integers(2))
        candidate[row] = candidate[row] + step * rng.normal(size=3)
        candidate[row] /= np.linalg.norm(candidate[row])
        value = float(_sequential_sum_fast(candidate[np.newaxis])[0])
        if value > best_value:
            best_value, best = value, candidate
        if (iteration + 1) % 500 == 0:
            step *= 0.5

    quad = lgi_test_quad()
    eve = SettingsPair(BlochVector.from_array(best[0]), BlochVector.from_array(best[1]))
    result = monogamy_sum_sequential(
        DensityMatrix.maximally_mixed(2), quad.first_pair, eve, quad.second_pair
    )
    return result.total, result


def search_sequential_bound(samples: int, seed: int = 0) -> float:
    """Max sequential sum over random Eve directions at the ladder settings."""
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(samples, 2, 3))
    vectors /= np.linalg.norm(vectors, axis=2, keepdims=True)
    return float(_sequential_sum_fast(vectors).max())


def _anchored_sum_fast(vectors: np.ndarray) -> np.ndarray:
    """Vectorized lambda_ae + lambda_eb for configurations of shape (n, 6, 3)."""
    x, xp, e1, e2, y, yp = (vectors[:, k, :] for k in range(6))

    def d(a, b):
        return np.einsum("ij,ij->i", a, b)

    lam_ae = np.abs(d(x, e1) + d(x, e2) + d(xp, e1) - d(xp, e2))
    lam_eb = np.abs(d(e1, y) + d(e1, yp) + d(e2, y) - d(e2, yp))
    return lam_ae + lam_eb


def search_anchored_saturation(
    grid_step_deg: float = 10.0, seed: int = 0, refine_iterations: int = 4000
) -> tuple[float, AnchoredMonogamy]:
    """Maximize the anchored sum over all six directions.

    Coarse coplanar grid over Eve's relative angle with the outer parties'
    pairs placed at the parallelogram-optimal directions, then seeded random
    refinement of the full configuration. The best configuration is
    re-evaluated through the measurement-chain route.
    """
    steps = int(round(360.0 / grid_step_deg))
    best = None
    best_value = -1.0
    for k in range(steps):
        # Outer parties at angles 0 and phi, Eve bisecting them at half and
        # half - 90deg; phi = 90deg is the parallelogram optimum.
        phi = k * 2.0 * math.pi / steps
        half = phi / 2.0
        config = np.array(
            [
                _unit_from_spherical(math.pi / 2, 0.0),
                _unit_from_spherical(math.pi / 2, phi),
                _unit_from_spherical(math.pi / 2, half),
                _unit_from_spherical(math.pi / 2, half - math.pi / 2),
                _unit_from_spherical(math.pi / 2, 0.0),
                _unit_from_spherical(math.pi / 2, phi),
            ]
        )
        value = float(_anchored_sum_fast(config[np.newaxis])[0])
        if value > best_value:
            best_value, best = value, config

    rng = np.random.default_rng(seed)
    step = math.radians(grid_step_deg)
    for iteration in range(refine_iterations):
        candidate = best.copy()
        row = int(rng.integers(6))
        candidate[row] = candidate[row] + step * rng.normal(size=3)
        candidate[row] /= np.linalg.norm(candidate[row])
        value = float(_anchored_sum_fast(candidate[np.newaxis])[0])
        if value > best_value:
            best_value, best = value, candidate
        if (iteration + 1) % 500 == 0:
            step *= 0.5

    pairs = [
        SettingsPair(BlochVector.from_array(best[0]), BlochVector.from_array(best[1])),
        SettingsPair(BlochVector.from_array(best[2]), BlochVector.from_array(best[3])),
        SettingsPair(BlochVector.from_array(best[4]), BlochVector.from_array(best[5])),
    ]
    result = anchored_monogamy_sum(DensityMatrix.maximally_mixed(2), *pairs)
    return result.total, result


def search_anchored_bound(samples: int, seed: int = 0) -> float:
    """Max anchored sum over fully random six-direction configurations."""
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(samples, 6, 3))
    vectors /= np.linalg.norm(vectors, axis=2, keepdims=True)
    return float(_anchored_sum_fast(vectors).max())
