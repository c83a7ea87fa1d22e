"""Monte Carlo simulation of the LG-BB84 rounds, the plain BB84 baseline,
and the pure sequential-measurement protocol.

The bulk simulator is vectorized and chunked: rounds are processed in
fixed-size blocks of 65536, each block drawing from its own counter-based
substream derived from (seed, block index). Blocks are independent and the
per-block tallies are integers merged by addition, so results are
bit-identical for any worker count and reproducible from the seed alone.

Outcome distributions are precomputed once per attack configuration from
the exact quantum model (channel-attacked states for legitimate rounds,
the sixteen-dimensional cheat state for device-attack rounds); sampling
then only touches the cached tables.
"""

from __future__ import annotations

import enum
import functools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from . import temporal
from .attacks import (
    Basis,
    CheatPolicy,
    CheatState,
    build_cheat_state,
    channel_joint_state,
    cheat_joint_probabilities,
    cheat_round_outcomes,
    prepared_state,
)
from .qmath import (
    BlochVector,
    DensityMatrix,
    eigenstate_of,
    expectation,
    luders_update,
    partial_trace,
    projector_of,
    tensor,
)
from .temporal import CorrelationTable, SettingsQuad, lgi_test_quad

CHUNK_ROUNDS = 1 << 16

ALICE_BASES = (Basis.X, Basis.Y)
BOB_BASES = (Basis.X, Basis.Y, Basis.M_PLUS, Basis.M_MINUS)
LGI_QUAD_KEYS = (("X", "M+"), ("X", "M-"), ("Y", "M+"), ("Y", "M-"))


class RoundKind(enum.Enum):
    KEY = "key"
    LGI_TEST = "lgi_test"
    DISCARD = "discard"


class AttackBranch(enum.Enum):
    LEGIT = "legit"
    CHEAT = "cheat"


@dataclass(frozen=True)
class AttackConfig:
    """Channel angle, device-attack fraction and cheat-device wiring policy."""

    theta: float = 0.0
    cheat_fraction: float = 0.0
    cheat_policy: CheatPolicy = CheatPolicy.UNWIRED_RANDOM

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= math.pi / 2:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta!r}")
        if not 0.0 <= self.cheat_fraction <= 1.0:
            raise ValueError(f"cheat_fraction must lie in [0, 1], got {self.cheat_fraction!r}")


@dataclass(frozen=True)
class ProtocolConfig:
    rounds: int = 100_000
    attack: AttackConfig = AttackConfig()
    bob_basis_weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    seed: int = 0
    disclose_fraction: float = 1.0

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        weights = tuple(float(w) for w in self.bob_basis_weights)
        if len(weights) != 4 or any(w < 0 for w in weights):
            raise ValueError("bob_basis_weights must be four non-negative numbers")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"bob_basis_weights must sum to 1, got {sum(weights)!r}")
        object.__setattr__(self, "bob_basis_weights", weights)
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0.0 < self.disclose_fraction <= 1.0:
            raise ValueError("disclose_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class RoundRecord:
    alice_basis: Basis
    alice_bit: int
    bob_basis: Basis
    bob_outcome: int
    round_kind: RoundKind
    attack_branch: AttackBranch
    eve_bit_known: bool
    eve_guess: int | None
    disclosed: bool = False


@dataclass(frozen=True)
class SimulationSummary:
    """Aggregated tallies and derived statistics of one simulation run."""

    rounds: int
    theta: float
    cheat_fraction: float
    cheat_policy: str
    seed: int
    n_key: int
    n_lgi: int
    n_discard: int
    n_disclosed: int
    n_key_errors_disclosed: int
    n_key_errors_total: int
    e_obs: float | None
    e_obs_se: float | None
    lambda_obs: float | None
    lambda_obs_se: float | None
    eve_agreement: float | None
    matched_agreement: float | None
    mismatched_agreement: float | None
    lgi_counts: CorrelationTable

    def to_dict(self) -> dict:
        counts = {
            f"{a}|{b}": [[int(v) for v in row] for row in cell]
            for (a, b), cell in self.lgi_counts.counts.items()
        }
        return {
            "rounds": self.rounds,
            "theta": self.theta,
            "f": self.cheat_fraction,
            "policy": self.cheat_policy,
            "seed": self.seed,
            "n_key": self.n_key,
            "n_lgi": self.n_lgi,
            "n_discard": self.n_discard,
            "n_disclosed": self.n_disclosed,
            "n_key_errors_disclosed": self.n_key_errors_disclosed,
            "n_key_errors_total": self.n_key_errors_total,
            "e_obs": self.e_obs,
            "e_obs_se": self.e_obs_se,
            "lambda_obs": self.lambda_obs,
            "lambda_obs_se": self.lambda_obs_se,
            "eve_agreement": self.eve_agreement,
            "matched_agreement": self.matched_agreement,
            "mismatched_agreement": self.mismatched_agreement,
            "lgi_counts": counts,
        }


# ---------------------------------------------------------------------------
# Outcome tables (exact quantum model, cached per attack configuration)
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _legit_tables(theta: float, alice_labels: tuple[str, ...], bob_labels: tuple[str, ...]):
    """Joint receiver/probe outcome distributions for legitimate rounds.

    Returns (probs, cum) with probs[a_basis, a_bit, bob_basis, category]
    where category = 2*(receiver outcome is -1) + (probe outcome is -1).
    The probe is measured in the announced (preparation) basis.
    """
    alice_bases = tuple(Basis(lbl) for lbl in alice_labels)
    bob_bases = tuple(Basis(lbl) for lbl in bob_labels)
    probs = np.zeros((len(alice_bases), 2, len(bob_bases), 4))
    for ai, a_basis in enumerate(alice_bases):
        eve_dir = a_basis.bloch
        for bit in (0, 1):
            joint = channel_joint_state(prepared_state(a_basis, bit), theta)
            for mi, bob_basis in enumerate(bob_bases):
                for b_idx, b in enumerate((1, -1)):
                    pb = projector_of(bob_basis.bloch, b).matrix
                    for e_idx, e in enumerate((1, -1)):
                        pe = projector_of(eve_dir, e).matrix
                        probs[ai, bit, mi, 2 * b_idx + e_idx] = expectation(
                            joint, tensor(pb, pe)
                        )
    return probs, np.cumsum(probs, axis=-1)


@functools.lru_cache(maxsize=None)
def _cheat_tables(basis_pair: str, policy: CheatPolicy, bob_labels: tuple[str, ...]):
    """Per-hidden-label outcome probabilities for cheat rounds.

    Returns pb_plus[bob_basis, lam] = P(receiver outcome +1) where
    lam = 2*(pair-1 label is -1) + (pair-2 label is -1). Alice's outcome is
    the hidden label of the pair her announced basis is wired to, so only
    the receiver side needs a table.
    """
    cs = build_cheat_state(basis_pair, policy)
    bob_bases = tuple(Basis(lbl) for lbl in bob_labels)
    pb_plus = np.zeros((len(bob_bases), 4))
    pair_bases = cs.basis_pair
    for mi, bob_basis in enumerate(bob_bases):
        particle = cs.bob_wiring[bob_basis]
        for lam in range(4):
            signs = (1 - 2 * (lam >> 1), 1 - 2 * (lam & 1))
            if particle is None:
                pb_plus[mi, lam] = 0.5
                continue
            pair_index = 0 if particle == 1 else 1
            held = DensityMatrix.pure(
                eigenstate_of(pair_bases[pair_index].bloch, signs[pair_index])
            )
            pb_plus[mi, lam] = expectation(held, projector_of(bob_basis.bloch, 1).matrix)
    return pb_plus


@functools.lru_cache(maxsize=None)
def _cheat_state_cached(basis_pair: str, policy: CheatPolicy) -> CheatState:
    return build_cheat_state(basis_pair, policy)


def exact_lgi_table(
    theta: float,
    cheat_fraction: float = 0.0,
    policy: CheatPolicy = CheatPolicy.UNWIRED_RANDOM,
) -> CorrelationTable:
    """Exact joint probabilities of the four inequality-test setting pairs.

    Computed from the quantum model: channel-attacked receiver states for
    the legitimate branch, the cheat-state joint table for the device-attack
    branch, mixed with weight cheat_fraction.
    """
    cheat = cheat_joint_probabilities("XY", policy)
    cells: dict[tuple[str, str], np.ndarray] = {}
    for a_basis in ALICE_BASES:
        for m_basis in (Basis.M_PLUS, Basis.M_MINUS):
            cell = np.zeros((2, 2))
            for bit in (0, 1):
                joint = channel_joint_state(prepared_state(a_basis, bit), theta)
                bob_state = partial_trace(joint, [2, 2], keep=[0])
                for b_idx, b in enumerate((1, -1)):
                    p_b = expectation(bob_state, projector_of(m_basis.bloch, b).matrix)
                    cell[bit, b_idx] = 0.5 * p_b
            mixed = (1.0 - cheat_fraction) * cell + cheat_fraction * cheat[(a_basis, m_basis)]
            cells[(a_basis.label, m_basis.label)] = mixed
    return CorrelationTable(cells)


# ---------------------------------------------------------------------------
# Single-round reference path
# ---------------------------------------------------------------------------


def _classify(alice_basis: Basis, bob_basis: Basis) -> RoundKind:
    if bob_basis in (Basis.M_PLUS, Basis.M_MINUS):
        return RoundKind.LGI_TEST
    if bob_basis is alice_basis:
        return RoundKind.KEY
    return RoundKind.DISCARD


def run_round(cfg: ProtocolConfig, rng: np.random.Generator) -> RoundRecord:
    """Simulate a single LG-BB84 round; readable reference for the bulk path."""
    attack = cfg.attack
    is_cheat = bool(rng.random() < attack.cheat_fraction)
    alice_basis = ALICE_BASES[int(rng.integers(2))]
    intended_bit = int(rng.integers(2))
    cum = np.cumsum(cfg.bob_basis_weights)
    bob_basis = BOB_BASES[int(np.searchsorted(cum, rng.random(), side="right"))]

    if is_cheat:
        cs = _cheat_state_cached("XY", attack.cheat_policy)
        a, b, eve_knows = cheat_round_outcomes(cs, alice_basis, bob_basis, rng)
        alice_bit = (1 - a) // 2
        eve_guess = alice_bit
    else:
        probs, _ = _legit_tables(
            attack.theta,
            tuple(x.label for x in ALICE_BASES),
            tuple(x.label for x in BOB_BASES),
        )
        row = probs[ALICE_BASES.index(alice_basis), intended_bit, BOB_BASES.index(bob_basis)]
        category = int(rng.choice(4, p=row / row.sum()))
        b = 1 - 2 * (category >> 1)
        eve_sign = 1 - 2 * (category & 1)
        alice_bit = intended_bit
        eve_guess = (1 - eve_sign) // 2
        eve_knows = False

    kind = _classify(alice_basis, bob_basis)
    disclosed = kind is RoundKind.KEY and bool(rng.random() < cfg.disclose_fraction)
    return RoundRecord(
        alice_basis=alice_basis,
        alice_bit=alice_bit,
        bob_basis=bob_basis,
        bob_outcome=b,
        round_kind=kind,
        attack_branch=AttackBranch.CHEAT if is_cheat else AttackBranch.LEGIT,
        eve_bit_known=eve_knows,
        eve_guess=eve_guess,
        disclosed=disclosed,
    )


def sift(
    records: Iterable[RoundRecord],
) -> tuple[list[tuple[int, int]], CorrelationTable, list[RoundRecord]]:
    """Classify completed rounds into raw key pairs, test tallies and discards."""
    key_pairs: list[tuple[int, int]] = []
    discards: list[RoundRecord] = []
    cells = {key: np.zeros((2, 2)) for key in LGI_QUAD_KEYS}
    for record in records:
        kind = _classify(record.alice_basis, record.bob_basis)
        if kind is not record.round_kind:
            raise ValueError("round record is inconsistently classified")
        bob_bit = (1 - record.bob_outcome) // 2
        if kind is RoundKind.KEY:
            key_pairs.append((record.alice_bit, bob_bit))
        elif kind is RoundKind.LGI_TEST:
            key = (record.alice_basis.label, record.bob_basis.label)
            cells[key][record.alice_bit, bob_bit] += 1
        else:
            discards.append(record)
    return key_pairs, CorrelationTable(cells), discards


def estimate_lambda(table: CorrelationTable) -> tuple[float, float]:
    """Inequality estimate from test tallies; the (Y, M-) correlator enters negatively."""
    return temporal.lgi_from_counts(table, LGI_QUAD_KEYS)


# ---------------------------------------------------------------------------
# Vectorized bulk simulation
# ---------------------------------------------------------------------------


@dataclass
class _Tally:
    n_key: int = 0
    n_lgi: int = 0
    n_discard: int = 0
    n_disclosed: int = 0
    n_err_disclosed: int = 0
    n_err_total: int = 0
    n_eve_correct: int = 0
    n_discard_agree: int = 0
    lgi_counts: np.ndarray = field(default_factory=lambda: np.zeros(16, dtype=np.int64))

    def merge(self, other: "_Tally") -> None:
        self.n_key += other.n_key
        self.n_lgi += other.n_lgi
        self.n_discard += other.n_discard
        self.n_disclosed += other.n_disclosed
        self.n_err_disclosed += other.n_err_disclosed
        self.n_err_total += other.n_err_total
        self.n_eve_correct += other.n_eve_correct
        self.n_discard_agree += other.n_discard_agree
        self.lgi_counts += other.lgi_counts


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk_index])))


def _simulate_chunk(
    cfg: ProtocolConfig, chunk_index: int, count: int, keep_rows: bool
) -> tuple[_Tally, dict | None]:
    attack = cfg.attack
    rng = _chunk_rng(cfg.seed, chunk_index)

    # Fixed draw order; every round consumes the same draws on every path.
    u_branch = rng.random(count)
    a_basis = rng.integers(0, 2, count)
    a_bit = rng.integers(0, 2, count)
    u_bob = rng.random(count)
    lam = rng.integers(0, 4, count)
    u_out = rng.random(count)
    u_disc = rng.random(count)

    cheat = u_branch < attack.cheat_fraction
    bob = np.searchsorted(np.cumsum(cfg.bob_basis_weights), u_bob, side="right")
    bob = np.minimum(bob, 3)

    _, legit_cum = _legit_tables(
        attack.theta,
        tuple(x.label for x in ALICE_BASES),
        tuple(x.label for x in BOB_BASES),
    )
    cum_rows = legit_cum[a_basis, a_bit, bob]
    category = np.minimum((u_out[:, None] >= cum_rows).sum(axis=1), 3)
    b_legit = 1 - 2 * ((category >> 1) & 1)
    e_sign = 1 - 2 * (category & 1)

    pb_plus = _cheat_tables("XY", attack.cheat_policy, tuple(x.label for x in BOB_BASES))
    lam1 = 1 - 2 * ((lam >> 1) & 1)
    lam2 = 1 - 2 * (lam & 1)
    a_cheat_sign = np.where(a_basis == 0, lam1, lam2)
    b_cheat = np.where(u_out < pb_plus[bob, lam], 1, -1)

    b = np.where(cheat, b_cheat, b_legit)
    alice_bit = np.where(cheat, (1 - a_cheat_sign) // 2, a_bit)
    eve_guess = np.where(cheat, alice_bit, (1 - e_sign) // 2)
    bob_bit = (1 - b) // 2

    is_m = bob >= 2
    is_key = ~is_m & (bob == a_basis)
    is_discard = ~is_m & (bob != a_basis)
    err = bob_bit != alice_bit
    disclosed = is_key & (u_disc < cfg.disclose_fraction)

    tally = _Tally()
    tally.n_key = int(np.count_nonzero(is_key))
    tally.n_lgi = int(np.count_nonzero(is_m))
    tally.n_discard = int(np.count_nonzero(is_discard))
    tally.n_disclosed = int(np.count_nonzero(disclosed))
    tally.n_err_disclosed = int(np.count_nonzero(disclosed & err))
    tally.n_err_total = int(np.count_nonzero(is_key & err))
    tally.n_eve_correct = int(np.count_nonzero(is_key & (eve_guess == alice_bit)))
    tally.n_discard_agree = int(np.count_nonzero(is_discard & ~err))
    if tally.n_lgi:
        cell_index = a_basis[is_m] * 8 + (bob[is_m] - 2) * 4 + alice_bit[is_m] * 2 + bob_bit[is_m]
        tally.lgi_counts = np.bincount(cell_index, minlength=16).astype(np.int64)

    rows = None
    if keep_rows:
        rows = {
            "alice_basis": a_basis,
            "alice_bit": alice_bit,
            "bob_basis": bob,
            "bob_outcome": b,
            "cheat": cheat,
            "is_key": is_key,
            "is_m": is_m,
            "eve_guess": eve_guess,
            "disclosed": disclosed,
        }
    return tally, rows


def _write_transcript_rows(stream: IO[str], start: int, rows: dict) -> None:
    kinds = np.where(rows["is_m"], "lgi_test", np.where(rows["is_key"], "key", "discard"))
    for i in range(len(rows["alice_basis"])):
        record = {
            "round": start + i,
            "alice_basis": ALICE_BASES[rows["alice_basis"][i]].label,
            "alice_bit": int(rows["alice_bit"][i]),
            "bob_basis": BOB_BASES[rows["bob_basis"][i]].label,
            "bob_outcome": int(rows["bob_outcome"][i]),
            "round_kind": str(kinds[i]),
            "attack_branch": "cheat" if rows["cheat"][i] else "legit",
            "eve_bit_known": bool(rows["cheat"][i]),
            "eve_guess": int(rows["eve_guess"][i]),
            "disclosed": bool(rows["disclosed"][i]),
        }
        stream.write(json.dumps(record, sort_keys=True) + "\n")


def _summary_from_tally(cfg: ProtocolConfig, tally: _Tally) -> SimulationSummary:
    e_obs = e_se = None
    if tally.n_disclosed > 0:
        e_obs = tally.n_err_disclosed / tally.n_disclosed
        e_se = math.sqrt(max(e_obs * (1.0 - e_obs), 0.0) / tally.n_disclosed)

    cells = {
        key: tally.lgi_counts[ai * 8 + mi * 4 : ai * 8 + mi * 4 + 4].reshape(2, 2)
        for ai in range(2)
        for mi, key in (
            (0, (ALICE_BASES[ai].label, "M+")),
            (1, (ALICE_BASES[ai].label, "M-")),
        )
    }
    table = CorrelationTable(cells)
    try:
        lambda_obs, lambda_se = estimate_lambda(table)
    except temporal.InsufficientStatisticsError:
        lambda_obs = lambda_se = None

    return SimulationSummary(
        rounds=cfg.rounds,
        theta=cfg.attack.theta,
        cheat_fraction=cfg.attack.cheat_fraction,
        cheat_policy=cfg.attack.cheat_policy.value,
        seed=cfg.seed,
        n_key=tally.n_key,
        n_lgi=tally.n_lgi,
        n_discard=tally.n_discard,
        n_disclosed=tally.n_disclosed,
        n_key_errors_disclosed=tally.n_err_disclosed,
        n_key_errors_total=tally.n_err_total,
        e_obs=e_obs,
        e_obs_se=e_se,
        lambda_obs=lambda_obs,
        lambda_obs_se=lambda_se,
        eve_agreement=(tally.n_eve_correct / tally.n_key) if tally.n_key else None,
        matched_agreement=(1.0 - tally.n_err_total / tally.n_key) if tally.n_key else None,
        mismatched_agreement=(
            tally.n_discard_agree / tally.n_discard if tally.n_discard else None
        ),
        lgi_counts=table,
    )


def run_simulation(
    cfg: ProtocolConfig,
    workers: int = 1,
    transcript_stream: IO[str] | None = None,
) -> SimulationSummary:
    """Run the full protocol and aggregate a summary.

    Deterministic for a fixed (cfg, seed) regardless of `workers`; the
    optional transcript stream receives one JSON object per round and does
    not perturb the sampled statistics.
    """
    chunks = [
        (index, start, min(CHUNK_ROUNDS, cfg.rounds - start))
        for index, start in enumerate(range(0, cfg.rounds, CHUNK_ROUNDS))
    ]
    keep_rows = transcript_stream is not None

    def work(chunk):
        index, _, count = chunk
        return _simulate_chunk(cfg, index, count, keep_rows)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(chunk) for chunk in chunks]

    total = _Tally()
    for (index, start, _), (tally, rows) in zip(chunks, results):
        total.merge(tally)
        if keep_rows and rows is not None:
            _write_transcript_rows(transcript_stream, start, rows)
    return _summary_from_tally(cfg, total)


# ---------------------------------------------------------------------------
# Plain BB84 baseline (no M settings)
# ---------------------------------------------------------------------------


def bb84_baseline(
    cfg: ProtocolConfig, basis_pair: str = "ZX", workers: int = 1
) -> SimulationSummary:
    """Plain BB84 with Bob restricted to the two encoding bases.

    Legitimate rounds reproduce P(a=b | matched) = 1 - e_ab and
    P(a=b | mismatched) = 1/2; cheat rounds reproduce them exactly while the
    supplier knows every matched-basis bit, which is the baseline's
    device-attack insecurity. No inequality statistics exist here, so
    lambda_obs is None.
    """
    cs = _cheat_state_cached(basis_pair, CheatPolicy.UNWIRED_RANDOM)
    pair_labels = tuple(b.label for b in cs.basis_pair)

    chunks = [
        (index, min(CHUNK_ROUNDS, cfg.rounds - start))
        for index, start in enumerate(range(0, cfg.rounds, CHUNK_ROUNDS))
    ]

    def work(chunk):
        index, count = chunk
        rng = _chunk_rng(cfg.seed, index)
        u_branch = rng.random(count)
        a_basis = rng.integers(0, 2, count)
        a_bit = rng.integers(0, 2, count)
        bob = rng.integers(0, 2, count)
        lam = rng.integers(0, 4, count)
        u_out = rng.random(count)
        u_disc = rng.random(count)

        cheat = u_branch < cfg.attack.cheat_fraction
        _, legit_cum = _legit_tables(cfg.attack.theta, pair_labels, pair_labels)
        cum_rows = legit_cum[a_basis, a_bit, bob]
        category = np.minimum((u_out[:, None] >= cum_rows).sum(axis=1), 3)
        b_legit = 1 - 2 * ((category >> 1) & 1)
        e_sign = 1 - 2 * (category & 1)

        lam1 = 1 - 2 * ((lam >> 1) & 1)
        lam2 = 1 - 2 * (lam & 1)
        a_cheat_sign = np.where(a_basis == 0, lam1, lam2)
        b_cheat_sign = np.where(bob == 0, lam1, lam2)

        b = np.where(cheat, b_cheat_sign, b_legit)
        alice_bit = np.where(cheat, (1 - a_cheat_sign) // 2, a_bit)
        eve_guess = np.where(cheat, alice_bit, (1 - e_sign) // 2)
        bob_bit = (1 - b) // 2

        is_key = bob == a_basis
        err = bob_bit != alice_bit
        disclosed = is_key & (u_disc < cfg.disclose_fraction)

        tally = _Tally()
        tally.n_key = int(np.count_nonzero(is_key))
        tally.n_discard = int(np.count_nonzero(~is_key))
        tally.n_disclosed = int(np.count_nonzero(disclosed))
        tally.n_err_disclosed = int(np.count_nonzero(disclosed & err))
        tally.n_err_total = int(np.count_nonzero(is_key & err))
        tally.n_eve_correct = int(np.count_nonzero(is_key & (eve_guess == alice_bit)))
        tally.n_discard_agree = int(np.count_nonzero(~is_key & ~err))
        return tally

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(work, chunks))
    else:
        tallies = [work(chunk) for chunk in chunks]

    total = _Tally()
    for tally in tallies:
        total.merge(tally)

    summary = _summary_from_tally(cfg, total)
    # No M rounds: drop the inequality fields that _summary_from_tally zeroed.
    return SimulationSummary(
        **{
            **summary.__dict__,
            "lambda_obs": None,
            "lambda_obs_se": None,
            "lgi_counts": CorrelationTable({}),
        }
    )


# ---------------------------------------------------------------------------
# Pure sequential-measurement protocol (key and test from the same rounds)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LgProtocolConfig:
    """Configuration for the sequential-measurement comparison protocol."""

    rounds: int = 10_000
    settings: SettingsQuad = field(default_factory=lgi_test_quad)
    eve_direction: BlochVector | None = None
    seed: int = 0


@dataclass(frozen=True)
class LgProtocolSummary:
    rounds: int
    agreement: float
    lambda_obs: float
    lambda_obs_se: float
    counts: CorrelationTable


def _measure(state: DensityMatrix, direction: BlochVector, rng: np.random.Generator):
    plus = projector_of(direction, 1)
    p_plus = float(np.trace(plus.matrix @ state.matrix @ plus.matrix).real)
    outcome = 1 if rng.random() < p_plus else -1
    _, post = luders_update(state, projector_of(direction, outcome))
    return outcome, post


def lg_protocol_round(cfg: LgProtocolConfig, rng: np.random.Generator) -> RoundRecord:
    """One round of the sequential protocol: measure, optionally intercept, measure.

    Alice measures x or x_prime on a maximally mixed qubit, an optional
    intermediate measurement models the interceptor, then Bob measures y or
    y_prime. Bob flips his outcome when the (x_prime, y_prime) pair was used;
    every round contributes to the key. Labels reuse the protocol bases:
    Alice's choices map to X/Y, Bob's to M+/M-.
    """
    settings = cfg.settings
    alice_choice = int(rng.integers(2))
    bob_choice = int(rng.integers(2))
    state = DensityMatrix.maximally_mixed(2)

    alice_dir = (settings.x, settings.x_prime)[alice_choice]
    bob_dir = (settings.y, settings.y_prime)[bob_choice]

    a, state = _measure(state, alice_dir, rng)
    eve_guess: int | None = None
    if cfg.eve_direction is not None:
        e, state = _measure(state, cfg.eve_direction, rng)
        eve_guess = (1 - e) // 2
    b, _ = _measure(state, bob_dir, rng)

    reconciled = -b if (alice_choice, bob_choice) == (1, 1) else b
    return RoundRecord(
        alice_basis=(Basis.X, Basis.Y)[alice_choice],
        alice_bit=(1 - a) // 2,
        bob_basis=(Basis.M_PLUS, Basis.M_MINUS)[bob_choice],
        bob_outcome=reconciled,
        round_kind=RoundKind.KEY,
        attack_branch=AttackBranch.LEGIT,
        eve_bit_known=False,
        eve_guess=eve_guess,
        disclosed=False,
    )


def run_lg_protocol(cfg: LgProtocolConfig) -> LgProtocolSummary:
    """Aggregate the sequential protocol: reconciled agreement and raw test value."""
    rng = _chunk_rng(cfg.seed, 0)
    cells = {key: np.zeros((2, 2)) for key in LGI_QUAD_KEYS}
    agree = 0
    for _ in range(cfg.rounds):
        record = lg_protocol_round(cfg, rng)
        bob_bit = (1 - record.bob_outcome) // 2
        if bob_bit == record.alice_bit:
            agree += 1
        flip = record.alice_basis is Basis.Y and record.bob_basis is Basis.M_MINUS
        raw_bit = 1 - bob_bit if flip else bob_bit
        cells[(record.alice_basis.label, record.bob_basis.label)][record.alice_bit, raw_bit] += 1
    table = CorrelationTable(cells)
    lambda_obs, lambda_se = temporal.lgi_from_counts(table, LGI_QUAD_KEYS)
    return LgProtocolSummary(cfg.rounds, agree / cfg.rounds, lambda_obs, lambda_se, table)
