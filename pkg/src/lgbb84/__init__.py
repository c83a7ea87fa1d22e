"""LG-BB84: quantum key distribution with a temporal-inequality security check.

A simulator and analysis toolkit for a prepare-and-measure protocol whose
key generation follows BB84 while device attacks are detected through the
violation of a CHSH-form temporal inequality measured on mismatched-basis
rounds.
"""

__version__ = "0.1.0"

from .analysis import (
    InconsistentObservationsError,
    NoPositiveRateError,
    RatePoint,
    ThresholdPoint,
    binary_entropy,
    closed_form_rates,
    estimate_attack,
    fig2_data,
    key_rate,
    mutual_informations,
    projective_bob_eve_error,
    security_threshold,
)
from .attacks import (
    Basis,
    ChannelAttack,
    CheatPolicy,
    CheatState,
    apply_channel_attack,
    build_cheat_state,
    channel_unitary,
    cheat_round_outcomes,
    eve_optimal_probe_basis,
)
from .protocol import (
    AttackConfig,
    LgProtocolConfig,
    ProtocolConfig,
    RoundRecord,
    SimulationSummary,
    bb84_baseline,
    estimate_lambda,
    exact_lgi_table,
    lg_protocol_round,
    run_lg_protocol,
    run_round,
    run_simulation,
    sift,
)
from .qmath import (
    BlochVector,
    DensityMatrix,
    OutcomeImpossibleError,
    Projector,
    bloch_to_observable,
    expectation,
    luders_update,
    partial_trace,
    projector_of,
    tensor,
)
from .temporal import (
    CorrelationTable,
    InsufficientStatisticsError,
    SettingsPair,
    SettingsQuad,
    anchored_monogamy_sum,
    bob_marginal,
    lgi_from_counts,
    lgi_test_quad,
    lgi_value,
    monogamy_sum_sequential,
    seq_joint_prob,
    temporal_correlator,
    three_time_correlator,
)

__all__ = [name for name in dir() if not name.startswith("_")]
