"""Closed-form error rates, inequality values, mutual informations, the
one-way key rate, attack-parameter estimation and security thresholds.

The rate model follows the individual-attack analysis: a channel attack of
angle theta gives error rates

    e_ab = sin^2(theta/2)        between the legitimate parties,
    e_ae = (1 - sin theta)/2     attacker about the sender,
    e_be = (1 - sin 2theta)/2    attacker about the receiver,

and inequality values lgi_ab = 2*sqrt(2) cos(theta), lgi_ae =
2*sqrt(2) sin(theta). Mixing a fraction f of device-attack rounds scales
the observed error and inequality value by (1 - f) while handing the
attacker that fraction of bits outright.

Note on e_be: the model's (1 - sin 2theta)/2 overstates what the
attacker's same-basis probe measurement actually achieves (see
projective_bob_eve_error), which makes the resulting key rate
conservative; the reverse bound only binds at large theta either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

TSIRELSON = 2.0 * math.sqrt(2.0)

_RATE_IDENTITY_ATOL = 1e-15
_ROUND_TRIP_ATOL = 1e-10
_FEASIBILITY_SLACK = 1e-9


class InconsistentObservationsError(ValueError):
    """Raised when an (error, inequality) pair lies outside the attack model."""


class NoPositiveRateError(ValueError):
    """Raised when no channel angle yields a positive key rate."""


def binary_entropy(p: float) -> float:
    """Shannon binary entropy in bits, with H(0) = H(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class RatePoint:
    """All closed-form quantities of the model at one (theta, f) point."""

    theta: float
    cheat_fraction: float
    e_ab: float
    e_ab_observed: float
    e_ae: float
    e_be: float
    lgi_ab: float
    lgi_ae: float
    i_ab: float
    i_ae: float
    i_be: float
    key_rate: float


def _validate_point(theta: float, cheat_fraction: float) -> None:
    if not 0.0 <= theta <= math.pi / 2:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta!r}")
    if not 0.0 <= cheat_fraction <= 1.0:
        raise ValueError(f"cheat fraction must lie in [0, 1], got {cheat_fraction!r}")


def closed_form_rates(theta: float, cheat_fraction: float = 0.0) -> RatePoint:
    """Closed-form rates at channel angle theta with device-attack fraction f."""
    _validate_point(theta, cheat_fraction)
    e_ab = math.sin(theta / 2.0) ** 2
    half_angle_form = (1.0 - math.cos(theta)) / 2.0
    if abs(e_ab - half_angle_form) > _RATE_IDENTITY_ATOL:
        raise RuntimeError("half-angle identity violated; floating point fault")
    e_ae = (1.0 - math.sin(theta)) / 2.0
    e_be = (1.0 - math.sin(2.0 * theta)) / 2.0
    e_observed = (1.0 - cheat_fraction) * e_ab
    lgi_ab = TSIRELSON * math.cos(theta) * (1.0 - cheat_fraction)
    lgi_ae = TSIRELSON * math.sin(theta)
    i_ab, i_ae, i_be = mutual_informations(theta, cheat_fraction)
    return RatePoint(
        theta=theta,
        cheat_fraction=cheat_fraction,
        e_ab=e_ab,
        e_ab_observed=e_observed,
        e_ae=e_ae,
        e_be=e_be,
        lgi_ab=lgi_ab,
        lgi_ae=lgi_ae,
        i_ab=i_ab,
        i_ae=i_ae,
        i_be=i_be,
        key_rate=i_ab - min(i_ae, i_be),
    )


def mutual_informations(theta: float, cheat_fraction: float = 0.0) -> tuple[float, float, float]:
    """(I_AB, I_AE, I_BE) in bits per sifted bit.

    The attacker knows the bit outright on the device-attack fraction, so her
    informations interpolate to 1 with weight f; the legitimate information
    only sees the diluted error rate.
    """
    _validate_point(theta, cheat_fraction)
    f = cheat_fraction
    e_ab_observed = (1.0 - f) * (1.0 - math.cos(theta)) / 2.0
    e_ae = (1.0 - math.sin(theta)) / 2.0
    e_be = (1.0 - math.sin(2.0 * theta)) / 2.0
    i_ab = 1.0 - binary_entropy(e_ab_observed)
    i_ae = (1.0 - f) * (1.0 - binary_entropy(e_ae)) + f
    i_be = (1.0 - f) * (1.0 - binary_entropy(e_be)) + f
    return i_ab, i_ae, i_be


def key_rate(theta: float, cheat_fraction: float = 0.0) -> float:
    """One-way key rate I_AB - min(I_AE, I_BE); positive means secure."""
    i_ab, i_ae, i_be = mutual_informations(theta, cheat_fraction)
    return i_ab - min(i_ae, i_be)


def projective_bob_eve_error(theta: float) -> float:
    """Disagreement probability of same-basis projective receiver/probe outcomes.

    Equals e_ab (1 - e_ae) + (1 - e_ab) e_ae = (1 - sin(theta) cos(theta))/2.
    This is what the probe measurement actually achieves about the receiver;
    it is not the e_be used by the key-rate model (see module docstring).
    """
    _validate_point(theta, 0.0)
    return (1.0 - math.sin(theta) * math.cos(theta)) / 2.0


def estimate_attack(e_obs: float, lambda_obs: float) -> tuple[float, float]:
    """Invert the observed (error rate, inequality value) to (theta, f).

    The forward map gives 1 - f = 2 e_obs + lambda_obs / (2 sqrt(2)) and
    cos(theta) = lambda_obs / (2 sqrt(2) (1 - f)). Raises
    InconsistentObservationsError when the pair lies outside the model.
    """
    if not 0.0 <= e_obs <= 0.5:
        raise InconsistentObservationsError(f"observed error {e_obs!r} outside [0, 1/2]")
    if not 0.0 <= lambda_obs <= TSIRELSON + _FEASIBILITY_SLACK:
        raise InconsistentObservationsError(
            f"observed inequality value {lambda_obs!r} outside [0, 2*sqrt(2)]"
        )
    remaining = 2.0 * e_obs + lambda_obs / TSIRELSON
    if remaining <= 0.0 or remaining > 1.0 + _FEASIBILITY_SLACK:
        raise InconsistentObservationsError(
            f"inconsistent observations: inferred 1 - f = {remaining!r}"
        )
    clamp = max(remaining - 1.0, 0.0)
    remaining = min(remaining, 1.0)
    cos_theta = lambda_obs / (TSIRELSON * remaining)
    if cos_theta > 1.0 + _FEASIBILITY_SLACK:
        raise InconsistentObservationsError(
            f"inconsistent observations: inferred cos(theta) = {cos_theta!r}"
        )
    clamp += max(cos_theta - 1.0, 0.0)
    theta = math.acos(min(cos_theta, 1.0))
    f = 1.0 - remaining

    check = closed_form_rates(theta, f)
    round_trip_atol = _ROUND_TRIP_ATOL + 3.0 * clamp
    if (
        abs(check.e_ab_observed - e_obs) > round_trip_atol
        or abs(check.lgi_ab - lambda_obs) > round_trip_atol
    ):
        raise InconsistentObservationsError(
            "estimate failed round-trip verification against the forward model"
        )
    return theta, f


@dataclass(frozen=True)
class ThresholdPoint:
    """Root of the key rate in theta at fixed f, with both error coordinates."""

    cheat_fraction: float
    theta_star: float
    e_ab_star: float
    e_ab_observed_star: float


def security_threshold(cheat_fraction: float, tol: float = 1e-10) -> ThresholdPoint:
    """Largest channel angle with positive key rate, by bracketing bisection.

    The key rate is positive at theta = 0 and non-positive at theta = pi/2
    for every f in [0, 1); bisection maintains that bracket. Returns the
    root angle together with e_ab and the observed error (1 - f) e_ab there.
    """
    if not 0.0 <= cheat_fraction < 1.0:
        raise ValueError(f"cheat fraction must lie in [0, 1), got {cheat_fraction!r}")
    lo, hi = 0.0, math.pi / 2
    if not (key_rate(lo, cheat_fraction) > 0.0 and key_rate(hi, cheat_fraction) <= 0.0):
        raise NoPositiveRateError("no positive-rate region: key rate does not change sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if key_rate(mid, cheat_fraction) > 0.0:
            lo = mid
        else:
            hi = mid
    theta_star = 0.5 * (lo + hi)
    e_ab = (1.0 - math.cos(theta_star)) / 2.0
    return ThresholdPoint(
        cheat_fraction=cheat_fraction,
        theta_star=theta_star,
        e_ab_star=e_ab,
        e_ab_observed_star=(1.0 - cheat_fraction) * e_ab,
    )


def fig2_data(
    f_values: Sequence[float], theta_grid: Sequence[float]
) -> list[RatePoint]:
    """Rate-model curves over a theta grid for each device-attack fraction.

    Rows are ordered by f then theta; plotting the inequality value and the
    key rate against the error rate reproduces the model's two curve pairs.
    """
    rows: list[RatePoint] = []
    for f in f_values:
        for theta in theta_grid:
            rows.append(closed_form_rates(theta, f))
    return rows
