"""Attacker best-response analysis.

For a single attestation method the attacker's decision per device reduces
to a probability threshold: attack while the attestation probability stays
strictly below it.  Two thresholds matter: one amortizing the class exploit
cost (relevant only when the device would be the sole reason to target its
class) and one ignoring it (relevant once the class is targeted anyway).
The class-level decision then compares the conditional attack's utility
against zero.  Ties break in the defender's favor: an indifferent attacker
does not attack.  An exhaustive enumeration oracle over all 2^n attack
vectors backs the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    EnumerationCapError,
    UndeterrableError,
    UnsupportedCaseError,
    ValidationError,
)
from .model import (
    AttackerStrategy,
    AttestationMethod,
    DefenderStrategy,
    Device,
    DeviceClass,
    Environment,
    attacker_utility,
    detection_probability,
)

DEFAULT_TIE_TOL = 1e-9
DEFAULT_ENUMERATION_CAP = 20


def _require_single_method(env: Environment) -> AttestationMethod:
    if len(env.methods) != 1:
        raise UnsupportedCaseError(
            "unsupported: best-response analysis requires a single attestation method, "
            f"got {len(env.methods)}"
        )
    return env.methods[0]


def _threshold(device: Device, method: AttestationMethod, extra_cost: float) -> float:
    if device.attacker_loss >= device.attacker_gain:
        raise ValidationError(
            f"device {device.id!r}: attacker_loss must be strictly below attacker_gain"
        )
    if method.detection_rate == 0.0:
        raise UndeterrableError(
            f"method {method.id!r} never detects (detection_rate 0); no threshold exists"
        )
    numerator = extra_cost + device.attack_cost - device.attacker_gain
    return (1.0 / method.detection_rate) * (
        numerator / (device.attacker_loss - device.attacker_gain)
    )


def threshold_with_class_cost(
    device: Device, device_class: DeviceClass, method: AttestationMethod
) -> float:
    """Attestation probability above which attacking `device` alone (paying
    the class exploit cost) stops being profitable.

    May exceed 1 (no feasible probability deters) or be <= 0 (the attack is
    never profitable); values are returned unclamped.
    """
    return _threshold(device, method, device_class.exploit_cost)


def threshold_without_class_cost(device: Device, method: AttestationMethod) -> float:
    """Per-device threshold once the class exploit cost is already sunk."""
    return _threshold(device, method, 0.0)


def _member_attack_values(
    strategy: DefenderStrategy, device_class: DeviceClass, env: Environment
) -> np.ndarray:
    """Attacker's net value of attacking each member (class cost excluded)."""
    values = np.empty(len(device_class.member_device_ids))
    for k, device_id in enumerate(device_class.member_device_ids):
        d = env.device(device_id)
        prob = detection_probability(strategy, d, env)
        values[k] = (
            d.attacker_loss * prob + d.attacker_gain * (1.0 - prob) - d.attack_cost
        )
    return values


def _conditional_attack_flags(
    strategy: DefenderStrategy, device_class: DeviceClass, env: Environment
) -> np.ndarray:
    """Per-member attack flags assuming the class exploit cost is sunk."""
    method = _require_single_method(env)
    p = strategy.conform(env)
    flags = np.zeros(len(device_class.member_device_ids), dtype=np.int8)
    for k, device_id in enumerate(device_class.member_device_ids):
        d = env.device(device_id)
        if method.detection_rate == 0.0:
            # threshold limit: attack iff the undetected net gain is positive
            flags[k] = 1 if d.attacker_gain - d.attack_cost > 0.0 else 0
        else:
            flags[k] = 1 if p[env.device_index[device_id], 0] < threshold_without_class_cost(d, method) else 0
    return flags


def _conditional(
    strategy: DefenderStrategy, device_class: DeviceClass, env: Environment
) -> tuple[np.ndarray, np.ndarray, float]:
    flags = _conditional_attack_flags(strategy, device_class, env)
    values = _member_attack_values(strategy, device_class, env)
    utility = 0.0
    for k in range(len(flags)):
        if flags[k]:
            utility += values[k]
    utility -= device_class.exploit_cost
    return flags, values, float(utility)


def conditional_class_attack(
    strategy: DefenderStrategy, device_class: DeviceClass, env: Environment
) -> tuple[np.ndarray, float]:
    """Utility-maximizing attack within one class, given the class is targeted.

    Returns the 0/1 vector over the class members (in listed order) and its
    class-local utility including the exploit cost.  The all-zero vector with
    utility -exploit_cost is possible; whether targeting the class at all is
    worthwhile is decided by `best_response`.
    """
    flags, _, utility = _conditional(strategy, device_class, env)
    return flags, utility


@dataclass(frozen=True)
class ClassResponse:
    """Per-class detail of a best response."""

    class_id: str
    conditional_attack: np.ndarray
    conditional_utility: float
    attacked: bool
    tie: bool


@dataclass(frozen=True)
class BestResponseResult:
    """Canonical attacker best response with per-class breakdown.

    `canonical_attack` applies the defender-favorable tie-break (no attack at
    knife edges); `is_tie` records that an alternative best response of equal
    utility exists, e.g. when the defender sits exactly on a threshold.
    """

    canonical_attack: AttackerStrategy
    attack_utility: float
    is_tie: bool
    per_class: tuple[ClassResponse, ...]


def best_response(
    strategy: DefenderStrategy, env: Environment, tie_tol: float = DEFAULT_TIE_TOL
) -> BestResponseResult:
    """Compute the attacker's best response class by class.

    A class is attacked with its conditional vector iff that vector's
    class-local utility is strictly positive; at (numerically) zero the tie
    is flagged and resolved to not attacking.
    """
    _require_single_method(env)
    attack = np.zeros(len(env.devices), dtype=np.int8)
    details: list[ClassResponse] = []
    any_tie = False
    for cls in env.classes:
        flags, values, utility = _conditional(strategy, cls, env)
        tie = abs(utility) <= tie_tol
        attacked = utility > tie_tol
        if attacked and np.any(np.abs(values) <= tie_tol):
            # a member sits exactly on its threshold: swapping it in or out
            # yields an equal-utility best response
            tie = True
        if attacked:
            for k, device_id in enumerate(cls.member_device_ids):
                if flags[k]:
                    attack[env.device_index[device_id]] = 1
        details.append(
            ClassResponse(
                class_id=cls.id,
                conditional_attack=flags,
                conditional_utility=utility,
                attacked=attacked,
                tie=tie,
            )
        )
        any_tie = any_tie or tie
    canonical = AttackerStrategy(attack)
    return BestResponseResult(
        canonical_attack=canonical,
        attack_utility=attacker_utility(strategy, canonical, env),
        is_tie=any_tie,
        per_class=tuple(details),
    )


# ---------------------------------------------------------------------------
# exhaustive oracle


def attack_value_arrays(
    strategy: DefenderStrategy, env: Environment
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arrays for the enumeration kernels: per-device attack values (any
    number of methods), per-device class indices, per-class exploit costs."""
    p = strategy.conform(env)
    miss = np.ones(len(env.devices))
    for j, method in enumerate(env.methods):
        miss *= 1.0 - method.detection_rate * p[:, j]
    prob = 1.0 - miss
    values = np.empty(len(env.devices))
    class_index = np.empty(len(env.devices), dtype=np.int64)
    for i, d in enumerate(env.devices):
        values[i] = (
            d.attacker_loss * prob[i] + d.attacker_gain * (1.0 - prob[i]) - d.attack_cost
        )
        class_index[i] = env.class_index[d.class_id]
    class_cost = np.array([c.exploit_cost for c in env.classes])
    return values, class_index, class_cost


def utility_of_mask(
    mask: int, values: np.ndarray, class_index: np.ndarray, class_cost: np.ndarray
) -> float:
    """Direct (non-incremental) attacker utility of an attack mask."""
    total = 0.0
    hit = set()
    for i in range(len(values)):
        if mask >> i & 1:
            total += values[i]
            hit.add(int(class_index[i]))
    for c in sorted(hit):
        total -= class_cost[c]
    return total


def brute_force_best_response(
    strategy: DefenderStrategy,
    env: Environment,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> tuple[AttackerStrategy, float]:
    """Enumerate all 2^n attack vectors and return a maximizer of the
    attacker's utility, ties broken toward fewer attacked devices and then
    lexicographically.  Refuses environments above `cap` devices."""
    n = len(env.devices)
    if n > cap:
        raise EnumerationCapError(
            f"refusing to enumerate 2^{n} attack vectors for {n} devices "
            f"(cap is {cap}); pass a larger cap explicitly to override"
        )
    values, class_index, class_cost = attack_value_arrays(strategy, env)
    mask = kernels.best_attack(values, class_index, class_cost)
    attack = np.array([(mask >> i) & 1 for i in range(n)], dtype=np.int8)
    utility = utility_of_mask(mask, values, class_index, class_cost)
    return AttackerStrategy(attack), utility
