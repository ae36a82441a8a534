"""Game environment and the players' utility functions.

The environment is a fleet of devices partitioned into classes that share
exploits, plus a set of attestation methods.  The defender commits to a
probability of running each method on each device; the attacker then picks
a 0/1 attack vector.  All utility evaluations here are expectations in
closed form: detection is `1 - prod_m (1 - mu_m * p_m)` per device, the
defender pays per-method running costs, and the attacker pays a one-off
exploit-development cost per targeted class plus per-device attack costs.

Utilities are accumulated class by class (members in listed order) so that
evaluating a union of disjoint-class sub-environments is bit-identical to
summing the per-class evaluations.  Everything is immutable and pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class AttestationMethod:
    """One way of attesting a device: how often it catches a compromise and
    what one run costs the defender."""

    id: str
    detection_rate: float
    run_cost: float


@dataclass(frozen=True)
class Device:
    """A single device with the gains/losses both players attach to its
    compromise.  Losses are stored as negative numbers."""

    id: str
    class_id: str
    defender_gain: float
    defender_loss: float
    attacker_gain: float
    attacker_loss: float
    attack_cost: float


@dataclass(frozen=True)
class DeviceClass:
    """A set of devices sharing vulnerabilities; one exploit (paid once)
    covers every member."""

    id: str
    exploit_cost: float
    member_device_ids: tuple[str, ...]


@dataclass(frozen=True)
class Environment:
    """A complete game instance.

    `devices`, `classes`, and `methods` are kept in a fixed order; strategy
    matrices and vectors are indexed positionally against that order.  The
    `zero_sum` flag asks the validator to check the gain/loss coupling
    (defender_gain == -attacker_loss, defender_loss == -attacker_gain); it
    does not change how utilities are evaluated.
    """

    devices: tuple[Device, ...]
    classes: tuple[DeviceClass, ...]
    methods: tuple[AttestationMethod, ...]
    zero_sum: bool = False

    @cached_property
    def device_index(self) -> dict[str, int]:
        return {d.id: i for i, d in enumerate(self.devices)}

    @cached_property
    def class_index(self) -> dict[str, int]:
        return {c.id: i for i, c in enumerate(self.classes)}

    @cached_property
    def method_index(self) -> dict[str, int]:
        return {m.id: i for i, m in enumerate(self.methods)}

    def device(self, device_id: str) -> Device:
        try:
            return self.devices[self.device_index[device_id]]
        except KeyError:
            raise ValidationError(f"unknown device {device_id!r}") from None

    def device_class(self, class_id: str) -> DeviceClass:
        try:
            return self.classes[self.class_index[class_id]]
        except KeyError:
            raise ValidationError(f"unknown class {class_id!r}") from None


def _probability_matrix(values: np.ndarray | list, shape: tuple[int, int]) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValidationError(f"strategy shape {arr.shape} does not match {shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValidationError("strategy entries must be probabilities in [0, 1]")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DefenderStrategy:
    """Probability matrix indexed (device, method) in environment order."""

    probabilities: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.probabilities, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError("defender strategy must be a 2-D (device, method) matrix")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValidationError("strategy entries must be probabilities in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "probabilities", arr)

    def __eq__(self, other):
        if not isinstance(other, DefenderStrategy):
            return NotImplemented
        return self.probabilities.shape == other.probabilities.shape and bool(
            np.all(self.probabilities == other.probabilities)
        )

    def conform(self, env: Environment) -> np.ndarray:
        return _probability_matrix(
            self.probabilities, (len(env.devices), len(env.methods))
        )


@dataclass(frozen=True)
class AttackerStrategy:
    """0/1 attack vector indexed by device in environment order."""

    attacks: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.attacks, dtype=np.int8)
        if arr.ndim != 1 or not np.all((arr == 0) | (arr == 1)):
            raise ValidationError("attack vector entries must be exactly 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "attacks", arr)

    def __eq__(self, other):
        if not isinstance(other, AttackerStrategy):
            return NotImplemented
        return self.attacks.shape == other.attacks.shape and bool(
            np.all(self.attacks == other.attacks)
        )

    def conform(self, env: Environment) -> np.ndarray:
        if self.attacks.shape != (len(env.devices),):
            raise ValidationError(
                f"attack vector length {self.attacks.shape[0]} does not match "
                f"{len(env.devices)} devices"
            )
        return self.attacks


def all_zero_attack(env: Environment) -> AttackerStrategy:
    return AttackerStrategy(np.zeros(len(env.devices), dtype=np.int8))


def all_ones_attack(env: Environment) -> AttackerStrategy:
    return AttackerStrategy(np.ones(len(env.devices), dtype=np.int8))


# ---------------------------------------------------------------------------
# utility evaluation


def detection_probability(strategy: DefenderStrategy, device: Device, env: Environment) -> float:
    """Probability that at least one attestation run detects a compromise of
    `device` under `strategy`."""
    p = strategy.conform(env)
    i = env.device_index.get(device.id)
    if i is None:
        raise ValidationError(f"unknown device {device.id!r}")
    miss = 1.0
    for j, method in enumerate(env.methods):
        miss *= 1.0 - method.detection_rate * p[i, j]
    return 1.0 - miss


def _detection_vector(p: np.ndarray, env: Environment) -> np.ndarray:
    """Per-device detection probabilities; same arithmetic as the scalar form."""
    miss = np.ones(len(env.devices))
    for j, method in enumerate(env.methods):
        miss *= 1.0 - method.detection_rate * p[:, j]
    return 1.0 - miss


def _class_run_cost(p: np.ndarray, cls: DeviceClass, env: Environment) -> float:
    cost = 0.0
    for device_id in cls.member_device_ids:
        i = env.device_index[device_id]
        for j, method in enumerate(env.methods):
            cost += method.run_cost * p[i, j]
    return cost


def defender_total_cost(strategy: DefenderStrategy, env: Environment) -> float:
    """Expected total attestation cost of `strategy` (linear in each entry)."""
    p = strategy.conform(env)
    total = 0.0
    for cls in env.classes:
        total += _class_run_cost(p, cls, env)
    return total


def attacker_total_cost(attack: AttackerStrategy, env: Environment) -> float:
    """Total attack cost: each targeted class charges its exploit cost once,
    plus a per-device cost for every attacked device."""
    a = attack.conform(env)
    total = 0.0
    for cls in env.classes:
        class_total = 0.0
        targeted = False
        for device_id in cls.member_device_ids:
            i = env.device_index[device_id]
            if a[i]:
                targeted = True
                class_total += env.devices[i].attack_cost
        if targeted:
            class_total += cls.exploit_cost
        total += class_total
    return total


def defender_utility(
    strategy: DefenderStrategy, attack: AttackerStrategy, env: Environment
) -> float:
    """Defender's expected utility for the profile (strategy, attack)."""
    p = strategy.conform(env)
    a = attack.conform(env)
    total = 0.0
    for cls in env.classes:
        sub = 0.0
        for device_id in cls.member_device_ids:
            i = env.device_index[device_id]
            if a[i]:
                d = env.devices[i]
                prob = detection_probability(strategy, d, env)
                sub += d.defender_gain * prob + d.defender_loss * (1.0 - prob)
        sub -= _class_run_cost(p, cls, env)
        total += sub
    return total


def attacker_utility(
    strategy: DefenderStrategy, attack: AttackerStrategy, env: Environment
) -> float:
    """Attacker's expected utility for the profile (strategy, attack)."""
    strategy.conform(env)
    a = attack.conform(env)
    total = 0.0
    for cls in env.classes:
        sub = 0.0
        class_cost = 0.0
        targeted = False
        for device_id in cls.member_device_ids:
            i = env.device_index[device_id]
            if a[i]:
                d = env.devices[i]
                prob = detection_probability(strategy, d, env)
                sub += d.attacker_loss * prob + d.attacker_gain * (1.0 - prob)
                class_cost += d.attack_cost
                targeted = True
        if targeted:
            class_cost += cls.exploit_cost
        total += sub - class_cost
    return total


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    """One violated invariant, naming the offending entity."""

    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def validate_environment(env: Environment) -> tuple[Violation, ...]:
    """Check every model invariant; returns an empty tuple iff `env` is valid.

    Violations are reported as data, never raised, so that malformed
    environments (e.g. read from an edited file) can be diagnosed in full.
    """
    out: list[Violation] = []

    if not env.devices:
        out.append(Violation("size", "environment", "at least one device is required"))
    if not env.classes:
        out.append(Violation("size", "environment", "at least one class is required"))
    if not env.methods:
        out.append(Violation("size", "environment", "at least one attestation method is required"))

    seen_devices: dict[str, int] = {}
    for d in env.devices:
        if d.id in seen_devices:
            out.append(Violation("identity", d.id, "duplicate device id"))
        seen_devices[d.id] = seen_devices.get(d.id, 0) + 1
    seen_classes = set()
    for c in env.classes:
        if c.id in seen_classes:
            out.append(Violation("identity", c.id, "duplicate class id"))
        seen_classes.add(c.id)
    seen_methods = set()
    for m in env.methods:
        if m.id in seen_methods:
            out.append(Violation("identity", m.id, "duplicate method id"))
        seen_methods.add(m.id)

    for m in env.methods:
        if not _finite(m.detection_rate) or not 0.0 <= m.detection_rate <= 1.0:
            out.append(Violation("bounds", m.id, f"detection_rate {m.detection_rate!r} outside [0, 1]"))
        if not _finite(m.run_cost) or m.run_cost < 0.0:
            out.append(Violation("bounds", m.id, f"run_cost {m.run_cost!r} is negative"))

    for c in env.classes:
        if not c.member_device_ids:
            out.append(Violation("partition", c.id, "class has no member devices"))
        if not _finite(c.exploit_cost) or c.exploit_cost < 0.0:
            out.append(Violation("bounds", c.id, f"exploit_cost {c.exploit_cost!r} is negative"))
        dupes = {m for m in c.member_device_ids if c.member_device_ids.count(m) > 1}
        for m in sorted(dupes):
            out.append(Violation("partition", c.id, f"device {m!r} listed twice in class"))

    # partition: every device in exactly one class, and that class names it back
    membership: dict[str, list[str]] = {}
    for c in env.classes:
        for device_id in c.member_device_ids:
            membership.setdefault(device_id, []).append(c.id)
            if device_id not in env.device_index:
                out.append(Violation("partition", c.id, f"member {device_id!r} is not a known device"))
    for d in env.devices:
        owners = membership.get(d.id, [])
        if len(owners) == 0:
            out.append(Violation("partition", d.id, "device belongs to no class"))
        elif len(owners) > 1:
            out.append(Violation("partition", d.id, f"device listed in classes {owners}"))
        elif owners[0] != d.class_id:
            out.append(
                Violation("partition", d.id, f"class_id {d.class_id!r} but listed by {owners[0]!r}")
            )
        if d.class_id not in env.class_index:
            out.append(Violation("partition", d.id, f"class_id {d.class_id!r} is not a known class"))

    for d in env.devices:
        for field in ("defender_gain", "attacker_gain"):
            v = getattr(d, field)
            if not _finite(v) or v < 0.0:
                out.append(Violation("bounds", d.id, f"{field} {v!r} must be >= 0"))
        for field in ("defender_loss", "attacker_loss"):
            v = getattr(d, field)
            if not _finite(v) or v > 0.0:
                out.append(Violation("sign", d.id, f"{field} {v!r} must be <= 0 (losses are negative)"))
        if not _finite(d.attack_cost) or d.attack_cost < 0.0:
            out.append(Violation("bounds", d.id, f"attack_cost {d.attack_cost!r} is negative"))
        if _finite(d.attacker_loss) and _finite(d.attacker_gain) and not d.attacker_loss < d.attacker_gain:
            out.append(
                Violation(
                    "sign", d.id,
                    f"attacker_loss {d.attacker_loss!r} must be strictly below "
                    f"attacker_gain {d.attacker_gain!r}",
                )
            )

    if env.zero_sum:
        for d in env.devices:
            if d.defender_gain != -d.attacker_loss:
                out.append(
                    Violation("zero_sum", d.id,
                              f"defender_gain {d.defender_gain!r} != -attacker_loss {d.attacker_loss!r}")
                )
            if d.defender_loss != -d.attacker_gain:
                out.append(
                    Violation("zero_sum", d.id,
                              f"defender_loss {d.defender_loss!r} != -attacker_gain {d.attacker_gain!r}")
                )

    return tuple(out)


def require_valid(env: Environment) -> None:
    """Raise ValidationError listing every violation if `env` is invalid."""
    violations = validate_environment(env)
    if violations:
        raise ValidationError("invalid environment:\n" + "\n".join(str(v) for v in violations))
