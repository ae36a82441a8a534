"""Seeded random instance generation and JSON document I/O.

Generation follows a fixed protocol: devices are dealt to classes round
robin, per-device gains are drawn independently from the gain range, losses
are set by the zero-sum coupling (attacker_loss = -defender_gain,
defender_loss = -attacker_gain), and the single attestation method, class
exploit costs, and device attack costs are drawn from their ranges.

Reproducibility contract: each entity kind draws from its own PCG64
substream, derived as default_rng(SeedSequence(seed, spawn_key=(k,))) with
k = 0 for the method, 1 for classes, 2 for devices.  Within a kind, draws
happen in index order (for devices: defender gain, attacker gain, attack
cost).  Adding a new kind therefore never shifts existing values.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigError, ValidationError
from .model import (
    AttackerStrategy,
    AttestationMethod,
    DefenderStrategy,
    Device,
    DeviceClass,
    Environment,
    require_valid,
)

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of the random-instance protocol.  All ranges are closed
    intervals sampled uniformly."""

    device_count: int = 50
    class_count: int = 5
    gain_range: tuple[float, float] = (20.0, 40.0)
    detection_rate_range: tuple[float, float] = (0.5, 0.9)
    attest_cost_range: tuple[float, float] = (0.0, 10.0)
    exploit_cost_range: tuple[float, float] = (15.0, 40.0)
    device_attack_cost_range: tuple[float, float] = (1.0, 3.0)
    zero_sum: bool = True
    seed: Optional[int] = None

    def __post_init__(self):
        if self.device_count < 1:
            raise ConfigError(f"device_count must be >= 1, got {self.device_count}")
        if not 1 <= self.class_count <= self.device_count:
            raise ConfigError(
                f"class_count must be in [1, device_count], got {self.class_count}"
            )
        for name in (
            "gain_range",
            "detection_rate_range",
            "attest_cost_range",
            "exploit_cost_range",
            "device_attack_cost_range",
        ):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigError(f"{name} has low {lo} above high {hi}")
        lo, hi = self.detection_rate_range
        if lo < 0.0 or hi > 1.0:
            raise ConfigError(f"detection_rate_range {self.detection_rate_range} outside [0, 1]")
        for name in ("attest_cost_range", "exploit_cost_range", "device_attack_cost_range", "gain_range"):
            if getattr(self, name)[0] < 0.0:
                raise ConfigError(f"{name} must be nonnegative")
        if self.seed is not None and not 0 <= self.seed <= _MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for name in d:
            if isinstance(d[name], tuple):
                d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        kwargs = dict(data)
        for name, value in kwargs.items():
            if isinstance(value, list):
                kwargs[name] = tuple(value)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad scenario config: {exc}") from None


def _stream(seed: int, kind: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(kind,)))


def generate(config: ScenarioConfig) -> Environment:
    """Generate a random environment per the protocol; deterministic given
    the config's seed."""
    if config.seed is None:
        raise ConfigError("generate() needs a config with an explicit seed")
    method_rng = _stream(config.seed, 0)
    class_rng = _stream(config.seed, 1)
    device_rng = _stream(config.seed, 2)

    method = AttestationMethod(
        id="m0",
        detection_rate=float(method_rng.uniform(*config.detection_rate_range)),
        run_cost=float(method_rng.uniform(*config.attest_cost_range)),
    )

    class_ids = [f"c{j}" for j in range(config.class_count)]
    exploit_costs = [
        float(class_rng.uniform(*config.exploit_cost_range))
        for _ in range(config.class_count)
    ]

    width = len(str(config.device_count - 1))
    devices = []
    members: dict[str, list[str]] = {cid: [] for cid in class_ids}
    for i in range(config.device_count):
        defender_gain = float(device_rng.uniform(*config.gain_range))
        attacker_gain = float(device_rng.uniform(*config.gain_range))
        attack_cost = float(device_rng.uniform(*config.device_attack_cost_range))
        cid = class_ids[i % config.class_count]
        device_id = f"d{i:0{width}d}"
        devices.append(
            Device(
                id=device_id,
                class_id=cid,
                defender_gain=defender_gain,
                defender_loss=-attacker_gain,
                attacker_gain=attacker_gain,
                attacker_loss=-defender_gain,
                attack_cost=attack_cost,
            )
        )
        members[cid].append(device_id)

    classes = tuple(
        DeviceClass(id=cid, exploit_cost=exploit_costs[j], member_device_ids=tuple(members[cid]))
        for j, cid in enumerate(class_ids)
    )
    return Environment(
        devices=tuple(devices),
        classes=classes,
        methods=(method,),
        zero_sum=config.zero_sum,
    )


# ---------------------------------------------------------------------------
# JSON documents


def _environment_document(
    env: Environment, seed: Optional[int], config: Optional[ScenarioConfig]
) -> dict[str, Any]:
    return {
        "devices": [
            {
                "id": d.id,
                "class_id": d.class_id,
                "defender_gain": d.defender_gain,
                "defender_loss": d.defender_loss,
                "attacker_gain": d.attacker_gain,
                "attacker_loss": d.attacker_loss,
                "attack_cost": d.attack_cost,
            }
            for d in env.devices
        ],
        "classes": [
            {
                "id": c.id,
                "exploit_cost": c.exploit_cost,
                "member_device_ids": list(c.member_device_ids),
            }
            for c in env.classes
        ],
        "methods": [
            {"id": m.id, "detection_rate": m.detection_rate, "run_cost": m.run_cost}
            for m in env.methods
        ],
        "zero_sum": env.zero_sum,
        "meta": {
            "seed": seed,
            "config": config.to_dict() if config is not None else None,
        },
    }


def save_environment(
    env: Environment,
    destination: str | Path,
    seed: Optional[int] = None,
    config: Optional[ScenarioConfig] = None,
) -> None:
    """Write the environment document; floats keep full round-trip precision."""
    doc = _environment_document(env, seed, config)
    Path(destination).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


class _DocReader:
    """Field extraction with error messages naming field and location."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: expected an object, got {type(data).__name__}")
        self.data = data
        self.path = path

    def req(self, key: str, kind: type, kindname: str) -> Any:
        if key not in self.data:
            raise ValidationError(f"{self.path}.{key}: missing required field")
        value = self.data[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            raise ValidationError(
                f"{self.path}.{key}: expected {kindname}, got {type(value).__name__}"
            )
        return value


def _parse_environment(data: Any) -> Environment:
    root = _DocReader(data, "$")
    devices = []
    raw_devices = root.req("devices", list, "array")
    for i, item in enumerate(raw_devices):
        r = _DocReader(item, f"$.devices[{i}]")
        devices.append(
            Device(
                id=r.req("id", str, "string"),
                class_id=r.req("class_id", str, "string"),
                defender_gain=r.req("defender_gain", float, "number"),
                defender_loss=r.req("defender_loss", float, "number"),
                attacker_gain=r.req("attacker_gain", float, "number"),
                attacker_loss=r.req("attacker_loss", float, "number"),
                attack_cost=r.req("attack_cost", float, "number"),
            )
        )
    classes = []
    for i, item in enumerate(root.req("classes", list, "array")):
        r = _DocReader(item, f"$.classes[{i}]")
        member_ids = r.req("member_device_ids", list, "array")
        for j, m in enumerate(member_ids):
            if not isinstance(m, str):
                raise ValidationError(
                    f"$.classes[{i}].member_device_ids[{j}]: expected string"
                )
        classes.append(
            DeviceClass(
                id=r.req("id", str, "string"),
                exploit_cost=r.req("exploit_cost", float, "number"),
                member_device_ids=tuple(member_ids),
            )
        )
    methods = []
    for i, item in enumerate(root.req("methods", list, "array")):
        r = _DocReader(item, f"$.methods[{i}]")
        methods.append(
            AttestationMethod(
                id=r.req("id", str, "string"),
                detection_rate=r.req("detection_rate", float, "number"),
                run_cost=r.req("run_cost", float, "number"),
            )
        )
    zero_sum = root.req("zero_sum", bool, "boolean")
    return Environment(
        devices=tuple(devices),
        classes=tuple(classes),
        methods=tuple(methods),
        zero_sum=zero_sum,
    )


def load_environment(source: str | Path) -> Environment:
    """Read and validate an environment document; raises ValidationError
    naming the offending field or invariant."""
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from None
    env = _parse_environment(data)
    require_valid(env)
    return env


def environment_meta(source: str | Path) -> dict[str, Any]:
    """The meta block (seed and generating config) of an environment document."""
    data = json.loads(Path(source).read_text())
    meta = data.get("meta") or {}
    return meta if isinstance(meta, dict) else {}


def save_defender_strategy(
    strategy: DefenderStrategy, env: Environment, destination: str | Path
) -> None:
    """Write a defender strategy as {device id: {method id: probability}}."""
    p = strategy.conform(env)
    doc = {
        d.id: {m.id: float(p[i, j]) for j, m in enumerate(env.methods)}
        for i, d in enumerate(env.devices)
    }
    Path(destination).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_defender_strategy(source: str | Path, env: Environment) -> DefenderStrategy:
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected an object of device entries")
    p = np.zeros((len(env.devices), len(env.methods)))
    seen = set()
    for device_id, row in data.items():
        if device_id not in env.device_index:
            raise ValidationError(f"{path}: unknown device {device_id!r}")
        r = _DocReader(row, f"$.{device_id}")
        for method in env.methods:
            p[env.device_index[device_id], env.method_index[method.id]] = r.req(
                method.id, float, "number"
            )
        seen.add(device_id)
    missing = [d.id for d in env.devices if d.id not in seen]
    if missing:
        raise ValidationError(f"{path}: missing entries for devices {missing}")
    return DefenderStrategy(p)


def save_attacker_strategy(
    attack: AttackerStrategy, env: Environment, destination: str | Path
) -> None:
    """Write an attack vector as {device id: 0 or 1}."""
    a = attack.conform(env)
    doc = {d.id: int(a[i]) for i, d in enumerate(env.devices)}
    Path(destination).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_attacker_strategy(source: str | Path, env: Environment) -> AttackerStrategy:
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected an object of device entries")
    a = np.zeros(len(env.devices), dtype=np.int8)
    seen = set()
    for device_id, value in data.items():
        if device_id not in env.device_index:
            raise ValidationError(f"{path}: unknown device {device_id!r}")
        if value not in (0, 1) or isinstance(value, bool):
            raise ValidationError(f"{path}: $.{device_id}: expected 0 or 1, got {value!r}")
        a[env.device_index[device_id]] = value
        seen.add(device_id)
    missing = [d.id for d in env.devices if d.id not in seen]
    if missing:
        raise ValidationError(f"{path}: missing entries for devices {missing}")
    return AttackerStrategy(a)
