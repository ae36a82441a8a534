"""Defender-side optimization.

Each class is solved independently and the per-class choices concatenated.
Within a class the defender weighs two candidates: the acceptance strategy
(per-device probabilities that maximize utility when attacks may happen)
and the cheapest fully-deterring strategy, found by a continuous-knapsack
greedy on the single linear constraint "attacking everything nets zero or
less".  Ties resolve toward deterrence, matching the attacker's
defender-favorable tie-break.  Naive baselines (never/always attest, best
uniform probability) and a randomized-search oracle round out the module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import EnumerationCapError, UnsupportedCaseError, ValidationError
from .model import (
    AttackerStrategy,
    DefenderStrategy,
    DeviceClass,
    Environment,
    defender_utility,
    require_valid,
)
from .response import (
    DEFAULT_ENUMERATION_CAP,
    DEFAULT_TIE_TOL,
    BestResponseResult,
    best_response,
    conditional_class_attack,
    threshold_with_class_cost,
    threshold_without_class_cost,
)


def _single_method(env: Environment):
    if len(env.methods) != 1:
        raise UnsupportedCaseError(
            "unsupported: optimal solver requires a single attestation method, "
            f"got {len(env.methods)}"
        )
    return env.methods[0]


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def non_deter_strategy(device_class: DeviceClass, env: Environment) -> np.ndarray:
    """Per-member attestation probabilities when the defender accepts that
    the class may be attacked.

    Each device independently gets 0 (attesting is not worth the cost) or
    its sunk-cost threshold clamped into [0, 1].  Free attestation is never
    declined; a method that cannot detect gets probability 0 everywhere.
    """
    method = _single_method(env)
    mu = method.detection_rate
    cost = method.run_cost
    out = np.zeros(len(device_class.member_device_ids))
    if mu == 0.0:
        return out
    for k, device_id in enumerate(device_class.member_device_ids):
        d = env.device(device_id)
        tau = threshold_without_class_cost(d, method)
        decline = (
            cost > 0.0
            and cost >= (d.defender_gain - d.defender_loss) * mu
            and tau >= d.defender_loss / (-cost)
        )
        out[k] = 0.0 if decline else _clamp01(tau)
    return out


@dataclass(frozen=True)
class DeterrenceResult:
    """Outcome of the minimum-cost deterrence program for one class.

    `above_class_threshold` lists members whose probability had to exceed
    their single-target threshold (the one amortizing the exploit cost);
    these are the instances where the tighter textbook box would bind.
    """

    feasible: bool
    probabilities: Optional[np.ndarray]
    cost: Optional[float]
    above_class_threshold: tuple[str, ...] = ()


def deterrence_strategy(
    device_class: DeviceClass, env: Environment, epsilon: float = 0.0
) -> DeterrenceResult:
    """Cheapest per-member probabilities making an all-out attack on the
    class unprofitable.

    Minimizes total attestation cost subject to the attacker's all-ones
    utility being <= 0, with each probability boxed by its sunk-cost
    threshold clamped into [0, 1].  Solved greedily: devices sorted by
    descending marginal deterrence (detection rate times the attacker's
    gain-loss spread, ties by ascending member order) are raised to their
    bound until the constraint binds, the last one fractionally.  Returns
    infeasible when even the full box leaves the attack profitable.
    `epsilon` > 0 is added to every probability (clamped to 1) for callers
    who want strictly negative attacker utility instead of a tie.
    """
    method = _single_method(env)
    mu = method.detection_rate
    members = [env.device(i) for i in device_class.member_device_ids]
    n = len(members)

    gain_net = [d.attacker_gain - d.attack_cost for d in members]
    slack = 0.0
    for g in gain_net:
        slack += g
    slack -= device_class.exploit_cost  # attacker's all-ones utility at p = 0

    weights = np.array([mu * (d.attacker_gain - d.attacker_loss) for d in members])
    if mu == 0.0:
        bounds = np.zeros(n)
    else:
        bounds = np.array(
            [_clamp01(threshold_without_class_cost(d, method)) for d in members]
        )

    probs = np.zeros(n)
    if slack > 0.0:
        order = sorted(range(n), key=lambda k: (-weights[k], members[k].id))
        remaining = slack
        for k in order:
            if remaining <= 0.0:
                break
            if weights[k] <= 0.0 or bounds[k] <= 0.0:
                continue
            full = weights[k] * bounds[k]
            if full < remaining:
                probs[k] = bounds[k]
                remaining -= full
            else:
                probs[k] = min(bounds[k], remaining / weights[k])
                remaining = 0.0
        if remaining > 0.0:
            return DeterrenceResult(feasible=False, probabilities=None, cost=None)

    if epsilon > 0.0:
        probs = np.minimum(1.0, probs + epsilon)

    flagged = []
    if mu > 0.0:
        for k, d in enumerate(members):
            if probs[k] > threshold_with_class_cost(d, device_class, method):
                flagged.append(d.id)
    cost = 0.0
    for k in range(n):
        cost += method.run_cost * probs[k]
    return DeterrenceResult(
        feasible=True,
        probabilities=probs,
        cost=float(cost),
        above_class_threshold=tuple(flagged),
    )


@dataclass(frozen=True)
class ClassCandidate:
    """The two per-class utilities that were compared, and which side won."""

    class_id: str
    mode: str  # "non-deter" | "deter" | "tie"
    non_deter_utility: float
    deter_utility: Optional[float]
    above_class_threshold: tuple[str, ...] = ()


@dataclass(frozen=True)
class DefenderSolution:
    """An optimal attestation strategy with its supporting evidence."""

    strategy: DefenderStrategy
    defender_utility_at_best_response: float
    attacker_best_response: BestResponseResult
    candidate_log: tuple[ClassCandidate, ...]

    @property
    def mode_per_class(self) -> dict[str, str]:
        return {c.class_id: c.mode for c in self.candidate_log}


def _class_defender_utility(
    p_members: np.ndarray,
    attack_members: np.ndarray,
    device_class: DeviceClass,
    env: Environment,
) -> float:
    """Class-local defender utility; mirrors the full evaluation's per-class
    arithmetic so per-class sums compose exactly."""
    method = _single_method(env)
    sub = 0.0
    for k, device_id in enumerate(device_class.member_device_ids):
        if attack_members[k]:
            d = env.device(device_id)
            miss = 1.0 - method.detection_rate * p_members[k]
            prob = 1.0 - miss
            sub += d.defender_gain * prob + d.defender_loss * (1.0 - prob)
    for k in range(len(p_members)):
        sub -= method.run_cost * p_members[k]
    return float(sub)


def _scatter(env: Environment, device_class: DeviceClass, p_members: np.ndarray) -> np.ndarray:
    full = np.zeros((len(env.devices), len(env.methods)))
    for k, device_id in enumerate(device_class.member_device_ids):
        full[env.device_index[device_id], 0] = p_members[k]
    return full


def optimal_strategy(
    env: Environment, epsilon: float = 0.0, tie_tol: float = DEFAULT_TIE_TOL
) -> DefenderSolution:
    """Defender-optimal attestation strategy, composed class by class.

    For every class the acceptance candidate is evaluated under the
    attacker's actual response to it (attack only if the conditional attack
    nets strictly more than zero), the deterrence candidate under no attack.
    The better one wins; exact ties go to deterrence.
    """
    require_valid(env)
    _single_method(env)
    n = len(env.devices)
    chosen = np.zeros((n, 1))
    log: list[ClassCandidate] = []
    for cls in env.classes:
        pnd = non_deter_strategy(cls, env)
        work = DefenderStrategy(_scatter(env, cls, pnd))
        flags, attack_value = conditional_class_attack(work, cls, env)
        attacked = attack_value > tie_tol
        response = flags if attacked else np.zeros_like(flags)
        u_nd = _class_defender_utility(pnd, response, cls, env)

        det = deterrence_strategy(cls, env, epsilon)
        u_d = -det.cost if det.feasible else None

        if u_d is None:
            mode, pick = "non-deter", pnd
        elif abs(u_nd - u_d) <= tie_tol:
            mode, pick = "tie", det.probabilities
        elif u_d > u_nd:
            mode, pick = "deter", det.probabilities
        else:
            mode, pick = "non-deter", pnd

        for k, device_id in enumerate(cls.member_device_ids):
            chosen[env.device_index[device_id], 0] = pick[k]
        log.append(
            ClassCandidate(
                class_id=cls.id,
                mode=mode,
                non_deter_utility=u_nd,
                deter_utility=u_d,
                above_class_threshold=det.above_class_threshold if det.feasible else (),
            )
        )

    strategy = DefenderStrategy(chosen)
    br = best_response(strategy, env, tie_tol)
    return DefenderSolution(
        strategy=strategy,
        defender_utility_at_best_response=defender_utility(
            strategy, br.canonical_attack, env
        ),
        attacker_best_response=br,
        candidate_log=tuple(log),
    )


def optimal_single_device(
    env: Environment, epsilon: float = 0.0, tie_tol: float = DEFAULT_TIE_TOL
) -> DefenderSolution:
    """Closed-form optimum for the one-device, one-method case.

    Either probability 0 (when attestation is too expensive per detection
    and accepting the loss beats paying for deterrence) or the attack
    threshold clamped into [0, 1].  Delegates to the general per-class
    machinery, which reduces to exactly that comparison here.
    """
    if len(env.devices) != 1:
        raise ValidationError(
            f"single-device solver called with {len(env.devices)} devices"
        )
    return optimal_strategy(env, epsilon=epsilon, tie_tol=tie_tol)


# ---------------------------------------------------------------------------
# baselines


def baseline_never(env: Environment) -> DefenderStrategy:
    """Never attest anything."""
    return DefenderStrategy(np.zeros((len(env.devices), len(env.methods))))


def baseline_always(env: Environment) -> DefenderStrategy:
    """Attest everything on every opportunity."""
    return DefenderStrategy(np.ones((len(env.devices), len(env.methods))))


def uniform_strategy(env: Environment, q: float) -> DefenderStrategy:
    return DefenderStrategy(np.full((len(env.devices), len(env.methods)), q))


def _class_uniform_crossing(
    device_class: DeviceClass, env: Environment
) -> Optional[float]:
    """Uniform probability at which the class's conditional attack utility
    crosses zero (the class stops being worth targeting).

    The utility is continuous, piecewise linear, and nonincreasing in the
    uniform probability; devices drop out of the conditional attack exactly
    where their value term reaches zero, so scanning the segments between
    sorted thresholds finds the crossing.  Returns None when the class is
    never profitable at q >= 0 or stays profitable for every q.
    """
    method = _single_method(env)
    mu = method.detection_rate
    items = []
    for device_id in device_class.member_device_ids:
        d = env.device(device_id)
        tau = threshold_without_class_cost(d, method)
        if tau > 0.0:
            items.append((tau, d.attacker_gain - d.attack_cost,
                          mu * (d.attacker_gain - d.attacker_loss)))
    if not items:
        return None
    items.sort(key=lambda t: t[0])
    level = sum(g for _, g, _ in items) - device_class.exploit_cost
    slope = sum(s for _, _, s in items)
    if level <= 0.0:
        return None
    idx = 0
    lo = 0.0
    while True:
        hi = items[idx][0] if idx < len(items) else np.inf
        if slope > 0.0:
            crossing = level / slope
            if crossing < hi:
                return max(lo, crossing)
        if idx >= len(items):
            return None
        while idx < len(items) and items[idx][0] == hi:
            _, g, s = items[idx]
            level -= g - s * hi
            slope -= s
            idx += 1
        lo = hi


def baseline_optimal_uniform(env: Environment) -> tuple[float, DefenderStrategy]:
    """Best single probability applied to every device.

    The defender's utility against the best response is piecewise linear in
    the uniform probability, with kinks only at device thresholds and at the
    per-class profitability crossings; evaluating those breakpoints (plus 0
    and 1) under the usual tie-break finds a maximizer.
    """
    require_valid(env)
    method = _single_method(env)
    if method.detection_rate == 0.0:
        return 0.0, baseline_never(env)
    breakpoints = {0.0, 1.0}
    for d in env.devices:
        tau = threshold_without_class_cost(d, method)
        if 0.0 < tau < 1.0:
            breakpoints.add(tau)
    for cls in env.classes:
        crossing = _class_uniform_crossing(cls, env)
        if crossing is not None and 0.0 < crossing < 1.0:
            breakpoints.add(crossing)
    best_q = 0.0
    best_u = -np.inf
    for q in sorted(breakpoints):
        strat = uniform_strategy(env, q)
        br = best_response(strat, env)
        u = defender_utility(strat, br.canonical_attack, env)
        if u > best_u:
            best_q, best_u = q, u
    return best_q, uniform_strategy(env, best_q)


# ---------------------------------------------------------------------------
# randomized verification oracle


def _device_arrays(env: Environment):
    ag = np.array([d.attacker_gain for d in env.devices])
    al = np.array([d.attacker_loss for d in env.devices])
    ac = np.array([d.attack_cost for d in env.devices])
    dg = np.array([d.defender_gain for d in env.devices])
    dl = np.array([d.defender_loss for d in env.devices])
    class_index = np.array([env.class_index[d.class_id] for d in env.devices], dtype=np.int64)
    class_cost = np.array([c.exploit_cost for c in env.classes])
    return ag, al, ac, dg, dl, class_index, class_cost


def batch_defender_utilities(
    env: Environment, probabilities: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Defender utilities of many single-method strategies, each under the
    attacker's exhaustively enumerated best response.

    `probabilities` is (samples, devices).  Returns the utilities and the
    best-response masks (bit i == device i).
    """
    method = _single_method(env)
    ag, al, ac, dg, dl, class_index, class_cost = _device_arrays(env)
    P = np.asarray(probabilities, dtype=np.float64)
    prob = 1.0 - (1.0 - method.detection_rate * P)
    attack_values = al * prob + ag * (1.0 - prob) - ac
    masks = kernels.best_attack_batch(attack_values, class_index, class_cost)
    n = len(env.devices)
    bits = ((masks[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(np.float64)
    defend_values = dg * prob + dl * (1.0 - prob)
    utilities = (defend_values * bits).sum(axis=1) - method.run_cost * P.sum(axis=1)
    return utilities, masks


def sampling_box(env: Environment) -> np.ndarray:
    """Per-device upper bounds for strategy sampling: the single-target
    threshold clamped into [0, 1] (no mass above it is ever useful)."""
    method = _single_method(env)
    out = np.empty(len(env.devices))
    for i, d in enumerate(env.devices):
        cls = env.device_class(d.class_id)
        out[i] = _clamp01(threshold_with_class_cost(d, cls, method))
    return out


def randomized_search_check(
    env: Environment,
    sample_count: int,
    seed: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> Optional[tuple[DefenderStrategy, float]]:
    """Best of `sample_count` strategies sampled uniformly from the useful
    box, each scored under the brute-force best response.

    Deterministic given the seed; returns None for zero samples.  This is a
    verification oracle: the solver's utility should never fall more than a
    whisker below the value returned here.
    """
    require_valid(env)
    n = len(env.devices)
    if n > cap:
        raise EnumerationCapError(
            f"refusing randomized search over {n} devices (cap is {cap})"
        )
    if sample_count <= 0:
        return None
    box = sampling_box(env)
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.0, 1.0, size=(sample_count, n)) * box[None, :]
    utilities, masks = batch_defender_utilities(env, P)
    pick = int(np.argmax(utilities))
    strategy = DefenderStrategy(P[pick][:, None])
    attack = AttackerStrategy(
        np.array([(int(masks[pick]) >> i) & 1 for i in range(n)], dtype=np.int8)
    )
    return strategy, defender_utility(strategy, attack, env)
