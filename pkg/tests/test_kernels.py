"""Compiled enumeration kernel vs the NumPy fallback."""

import numpy as np
import pytest

from attestgame import _core_py
from attestgame.errors import EnumerationCapError

try:
    from attestgame import _core
except ImportError:
    _core = None

IMPLS = [("python", _core_py)] + ([("compiled", _core)] if _core is not None else [])


def random_case(rng, n, n_classes):
    values = rng.normal(0.0, 10.0, size=n)
    class_index = rng.integers(0, n_classes, size=n).astype(np.int64)
    class_cost = rng.uniform(0.0, 20.0, size=n_classes)
    return values, class_index, class_cost


def reference_best(values, class_index, class_cost):
    """Plain-Python scan in canonical order."""
    n = len(values)
    best = None
    for mask in range(1 << n):
        util = sum(values[i] for i in range(n) if mask >> i & 1)
        hit = {int(class_index[i]) for i in range(n) if mask >> i & 1}
        util -= sum(class_cost[c] for c in sorted(hit))
        pop = bin(mask).count("1")
        lex = int("".join(str(mask >> i & 1) for i in range(n)) or "0", 2)
        key = (-util, pop, lex)
        if best is None or key < best[0]:
            best = (key, mask, util)
    return best[1], best[2]


@pytest.mark.parametrize("name,impl", IMPLS)
def test_against_plain_python_reference(name, impl):
    rng = np.random.default_rng(1)
    for _ in range(40):
        n = int(rng.integers(1, 9))
        values, ci, cc = random_case(rng, n, int(rng.integers(1, 4)))
        mask = impl.best_attack(values, ci, cc)
        ref_mask, ref_util = reference_best(values, ci, cc)
        got_util = sum(values[i] for i in range(n) if mask >> i & 1) - sum(
            cc[c] for c in sorted({int(ci[i]) for i in range(n) if mask >> i & 1})
        )
        assert got_util == pytest.approx(ref_util, abs=1e-9)


@pytest.mark.parametrize("name,impl", IMPLS)
def test_tie_break_prefers_fewer_devices(name, impl):
    # zero-value devices: attacking them changes nothing, so the canonical
    # answer is the empty attack
    values = np.array([0.0, 0.0, 0.0])
    ci = np.zeros(3, dtype=np.int64)
    cc = np.array([0.0])
    assert impl.best_attack(values, ci, cc) == 0

    # a zero-value device inside an attacked class ties in or out of the
    # attack; fewer attacked devices wins
    values = np.array([5.0, 0.0])
    ci = np.array([0, 0], dtype=np.int64)
    cc = np.array([1.0])
    assert impl.best_attack(values, ci, cc) == 0b01

    # empty attack ties any zero-net attack and wins on popcount
    values = np.array([3.0])
    ci = np.array([0], dtype=np.int64)
    cc = np.array([3.0])
    assert impl.best_attack(values, ci, cc) == 0

    # non-tie sanity: profitable devices in separate classes are both taken
    values = np.array([5.0, 5.0])
    ci = np.array([0, 1], dtype=np.int64)
    cc = np.array([1.0, 1.0])
    assert impl.best_attack(values, ci, cc) == 0b11


@pytest.mark.parametrize("name,impl", IMPLS)
def test_batch_matches_single(name, impl):
    rng = np.random.default_rng(2)
    n, n_classes = 7, 3
    _, ci, cc = random_case(rng, n, n_classes)
    values = rng.normal(0.0, 10.0, size=(50, n))
    masks = impl.best_attack_batch(values, ci, cc)
    for r in range(50):
        assert masks[r] == impl.best_attack(values[r], ci, cc)


@pytest.mark.skipif(_core is None, reason="compiled kernel unavailable")
def test_compiled_and_python_agree():
    rng = np.random.default_rng(3)
    for _ in range(60):
        n = int(rng.integers(1, 11))
        values, ci, cc = random_case(rng, n, int(rng.integers(1, 4)))
        assert _core.best_attack(values, ci, cc) == _core_py.best_attack(values, ci, cc)
    values = rng.normal(0.0, 10.0, size=(200, 9))
    ci = rng.integers(0, 3, size=9).astype(np.int64)
    cc = rng.uniform(0, 20, size=3)
    assert np.array_equal(
        _core.best_attack_batch(values, ci, cc),
        _core_py.best_attack_batch(values, ci, cc),
    )


@pytest.mark.parametrize("name,impl", IMPLS)
def test_edge_cases(name, impl):
    assert impl.best_attack(np.array([]), np.array([], dtype=np.int64), np.array([1.0])) == 0
    with pytest.raises(EnumerationCapError):
        impl.best_attack(np.zeros(70), np.zeros(70, dtype=np.int64), np.array([0.0]))
    out = impl.best_attack_batch(np.zeros((0, 4)), np.zeros(4, dtype=np.int64), np.array([0.0]))
    assert out.shape == (0,)
