import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from synthmatch.params import (
    INDEX,
    N_PARAMS,
    NAMES,
    DomainError,
    Patch,
    denormalize,
    denormalize_vector,
    descriptor,
    descriptor_table,
    normalize,
    normalize_vector,
    random_patch,
    table_hash,
    table_json,
    validate_patch,
)

TABLE = descriptor_table()


def test_table_shape():
    assert len(TABLE) == N_PARAMS == 78
    assert len(set(NAMES)) == 78
    for d in TABLE:
        assert d.min < d.max
        assert d.curve > 0


def test_keyboard_units():
    assert descriptor("keyboard.midi_f0").unit == "midi"
    assert descriptor("keyboard.duration").unit == "seconds"


def test_unknown_descriptor():
    with pytest.raises(KeyError):
        descriptor("vco_3.tuning")


def test_denormalize_boundaries():
    for d in TABLE:
        assert denormalize(0.0, d) == d.min
        assert denormalize(1.0, d) == d.max
        assert normalize(d.min, d) == 0.0


def test_linear_midpoint():
    d = descriptor("keyboard.midi_f0")
    assert denormalize(0.5, d) == 63.5
    assert normalize(63.5, d) == 0.5


def test_round_trip_037():
    for d in TABLE:
        assert abs(normalize(denormalize(0.37, d), d) - 0.37) < 1e-9


def test_out_of_domain():
    d = descriptor("keyboard.midi_f0")
    with pytest.raises(DomainError):
        denormalize(1.2, d)
    with pytest.raises(DomainError):
        normalize(130.0, d)
    with pytest.raises(DomainError):
        denormalize_vector(np.full(N_PARAMS, -0.1))


@given(st.floats(0.0, 1.0), st.integers(0, N_PARAMS - 1))
def test_round_trip_property(u, i):
    d = TABLE[i]
    assert abs(normalize(denormalize(u, d), d) - u) <= 1e-9


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, N_PARAMS - 1))
def test_monotone(a, b, i):
    lo, hi = sorted((a, b))
    d = TABLE[i]
    assert denormalize(lo, d) <= denormalize(hi, d)


def test_vector_matches_scalar():
    u = np.random.default_rng(0).uniform(size=N_PARAMS)
    v = denormalize_vector(u)
    assert np.allclose(v, [denormalize(x, d) for x, d in zip(u, TABLE)], rtol=0, atol=1e-12)
    assert np.allclose(normalize_vector(v), u, atol=1e-9)


def test_random_patch_determinism():
    a = random_patch(np.random.default_rng(3))
    b = random_patch(np.random.default_rng(3))
    assert np.array_equal(a.values, b.values)
    assert np.all((a.values >= 0) & (a.values <= 1))
    assert a.source == "random"


def test_random_patch_mean():
    rng = np.random.default_rng(0)
    X = np.stack([random_patch(rng).values for _ in range(10000)])
    assert np.all(np.abs(X.mean(axis=0) - 0.5) < 0.02)


def test_validate():
    assert validate_patch(Patch(np.full(N_PARAMS, 0.5))) == []
    v = np.full(N_PARAMS, 0.5)
    v[3] = 1.5
    problems = validate_patch(Patch(v))
    assert [p.index for p in problems] == [3]
    assert "index 3" in str(problems[0])
    problems = validate_patch(Patch(np.full(77, 0.5)))
    assert problems and problems[0].index is None and "77" in str(problems[0])


def test_patch_getitem_and_with_values():
    p = Patch(np.full(N_PARAMS, 0.5))
    assert p["keyboard.midi_f0"] == 63.5
    q = p.with_values({"keyboard.midi_f0": 60.0})
    assert q["keyboard.midi_f0"] == pytest.approx(60.0, abs=1e-12)
    assert np.array_equal(np.delete(q.values, INDEX["keyboard.midi_f0"]), np.delete(p.values, INDEX["keyboard.midi_f0"]))


def test_table_json_and_hash_stable_across_processes():
    rows = json.loads(table_json())
    assert [r["name"] for r in rows] == list(NAMES)
    code = "from synthmatch.params import table_hash; print(table_hash())"
    other = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout.strip()
    assert other == table_hash()
