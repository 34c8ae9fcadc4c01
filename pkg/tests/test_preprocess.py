import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dkfis.errors import DegenerateColumn
from dkfis.preprocess import ZScoreScaler, apply_minmax, apply_zscore, fit_minmax, fit_zscore, invert_minmax


def test_zscore_hand_values():
    sc = fit_zscore(np.array([[1.0], [2.0], [3.0]]), names=("x",))
    assert sc.mean == (2.0,) and sc.standard_deviation == (1.0,)
    s2 = ZScoreScaler((2.0,), (1.0,), ("x",))
    assert apply_zscore(s2, [[3.5]])[0, 0] == 1.5
    assert apply_zscore(s2, [[2.0]])[0, 0] == 0.0
    assert apply_zscore(s2, [[3.0]])[0, 0] == 1.0


def test_zscore_degenerate_names_column():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    with pytest.raises(DegenerateColumn) as exc:
        fit_zscore(X, names=("a", "b"))
    assert exc.value.name == "b"


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_zscored_training_columns_are_standard(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(rng.uniform(-50, 50, 4), rng.uniform(0.1, 20, 4), size=(rng.integers(3, 60), 4))
    Z = fit_zscore(X).transform(X)
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-12)
    assert np.all(np.abs(Z.std(axis=0, ddof=1) - 1.0) < 1e-12)


def test_minmax_examples():
    sc = fit_minmax([0.0, 0.86])
    assert (sc.min_x, sc.max_x) == (0.0, 0.86)
    assert apply_minmax(sc, 0.43) == pytest.approx(0.5, abs=1e-15)
    sc2 = fit_minmax([1.0, 3.0], 0.0, 10.0)
    assert (sc2.min_x, sc2.max_x) == (1.0, 3.0)
    assert apply_minmax(sc2, 1.0) == 0.0 and apply_minmax(sc2, 3.0) == 10.0
    with pytest.raises(DegenerateColumn):
        fit_minmax([0.0, 0.0, 0.0])


def test_minmax_does_not_clamp():
    sc = fit_minmax([0.0, 0.5])
    assert apply_minmax(sc, 1.0) == pytest.approx(2.0)
    assert apply_minmax(sc, -0.5) == pytest.approx(-1.0)


@settings(max_examples=200, deadline=None)
@given(lo=st.floats(-100, 100), width=st.floats(1e-3, 100),
       out=st.tuples(st.floats(-5, 5), st.floats(1e-3, 10)),
       v=st.floats(-1000, 1000))
def test_minmax_round_trip_and_affinity(lo, width, out, v):
    sc = fit_minmax([lo, lo + width], out[0], out[0] + out[1])
    back = invert_minmax(sc, apply_minmax(sc, v))
    # subtracting new_min on the way back amplifies round-off by |new_min| / out-width
    amplification = 1.0 + (abs(out[0]) + out[1]) / out[1]
    assert abs(back - v) <= 1e-14 * amplification * (abs(v) + abs(lo) + width + 1.0)
    a, b, c = apply_minmax(sc, [v, v + 1.0, v + 3.0])
    assert b > a and (c - a) == pytest.approx(3.0 * (b - a), rel=1e-9)
