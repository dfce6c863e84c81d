"""Tests for the domain types, validation, and curve evaluation."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sivc import (
    CensoredObservation,
    CoefficientCurves,
    Dataset,
    DegenerateDirectionError,
    UnidentifiableSignError,
    UnitDirection,
    ValidationError,
    censoring_rate,
    evaluate_curves,
    normalize_direction,
    validate_dataset,
)


def make_dataset(y, delta, x, t):
    return Dataset(y=np.asarray(y, float), delta=np.asarray(delta),
                   x=np.asarray(x, float), t=np.asarray(t, float))


class TestNormalizeDirection:
    def test_three_four_five(self):
        u = normalize_direction([3.0, 4.0])
        assert np.allclose(u.components, [0.6, 0.8])

    def test_sign_flip(self):
        u = normalize_direction([-3.0, -4.0])
        assert np.allclose(u.components, [0.6, 0.8])

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateDirectionError, match="degenerate direction"):
            normalize_direction([0.0, 0.0])

    def test_zero_first_component_rejected(self):
        with pytest.raises(UnidentifiableSignError, match="unidentifiable sign"):
            normalize_direction([0.0, 1.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            normalize_direction([1.0, np.nan])

    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=1,
            max_size=6,
        )
    )
    def test_unit_norm_and_positive_first(self, v):
        arr = np.asarray(v)
        if np.max(np.abs(arr)) == 0 or arr[0] == 0:
            return
        try:
            u = normalize_direction(arr)
        except UnidentifiableSignError:
            # legitimate when v[0]/||v|| underflows to zero
            return
        assert abs(np.linalg.norm(u.components) - 1.0) <= 1e-12
        assert u.components[0] > 0

    def test_underflowing_first_component_rejected(self):
        with pytest.raises(UnidentifiableSignError, match="underflows"):
            normalize_direction([5e-324, 2.0])

    @given(
        st.lists(
            st.floats(min_value=-1e3, max_value=1e3, allow_nan=False),
            min_size=1,
            max_size=6,
        )
    )
    def test_idempotent(self, v):
        arr = np.asarray(v)
        if np.max(np.abs(arr)) < 1e-6 or abs(arr[0]) < 1e-9:
            return
        once = normalize_direction(arr).components
        twice = normalize_direction(once).components
        assert np.allclose(once, twice, rtol=0, atol=1e-14)

    @given(
        st.lists(
            st.floats(min_value=-1e3, max_value=1e3, allow_nan=False),
            min_size=1,
            max_size=6,
        ),
        st.floats(min_value=1e-4, max_value=1e4, allow_nan=False),
        st.sampled_from([-1.0, 1.0]),
    )
    def test_scale_invariant(self, v, c, sign):
        arr = np.asarray(v)
        if np.max(np.abs(arr)) < 1e-6 or abs(arr[0]) < 1e-9:
            return
        base = normalize_direction(arr).components
        scaled = normalize_direction(sign * c * arr).components
        assert np.allclose(base, scaled, rtol=0, atol=1e-13)


class TestObservationAndDataset:
    def test_observation_enforces_invariants(self):
        with pytest.raises(ValidationError):
            CensoredObservation(y=1.0, delta=2, x=(1.0,), t=0.5)
        with pytest.raises(ValidationError):
            CensoredObservation(y=1.0, delta=1, x=(1.0,), t=1.5)
        with pytest.raises(ValidationError):
            CensoredObservation(y=math.inf, delta=1, x=(1.0,), t=0.5)

    def test_dataset_is_immutable(self):
        ds = make_dataset([1.0, 2.0], [1, 0], [[1.0], [2.0]], [0.1, 0.2])
        with pytest.raises(ValueError):
            ds.y[0] = 99.0

    def test_observations_roundtrip(self):
        ds = make_dataset([1.0, 2.0], [1, 0], [[1.0, 2.0], [3.0, 4.0]], [0.1, 0.2])
        obs = ds.observations
        assert obs[1].delta == 0
        assert obs[1].x == (3.0, 4.0)

    def test_unit_direction_invariants(self):
        with pytest.raises(ValueError):
            UnitDirection(components=np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            UnitDirection(components=np.array([-1.0, 0.0]))


class TestValidateDataset:
    def test_three_valid_rows(self):
        ds = validate_dataset(
            [
                (1.0, 1, (0.5, 0.2), 0.1),
                (2.0, 0, (0.1, 0.9), 0.5),
                (0.5, 1, (0.0, 0.0), 1.0),
            ]
        )
        assert ds.n == 3
        assert ds.d == 2

    def test_bad_delta_names_row(self):
        with pytest.raises(ValidationError, match="row 1"):
            validate_dataset(
                [(1.0, 1, (0.5,), 0.1), (2.0, 2, (0.1,), 0.5), (0.5, 1, (0.2,), 0.9)]
            )

    def test_ragged_covariates(self):
        with pytest.raises(ValidationError, match="ragged covariates"):
            validate_dataset(
                [(1.0, 1, (0.5, 0.1), 0.1), (2.0, 0, (0.1, 0.2, 0.3), 0.5)]
            )

    def test_modifier_out_of_range(self):
        with pytest.raises(ValidationError, match="row 0"):
            validate_dataset([(1.0, 1, (0.5,), -0.1), (2.0, 0, (0.1,), 0.5)])

    def test_non_finite_covariate(self):
        with pytest.raises(ValidationError, match="finite"):
            validate_dataset([(1.0, 1, (np.inf,), 0.1), (2.0, 0, (0.1,), 0.5)])

    def test_too_few_rows(self):
        with pytest.raises(ValidationError, match="at least 2"):
            validate_dataset([(1.0, 1, (0.5,), 0.1)])

    def test_accepts_observation_objects(self):
        rows = [
            CensoredObservation(y=1.0, delta=1, x=(0.5,), t=0.1),
            CensoredObservation(y=2.0, delta=0, x=(0.3,), t=0.9),
        ]
        ds = validate_dataset(rows)
        assert ds.n == 2


def curves_fixture(d0, d1):
    return CoefficientCurves(
        grid=np.array([0.0, 1.0]),
        directions=(
            normalize_direction(np.asarray(d0)),
            normalize_direction(np.asarray(d1)),
        ),
    )


class TestEvaluateCurves:
    def test_exact_grid_hit(self):
        curves = curves_fixture([1.0, 0.0], [0.6, 0.8])
        assert np.allclose(evaluate_curves(curves, 0.0), [1.0, 0.0])
        assert np.allclose(evaluate_curves(curves, 1.0), [0.6, 0.8])

    def test_constant_curve(self):
        curves = curves_fixture([1.0, 0.0], [1.0, 0.0])
        assert np.allclose(evaluate_curves(curves, 0.37), [1.0, 0.0])

    def test_midpoint_interpolation_matches_hand_value(self):
        eps = 0.1
        other = np.array([eps, math.sqrt(1 - eps * eps)])
        curves = curves_fixture([1.0, 0.0], other)
        # hand: average the endpoint vectors, then rescale to unit norm
        blend = 0.5 * np.array([1.0, 0.0]) + 0.5 * other
        expected = blend / math.hypot(*blend)
        got = evaluate_curves(curves, 0.5)
        assert np.allclose(got, expected, atol=1e-15)
        assert abs(np.linalg.norm(got) - 1.0) <= 1e-12

    def test_outside_unit_interval_rejected(self):
        curves = curves_fixture([1.0, 0.0], [0.6, 0.8])
        with pytest.raises(ValueError):
            evaluate_curves(curves, -0.01)
        with pytest.raises(ValueError):
            evaluate_curves(curves, 1.01)

    @given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    @settings(max_examples=50)
    def test_always_unit_norm_positive_first(self, t):
        curves = curves_fixture([1.0, 0.0], [0.1, math.sqrt(0.99)])
        out = evaluate_curves(curves, t)
        assert abs(np.linalg.norm(out) - 1.0) <= 1e-12
        assert out[0] > 0

    def test_partial_grid_clamps_to_ends(self):
        curves = CoefficientCurves(
            grid=np.array([0.25, 0.75]),
            directions=(
                normalize_direction([1.0, 0.0]),
                normalize_direction([0.6, 0.8]),
            ),
        )
        assert np.allclose(evaluate_curves(curves, 0.0), [1.0, 0.0])
        assert np.allclose(evaluate_curves(curves, 1.0), [0.6, 0.8])


class TestCensoringRate:
    def test_all_uncensored(self):
        ds = make_dataset([1, 2], [1, 1], [[0.0], [0.0]], [0.1, 0.2])
        assert censoring_rate(ds) == 0.0

    def test_all_censored(self):
        ds = make_dataset([1, 2], [0, 0], [[0.0], [0.0]], [0.1, 0.2])
        assert censoring_rate(ds) == 1.0

    def test_direct_count(self):
        deltas = [1, 0, 1, 0, 1, 1, 0, 1, 1, 1]
        ds = make_dataset(
            np.arange(10.0), deltas, np.zeros((10, 1)), np.linspace(0, 1, 10)
        )
        assert censoring_rate(ds) == 0.3

    @given(st.lists(st.sampled_from([0, 1]), min_size=2, max_size=40))
    def test_rates_partition_exactly(self, deltas):
        n = len(deltas)
        ds = make_dataset(
            np.arange(float(n)), deltas, np.zeros((n, 1)), np.linspace(0, 1, n)
        )
        censored = Fraction(int(np.sum(np.asarray(deltas) == 0)), n)
        events = Fraction(int(np.sum(np.asarray(deltas) == 1)), n)
        assert censored + events == 1
        assert censoring_rate(ds) == float(censored)
