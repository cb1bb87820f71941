import pytest

from cowlink.distillation.entropy import (
    binary_entropy,
    compute_secret_length,
    eve_info_bound,
    resolve_eve_bound,
)
from cowlink.errors import ParameterError


def test_binary_entropy_endpoints():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0


def test_binary_entropy_reference_value():
    assert binary_entropy(0.019) == pytest.approx(0.1368, abs=1e-4)


def test_binary_entropy_symmetry():
    for p in (0.1, 0.25, 0.4):
        assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p))


def test_eve_bound_endpoints():
    assert eve_info_bound(1.0) == 0.0
    assert eve_info_bound(0.0) == 1.0


def test_eve_bound_reference_value():
    assert eve_info_bound(0.92) == pytest.approx(0.2423, abs=1e-3)


def test_eve_bound_monotone_non_increasing():
    values = [eve_info_bound(v / 20) for v in range(21)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_secret_length_perfect_visibility_margin_only():
    assert compute_secret_length(1000, 0, 1.0, 0.25) == 996  # n - 4


def test_secret_length_zero_visibility():
    assert compute_secret_length(1000, 0, 0.0, 0.25) == 0


def test_secret_length_monotonicity():
    base = compute_secret_length(4096, 500, 0.9, 1e-9)
    assert compute_secret_length(4096, 600, 0.9, 1e-9) <= base
    assert compute_secret_length(4096, 500, 0.95, 1e-9) >= base


def test_secret_length_never_negative():
    assert compute_secret_length(100, 10_000, 0.5, 1e-9) == 0


def test_resolve_eve_bound():
    assert resolve_eve_bound("coherence") is eve_info_bound
    custom = lambda v: 0.5  # noqa: E731
    assert resolve_eve_bound(custom) is custom
    with pytest.raises(ParameterError):
        resolve_eve_bound("nonsense")


def test_parameter_validation():
    with pytest.raises(ParameterError):
        binary_entropy(1.2)
    with pytest.raises(ParameterError):
        compute_secret_length(0, 0, 1.0, 0.5)
    with pytest.raises(ParameterError):
        compute_secret_length(10, 0, 1.0, 1.0)
