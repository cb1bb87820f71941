import numpy as np
import pytest

from cowlink.distillation.toeplitz import ToeplitzSeed, toeplitz_hash, toeplitz_hash_naive
from cowlink.errors import ParameterError
from cowlink.randomness import BitSource


def test_worked_example():
    # T for input [1,1,0], out_len 2, seed [1,0,1,1]:
    #   rows (1,0,1) and (1,1,0) -> output (1, 0)
    seed = ToeplitzSeed(np.array([1, 0, 1, 1], dtype=np.uint8))
    out = toeplitz_hash(seed, np.array([1, 1, 0], dtype=np.uint8), 2)
    assert out.tolist() == [1, 0]
    assert toeplitz_hash_naive(seed, np.array([1, 1, 0], dtype=np.uint8), 2).tolist() == [1, 0]


def test_zero_output_length():
    seed = ToeplitzSeed(np.array([1, 0, 1], dtype=np.uint8))
    assert toeplitz_hash(seed, np.array([1, 0, 1], dtype=np.uint8), 0).size == 0


def test_seed_length_mismatch_rejected():
    seed = ToeplitzSeed(np.array([1, 0, 1], dtype=np.uint8))
    with pytest.raises(ParameterError):
        toeplitz_hash(seed, np.array([1, 0, 1], dtype=np.uint8), 4)


def test_matches_naive_oracle_small_inputs():
    src = BitSource(21)
    for in_len in range(1, 13):
        out_len = max(1, in_len - 2)
        seed = ToeplitzSeed(src.next_bits(in_len + out_len - 1))
        x = src.next_bits(in_len)
        assert np.array_equal(
            toeplitz_hash(seed, x, out_len), toeplitz_hash_naive(seed, x, out_len)
        )


def test_matches_naive_oracle_large_input_fft_path():
    src = BitSource(22)
    in_len, out_len = 20_000, 4_000
    seed = ToeplitzSeed(src.next_bits(in_len + out_len - 1))
    x = src.next_bits(in_len)
    assert np.array_equal(
        toeplitz_hash(seed, x, out_len), toeplitz_hash_naive(seed, x, out_len)
    )


def test_gf2_linearity():
    src = BitSource(23)
    in_len, out_len = 96, 32
    seed = ToeplitzSeed(src.next_bits(in_len + out_len - 1))
    for _ in range(50):
        x = src.next_bits(in_len)
        y = src.next_bits(in_len)
        lhs = toeplitz_hash(seed, x ^ y, out_len)
        rhs = toeplitz_hash(seed, x, out_len) ^ toeplitz_hash(seed, y, out_len)
        assert np.array_equal(lhs, rhs)


def test_collision_rate_sampled():
    # fixed x != y; collisions over random seeds should sit near 2^-16
    src = BitSource(24)
    in_len, out_len = 40, 16
    x = src.next_bits(in_len)
    y = x.copy()
    y[3] ^= 1
    y[17] ^= 1
    collisions = 0
    trials = 2000
    for _ in range(trials):
        seed = ToeplitzSeed(src.next_bits(in_len + out_len - 1))
        if np.array_equal(toeplitz_hash(seed, x, out_len), toeplitz_hash(seed, y, out_len)):
            collisions += 1
    p = 2.0**-16
    bound = p + 3 * (p * (1 - p) / trials) ** 0.5
    assert collisions / trials <= bound
