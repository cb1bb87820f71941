import numpy as np
import pytest

from cowlink.errors import ParameterError
from cowlink.randomness import BitSource, monobit_pvalue, runs_pvalue


def test_zero_length_draw():
    src = BitSource(1)
    out = src.next_bits(0)
    assert out.size == 0
    assert src.counter == 0


def test_identical_seeds_identical_streams():
    a = BitSource("0xdeadbeef").next_bits(64)
    b = BitSource("0xdeadbeef").next_bits(64)
    assert np.array_equal(a, b)


def test_counter_advances_by_exactly_n():
    src = BitSource(2)
    src.next_bits(7)
    assert src.counter == 7
    src.next_bits(64)
    assert src.counter == 71


def test_uniform_marginal_million_bits():
    bits = BitSource(3).next_bits(10**6)
    ones = bits.mean()
    # binomial 3-sigma band around 0.5 at n=1e6 is +/- 0.0015
    assert 0.497 <= ones <= 0.503


def test_monobit_and_runs_pass_at_alpha_001():
    for seed in range(3):
        bits = BitSource(100 + seed).next_bits(10**6)
        assert monobit_pvalue(bits) > 0.01
        assert runs_pvalue(bits) > 0.01


class TestBernoulli:
    def test_p_zero_always_false(self):
        src = BitSource(4)
        assert not any(src.bernoulli(0.0) for _ in range(100))

    def test_p_one_always_true(self):
        src = BitSource(5)
        assert all(src.bernoulli(1.0) for _ in range(100))

    def test_consumes_one_word_per_draw(self):
        src = BitSource(6)
        before = src.counter
        src.bernoulli(0.3)
        assert src.counter - before == 64

    def test_fraction_within_3_sigma(self):
        hits = BitSource(7).bernoulli_array(0.1, 10**6)
        frac = hits.mean()
        assert 0.097 <= frac <= 0.103

    def test_rejects_bad_probability(self):
        with pytest.raises(ParameterError):
            BitSource(8).bernoulli(1.5)


class TestFork:
    def test_same_label_same_stream(self):
        s = BitSource(9)
        a = s.fork("alice").next_bits(256)
        b = s.fork("alice").next_bits(256)
        assert np.array_equal(a, b)

    def test_distinct_labels_diverge_in_first_128_bits(self):
        s = BitSource(10)
        a = s.fork("alice").next_bits(128)
        b = s.fork("bob").next_bits(128)
        assert not np.array_equal(a, b)

    def test_fork_does_not_disturb_parent(self):
        s1 = BitSource(11)
        s2 = BitSource(11)
        s1.fork("a")
        s1.fork("b").next_bits(1000)
        assert np.array_equal(s1.next_bits(512), s2.next_bits(512))

    def test_empty_label_rejected(self):
        with pytest.raises(ParameterError):
            BitSource(12).fork("")

    def test_child_depends_only_on_seed_and_label(self):
        one = BitSource(13)
        one.next_bits(999)  # parent position must not matter
        two = BitSource(13)
        assert np.array_equal(
            one.fork("x").next_bits(64), two.fork("x").next_bits(64)
        )


def test_seed_formats_agree():
    assert np.array_equal(
        BitSource("0xff").next_bits(64), BitSource(255).next_bits(64)
    )
    with pytest.raises(ParameterError):
        BitSource("zz")


def test_permutation_is_a_permutation():
    perm = BitSource(14).permutation(1000)
    assert np.array_equal(np.sort(perm), np.arange(1000))


def test_binomial_tracks_mean():
    src = BitSource(15)
    n, p = 10**6, 3e-4
    draws = [src.binomial(n, p) for _ in range(50)]
    mean = np.mean(draws)
    # 50-sample mean of Binomial(1e6, 3e-4): sigma_mean ~ 2.45
    assert abs(mean - n * p) < 10
