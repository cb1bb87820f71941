import numpy as np
import pytest

from cowlink.distillation.auth import AuthKeyPool, poly_hash_gf64, wc_tag, wc_verify
from cowlink.errors import KeyDepletionError, ParameterError
from cowlink.randomness import BitSource


def fresh_pool(bits=4096, seed=31) -> AuthKeyPool:
    return AuthKeyPool(BitSource(seed).next_bits(bits))


def paired_pools(bits=4096, seed=31):
    pool = fresh_pool(bits, seed)
    return pool, pool.clone()


def test_round_trip_accepts():
    sender, receiver = paired_pools()
    msg = b"the quick brown photon"
    tag = wc_tag(sender, msg)
    assert wc_verify(receiver, msg, tag)


def test_same_message_twice_different_tags():
    sender, _ = paired_pools()
    t1 = wc_tag(sender, b"repeat")
    t2 = wc_tag(sender, b"repeat")
    assert t1 != t2


def test_flipped_bit_rejected():
    sender, receiver = paired_pools()
    msg = bytearray(b"payload under test")
    tag = wc_tag(sender, bytes(msg))
    msg[4] ^= 0x01
    assert not wc_verify(receiver, bytes(msg), tag)


def test_truncated_message_rejected():
    sender, receiver = paired_pools()
    msg = b"length is authenticated too"
    tag = wc_tag(sender, msg)
    assert not wc_verify(receiver, msg[:-1], tag)


def test_zero_length_extension_rejected():
    sender, receiver = paired_pools()
    msg = b"\x01\x02"
    tag = wc_tag(sender, msg)
    assert not wc_verify(receiver, msg + b"\x00", tag)


def test_consumption_strictly_monotone_no_reuse():
    pool = fresh_pool()
    for _ in range(8):
        wc_tag(pool, b"x")
    spans = [(start, start + n) for start, n, _ in pool.ledger]
    for (a_start, a_end), (b_start, b_end) in zip(spans, spans[1:]):
        assert b_start == a_end  # contiguous, never overlapping
    assert pool.consumed == sum(n for _, n, _ in pool.ledger)


def test_depletion_raises():
    pool = AuthKeyPool(BitSource(32).next_bits(100))
    with pytest.raises(KeyDepletionError):
        wc_tag(pool, b"too big for the pool")


def test_tag_len_bounds():
    pool = fresh_pool()
    with pytest.raises(ParameterError):
        wc_tag(pool, b"m", tag_len=0)
    with pytest.raises(ParameterError):
        wc_tag(pool, b"m", tag_len=65)


def test_poly_hash_depends_on_every_block():
    key = 0x1234_5678_9ABC_DEF0
    base = poly_hash_gf64(key, b"A" * 24)
    for pos in (0, 8, 16, 23):
        tweaked = bytearray(b"A" * 24)
        tweaked[pos] ^= 0x80
        assert poly_hash_gf64(key, bytes(tweaked)) != base


def test_forgery_resistance_sampled():
    # single-bit tampering across 300 messages: no false accepts at 64-bit tags
    src = BitSource(33)
    accepted = 0
    for i in range(300):
        sender, receiver = paired_pools(seed=1000 + i)
        msg = bytearray(np.packbits(src.next_bits(256)).tobytes())
        tag = wc_tag(sender, bytes(msg))
        flip = int(src.words(1)[0]) % (len(msg) * 8)
        msg[flip // 8] ^= 1 << (flip % 8)
        if wc_verify(receiver, bytes(msg), tag):
            accepted += 1
    assert accepted == 0


def test_replenish_extends_pool():
    pool = AuthKeyPool(BitSource(34).next_bits(128))
    wc_tag(pool, b"spend")
    pool.replenish(BitSource(35).next_bits(256))
    assert pool.available == 128 - 128 + 256
    wc_tag(pool, b"works again")
