import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import gridwsn.crypto as crypto
from gridwsn.crypto import (CipherConfig, SchedulingMode, block_encrypt, counter_block,
                            keystream, keystream_nonzero, self_check, xcrypt)
from gridwsn.errors import ConfigurationError, DomainError

import reference_aes

NIST_KEY = bytes.fromhex("8e73b0f7da0e6452c810f32b809079e562f8ead2522c6b7b")
NIST_IV = bytes.fromhex("f0f1f2f3f4f5f6f7f8f9fafbfcfdfeff")
NIST_PLAIN = bytes.fromhex(
    "6bc1bee22e409f96e93d7e117393172a" "ae2d8a571e03ac9c9eb76fac45af8e51"
    "30c81c46a35ce411e5fbc1191a0a52ef" "f69f2445df4f9b17ad2b417be66c3710")
NIST_CIPHER = bytes.fromhex(
    "1abc932417521ca24f2b0459fe7e6e0b" "090339ec0aa6faefd5ccc2c6f4ce8e94"
    "1e36b26bd1ebc670d1bd1d665620abf7" "4f78a7f6d29809585a97daec58c6b050")
MODES = [SchedulingMode.serial(), SchedulingMode.static(4), SchedulingMode.dynamic(4),
         SchedulingMode.static(3), SchedulingMode.dynamic(7)]


def test_block_encrypt_nist_first_counter():
    # first keystream block of the CTR-AES192 vector
    assert block_encrypt(NIST_KEY, NIST_IV).hex() == "717d2dc639128334a6167a488ded7921"


def test_block_encrypt_fips197_aes192():
    key = bytes(range(24))
    plain = bytes.fromhex("00112233445566778899aabbccddeeff")
    out = block_encrypt(key, plain)
    assert out.hex() == "dda97ca4864cdfe06eaf70a0ec0d7191"
    assert reference_aes.decrypt_block(key, out) == plain


@settings(max_examples=25, deadline=None)
@given(st.binary(min_size=24, max_size=24), st.binary(min_size=16, max_size=16))
def test_block_encrypt_matches_reference(key, block):
    assert block_encrypt(key, block) == reference_aes.encrypt_block(key, block)


def test_block_encrypt_bijection_spot_check():
    rng = np.random.default_rng(1)
    blocks = {rng.bytes(16) for _ in range(10_000)}
    cipher = crypto.BlockCipher(NIST_KEY)
    outs = {cipher.encrypt_blocks(b) for b in blocks}
    assert len(outs) == len(blocks)


def test_block_encrypt_bad_sizes():
    with pytest.raises(DomainError):
        block_encrypt(bytes(16), bytes(16))
    with pytest.raises(DomainError):
        block_encrypt(NIST_KEY, bytes(15))


@pytest.mark.parametrize("iv,index,expected", [
    (bytes(16), 5, bytes(15) + b"\x05"),
    (b"\xff" * 16, 1, bytes(16)),
    (NIST_IV, 0, NIST_IV),
    (bytes(8) + b"\xff" * 8, 1, bytes(7) + b"\x01" + bytes(8)),
])
def test_counter_block(iv, index, expected):
    assert counter_block(iv, index) == expected


@pytest.mark.parametrize("mode", MODES, ids=lambda m: m.label)
def test_xcrypt_rounds1_is_nist_ctr(mode):
    cfg = CipherConfig(NIST_KEY, NIST_IV, rounds=1)
    out, duration = xcrypt(NIST_PLAIN, cfg, mode)
    assert out == NIST_CIPHER
    assert duration >= 0
    assert xcrypt(NIST_CIPHER, cfg, mode)[0] == NIST_PLAIN


def reference_xcrypt(frame, key, iv, rounds):
    """Direct transcription of the iterated rule on the table-free AES."""
    chunks = len(frame) // 16
    out = bytearray()
    for c in range(chunks):
        k = bytes(16)
        for r in range(rounds):
            ks = reference_aes.encrypt_block(key, counter_block(iv, r * chunks + c))
            k = bytes(a ^ b for a, b in zip(k, ks))
        out += bytes(a ^ b for a, b in zip(frame[16 * c:16 * c + 16], k))
    return bytes(out)


@pytest.mark.parametrize("rounds", [1, 2, 3])
def test_xcrypt_matches_reference_rule(rounds):
    rng = np.random.default_rng(rounds)
    frame, key, iv = rng.bytes(64), rng.bytes(24), rng.bytes(16)
    got, _ = xcrypt(frame, CipherConfig(key, iv, rounds=rounds))
    assert got == reference_xcrypt(frame, key, iv, rounds)


def test_xcrypt_iv_carry_into_high_word():
    iv = bytes(8) + b"\xff" * 8
    frame = bytes(48)
    got, _ = xcrypt(frame, CipherConfig(NIST_KEY, iv, rounds=2))
    assert got == reference_xcrypt(frame, NIST_KEY, iv, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.binary(min_size=16 * n, max_size=16 * n)),
       st.sampled_from([1, 2, 5]), st.sampled_from(MODES))
def test_involution_property(frame, rounds, mode):
    cfg = CipherConfig(rounds=rounds)
    once, _ = xcrypt(frame, cfg, mode)
    assert xcrypt(once, cfg, mode)[0] == frame


def test_xcrypt_rejects_ragged_frame():
    with pytest.raises(DomainError):
        xcrypt(bytes(17), CipherConfig(rounds=1))


def test_xcrypt_empty_frame():
    assert xcrypt(b"", CipherConfig(rounds=1))[0] == b""


def test_block_accounting(monkeypatch):
    """Every mode performs exactly C x R block encryptions."""
    real = crypto.BlockCipher.encrypt_blocks
    counted = []

    def counting(self, blocks):
        counted.append(len(blocks) // 16)
        return real(self, blocks)

    monkeypatch.setattr(crypto.BlockCipher, "encrypt_blocks", counting)
    cfg = CipherConfig(rounds=7)
    for mode in MODES:
        counted.clear()
        xcrypt(bytes(256), cfg, mode)
        assert sum(counted) == 16 * 7, mode.label


def test_keystream_nonzero():
    assert keystream_nonzero(CipherConfig(rounds=1000), 16)
    assert keystream_nonzero(CipherConfig(rounds=1), 4)
    assert not keystream_nonzero(CipherConfig(rounds=2), 16, reuse_counter=True)
    assert not keystream_nonzero(CipherConfig(rounds=1000), 16, reuse_counter=True)
    assert keystream_nonzero(CipherConfig(rounds=3), 16, reuse_counter=True)
    with pytest.raises(DomainError):
        keystream(CipherConfig(), 0)


def test_keystream_is_ciphertext_of_zeros():
    cfg = CipherConfig(rounds=4)
    assert keystream(cfg, 16) == xcrypt(bytes(256), cfg)[0]


def test_self_check_passes_default():
    self_check(CipherConfig(), 256)


def test_self_check_rejects_identity_cipher(monkeypatch):
    monkeypatch.setattr(crypto, "keystream_nonzero", lambda *a, **k: False)
    with pytest.raises(ConfigurationError):
        crypto.self_check(CipherConfig(), 256)


def test_key_file_round_trip(tmp_path):
    cfg = CipherConfig(bytes(range(24)), bytes(range(100, 116)), rounds=3)
    path = tmp_path / "key.bin"
    cfg.write_key_file(path)
    assert path.stat().st_size == 40
    assert CipherConfig.from_key_file(path, rounds=3) == cfg
    path.write_bytes(bytes(39))
    with pytest.raises(ConfigurationError):
        CipherConfig.from_key_file(path)


@pytest.mark.parametrize("text,label", [
    ("serial", "serial"), ("static:4", "static:4"), ("dynamic:2", "dynamic:2"),
    ("dynamic", "dynamic:4"), (" Static:3 ", "static:3"),
])
def test_parse_sched(text, label):
    assert SchedulingMode.parse(text).label == label


@pytest.mark.parametrize("bad", ["static:0", "fast:4", "static:x", "dynamic:-2"])
def test_parse_sched_errors(bad):
    with pytest.raises(ConfigurationError):
        SchedulingMode.parse(bad)


def test_cipher_config_validation():
    with pytest.raises(ConfigurationError):
        CipherConfig(bytes(16), NIST_IV)
    with pytest.raises(ConfigurationError):
        CipherConfig(rounds=0)
