"""AES-192 counter-mode frame transformation with an iterated workload.

A frame is split into ``C = len(frame) // 16`` chunks. Chunk ``c`` is
XORed with

    K_c = E(ctr(iv, 0*C + c)) ^ E(ctr(iv, 1*C + c)) ^ ... ^ E(ctr(iv, (R-1)*C + c))

where ``E`` is the AES-192 forward cipher and ``R`` the round count. Every
round of every chunk uses a fresh counter, so the keystream never cancels
itself out for even ``R``. With ``R == 1`` this is plain CTR mode.

The loop over chunks is the unit of parallel work. The output bytes do not
depend on the scheduling mode, only the timing does.
"""

from __future__ import annotations

import functools
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, ClassVar

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import ConfigurationError, DomainError

BLOCK_SIZE = 16
KEY_SIZE = 24
DEFAULT_ROUNDS = 1000
KEY_FILE_SIZE = KEY_SIZE + BLOCK_SIZE

# SP 800-38A CTR-AES192 key and initial counter block
DEFAULT_KEY = bytes.fromhex("8e73b0f7da0e6452c810f32b809079e562f8ead2522c6b7b")
DEFAULT_IV = bytes.fromhex("f0f1f2f3f4f5f6f7f8f9fafbfcfdfeff")


@dataclass(frozen=True)
class CipherConfig:
    key: bytes = DEFAULT_KEY
    iv: bytes = DEFAULT_IV
    rounds: int = DEFAULT_ROUNDS

    chunk_size: ClassVar[int] = BLOCK_SIZE

    def __post_init__(self):
        if len(self.key) != KEY_SIZE:
            raise ConfigurationError(f"AES-192 key must be {KEY_SIZE} bytes, got {len(self.key)}")
        if len(self.iv) != BLOCK_SIZE:
            raise ConfigurationError(f"IV must be {BLOCK_SIZE} bytes, got {len(self.iv)}")
        if self.rounds < 1:
            raise ConfigurationError(f"rounds must be >= 1, got {self.rounds}")

    @classmethod
    def from_key_file(cls, path, rounds: int = DEFAULT_ROUNDS) -> "CipherConfig":
        """Load a 40-byte file: the raw 24-byte key followed by the 16-byte IV."""
        raw = Path(path).read_bytes()
        if len(raw) != KEY_FILE_SIZE:
            raise ConfigurationError(
                f"key file {path} must be exactly {KEY_FILE_SIZE} bytes, got {len(raw)}"
            )
        return cls(raw[:KEY_SIZE], raw[KEY_SIZE:], rounds)

    def write_key_file(self, path) -> None:
        Path(path).write_bytes(self.key + self.iv)


class Operation(str, Enum):
    ENCRYPT = "encrypt"
    DECRYPT = "decrypt"


@dataclass(frozen=True)
class TimingSample:
    rank: int
    iteration: int
    operation: Operation
    duration: float


@dataclass(frozen=True)
class SchedulingMode:
    """How the chunk loop is spread over workers.

    ``serial`` runs on the calling thread. ``static`` hands each worker one
    contiguous, equally sized range of chunks up front. ``dynamic`` lets
    workers claim the lowest unclaimed chunk from a shared counter.
    """

    kind: str = "serial"
    workers: int = 1

    KINDS: ClassVar[tuple[str, ...]] = ("serial", "static", "dynamic")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown scheduling mode {self.kind!r}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.kind == "serial" and self.workers != 1:
            object.__setattr__(self, "workers", 1)

    @classmethod
    def serial(cls) -> "SchedulingMode":
        return cls("serial", 1)

    @classmethod
    def static(cls, workers: int) -> "SchedulingMode":
        return cls("static", workers)

    @classmethod
    def dynamic(cls, workers: int) -> "SchedulingMode":
        return cls("dynamic", workers)

    @classmethod
    def parse(cls, text: str) -> "SchedulingMode":
        """Parse ``serial``, ``static:N`` or ``dynamic:N``."""
        kind, _, workers = text.strip().lower().partition(":")
        try:
            return cls(kind, int(workers) if workers else (1 if kind == "serial" else 4))
        except ValueError as exc:
            raise ConfigurationError(f"bad scheduling mode {text!r}") from exc

    @property
    def label(self) -> str:
        return "serial" if self.kind == "serial" else f"{self.kind}:{self.workers}"

    def __str__(self) -> str:
        return self.label


class BlockCipher:
    """AES forward cipher over a run of 16-byte blocks (ECB, no chaining).

    Not thread-safe; every worker holds its own instance.
    """

    def __init__(self, key: bytes):
        self._ctx = Cipher(algorithms.AES(key), modes.ECB()).encryptor()

    def encrypt_blocks(self, blocks: bytes) -> bytes:
        return self._ctx.update(blocks)


def block_encrypt(key: bytes, block: bytes) -> bytes:
    if len(key) != KEY_SIZE or len(block) != BLOCK_SIZE:
        raise DomainError(f"need a {KEY_SIZE}-byte key and a {BLOCK_SIZE}-byte block")
    return BlockCipher(key).encrypt_blocks(block)


def counter_block(iv: bytes, index: int) -> bytes:
    """``iv + index`` as 128-bit big-endian integers, modulo 2**128."""
    value = (int.from_bytes(iv, "big") + index) % (1 << 128)
    return value.to_bytes(BLOCK_SIZE, "big")


@functools.lru_cache(maxsize=16)
def _counter_table(iv: bytes, chunks: int, rounds: int, reuse: bool = False) -> tuple[bytes, ...]:
    # chunk c -> concatenated counter blocks for rounds 0..R-1
    r = np.arange(rounds, dtype=np.uint64)[None, :]
    c = np.arange(chunks, dtype=np.uint64)[:, None]
    index = c + (np.uint64(0) if reuse else r * np.uint64(chunks))
    index = np.broadcast_to(index, (chunks, rounds))
    hi0 = np.uint64(int.from_bytes(iv[:8], "big"))
    lo0 = np.uint64(int.from_bytes(iv[8:], "big"))
    lo = lo0 + index
    hi = hi0 + (lo < lo0).astype(np.uint64)
    table = np.empty((chunks, rounds, 2), dtype=">u8")
    table[..., 0] = hi
    table[..., 1] = lo
    return tuple(table[i].tobytes() for i in range(chunks))


def _chunk_keystream(cipher: BlockCipher, counters: bytes) -> np.ndarray:
    ks = np.frombuffer(cipher.encrypt_blocks(counters), dtype=np.uint64).reshape(-1, 2)
    return np.bitwise_xor.reduce(np.ascontiguousarray(ks.T), axis=1)


def _run_serial(data: np.ndarray, key: bytes, counters: tuple[bytes, ...]) -> None:
    cipher = BlockCipher(key)
    for c in range(len(counters)):
        data[c] ^= _chunk_keystream(cipher, counters[c])


def _run_static(data, key, counters, workers: int) -> None:
    n = len(counters)
    workers = min(workers, n)
    size, extra = divmod(n, workers)
    bounds, start = [], 0
    for w in range(workers):
        stop = start + size + (1 if w < extra else 0)
        bounds.append((start, stop))
        start = stop

    def work(lo: int, hi: int) -> None:
        cipher = BlockCipher(key)
        for c in range(lo, hi):
            data[c] ^= _chunk_keystream(cipher, counters[c])

    _in_pool(workers, [functools.partial(work, lo, hi) for lo, hi in bounds])


def _run_dynamic(data, key, counters, workers: int) -> None:
    n = len(counters)
    claim_lock = threading.Lock()
    next_chunk = [0]

    def work() -> None:
        cipher = BlockCipher(key)
        while True:
            with claim_lock:
                c = next_chunk[0]
                next_chunk[0] += 1
            if c >= n:
                return
            data[c] ^= _chunk_keystream(cipher, counters[c])

    _in_pool(workers, [work] * min(workers, n))


_pools = threading.local()


def _worker_pool(workers: int) -> ThreadPoolExecutor:
    # one long-lived team per calling thread and size, the way each process
    # keeps its own thread team; it is released with the thread that owns it
    cache = getattr(_pools, "by_size", None)
    if cache is None:
        cache = _pools.by_size = {}
    pool = cache.get(workers)
    if pool is None:
        pool = cache[workers] = ThreadPoolExecutor(max_workers=workers,
                                                   thread_name_prefix="xcrypt")
    return pool


def _in_pool(workers: int, tasks: list[Callable[[], None]]) -> None:
    pool = _worker_pool(workers)
    for future in [pool.submit(t) for t in tasks]:
        future.result()


def xcrypt(frame: bytes, config: CipherConfig, mode: SchedulingMode = SchedulingMode()) -> tuple[bytes, float]:
    """Encrypt or decrypt ``frame``; returns the result and the elapsed seconds.

    The same call inverts itself: ``xcrypt(xcrypt(f)[0])[0] == f``.
    """
    start = time.perf_counter()
    if len(frame) % BLOCK_SIZE:
        raise DomainError(f"frame length {len(frame)} is not a multiple of {BLOCK_SIZE}")
    chunks = len(frame) // BLOCK_SIZE
    if chunks == 0:
        return bytes(frame), time.perf_counter() - start
    counters = _counter_table(config.iv, chunks, config.rounds)
    data = np.frombuffer(frame, dtype=np.uint64).reshape(chunks, 2).copy()
    if mode.kind == "serial":
        _run_serial(data, config.key, counters)
    elif mode.kind == "static":
        _run_static(data, config.key, counters, mode.workers)
    else:
        _run_dynamic(data, config.key, counters, mode.workers)
    out = data.tobytes()
    return out, time.perf_counter() - start


def keystream(config: CipherConfig, chunks: int, *, reuse_counter: bool = False) -> bytes:
    """The per-chunk keys ``K_0 .. K_{C-1}`` concatenated.

    ``reuse_counter=True`` models the naive schedule in which every round of
    a chunk reuses the same counter; with an even round count it collapses
    to all zeros.
    """
    if chunks < 1:
        raise DomainError("chunks must be >= 1")
    counters = _counter_table(config.iv, chunks, config.rounds, reuse_counter)
    data = np.zeros((chunks, 2), dtype=np.uint64)
    _run_serial(data, config.key, counters)
    return data.tobytes()


def keystream_nonzero(config: CipherConfig, chunks: int, *, reuse_counter: bool = False) -> bool:
    return any(keystream(config, chunks, reuse_counter=reuse_counter))


def self_check(config: CipherConfig, packsize: int) -> None:
    """Refuse to run with a keystream that leaves frames in the clear."""
    if not keystream_nonzero(config, packsize // BLOCK_SIZE):
        raise ConfigurationError("cipher configuration yields an all-zero keystream")
