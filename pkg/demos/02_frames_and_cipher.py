# %% [markdown]
# # Frames and the iterated CTR cipher
#
# Every message is a fixed-size frame (256 bytes by default). The first
# byte is the message tag and the rest is a little-endian payload padded
# with zeros.

# %%
from gridwsn.crypto import CipherConfig, SchedulingMode, block_encrypt, keystream_nonzero, xcrypt
from gridwsn.wire import EventPayload, NeighborValuePayload, decode, encode

frame = encode(NeighborValuePayload(value=5, iteration=12), 256)
print(frame[:12].hex(" "), "...", len(frame), "bytes")
print(decode(frame))

# %% [markdown]
# With a single round the cipher is plain AES-192 in counter mode, so it
# reproduces the published CTR-AES192 example exactly.

# %%
key = bytes.fromhex("8e73b0f7da0e6452c810f32b809079e562f8ead2522c6b7b")
iv = bytes.fromhex("f0f1f2f3f4f5f6f7f8f9fafbfcfdfeff")
plain = bytes.fromhex("6bc1bee22e409f96e93d7e117393172a")
print("E(iv)      ", block_encrypt(key, iv).hex())
print("ciphertext ", xcrypt(plain, CipherConfig(key, iv, rounds=1))[0].hex())

# %% [markdown]
# The simulator uses 1000 rounds per chunk, each with its own counter, which
# makes every frame cost thousands of block encryptions. Encrypting twice
# gives the frame back, whatever the round count or scheduling mode.

# %%
cfg = CipherConfig()
event = encode(EventPayload(7, (3, 3, 2, -1), 3.003, "2000-01-01 00:00:03.003", 3), 256)
for mode in (SchedulingMode.serial(), SchedulingMode.static(4), SchedulingMode.dynamic(4)):
    ct, seconds = xcrypt(event, cfg, mode)
    assert xcrypt(ct, cfg, mode)[0] == event
    print(f"{mode.label:<10} {seconds * 1e3:7.3f} ms  {ct[:8].hex()}")

# %% [markdown]
# Reusing one counter for every round would cancel out for any even round
# count and leave frames in the clear. The startup check catches that.

# %%
print("distinct counters:", keystream_nonzero(cfg, 16))
print("reused counter:   ", keystream_nonzero(cfg, 16, reuse_counter=True))
