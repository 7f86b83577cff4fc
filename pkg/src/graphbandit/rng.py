"""Counter-based random streams keyed by hashing.

Every stream is a numpy ``Philox`` (4x64, 10 rounds) generator whose 128-bit
key is the first 16 bytes of a SHA-256 digest. A run's key hashes
``(master_seed, rep)``; a purpose substream hashes ``(run key, tag)``. The
derivation is fixed by :data:`ALGORITHM_ID`, so another implementation can
reproduce the exact streams.
"""

from __future__ import annotations

import hashlib

import numpy as np

ALGORITHM_ID = "philox4x64-10/sha256-key/v1"


def derive_key(*parts: object) -> int:
    h = hashlib.sha256(ALGORITHM_ID.encode())
    for part in parts:
        data = str(part).encode()
        h.update(len(data).to_bytes(8, "little"))
        h.update(data)
    return int.from_bytes(h.digest()[:16], "little")


def generator(key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key))


class RunStreams:
    """The streams for one repetition of one experiment."""

    def __init__(self, master_seed: int, rep: int):
        self.master_seed = master_seed
        self.rep = rep
        self.key = derive_key("run", master_seed, rep)

    def substream(self, tag: str) -> np.random.Generator:
        return generator(derive_key("sub", self.key, tag))
