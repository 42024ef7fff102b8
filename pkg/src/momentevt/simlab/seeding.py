"""Per-replication seeds.

``derive_seed`` hashes the tuple ``(master, experiment_id, n, replication)``
with BLAKE2b (8-byte digest) over the ASCII text
``"{master}:{experiment_id}:{n}:{replication}"`` and reads the digest as a
little-endian unsigned integer. This mapping is part of the file format: the
same tuple gives the same seed in every version.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, experiment_id: str, n: int, replication: int) -> int:
    text = f"{int(master)}:{experiment_id}:{int(n)}:{int(replication)}".encode("ascii")
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def replication_rng(master: int, experiment_id: str, n: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, experiment_id, n, replication))
