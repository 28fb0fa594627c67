"""Deterministic random number plumbing.

All randomness in the package flows through a numpy PCG64 Generator. Normal
variates are produced by an explicit Box-Muller transform on the uniform
stream rather than Generator.standard_normal, so the exact values drawn for
a given seed are pinned by this module and not by numpy's ziggurat tables.
Seeds for sub-streams (one per benchmark repetition) are derived with a
keyed blake2b hash; Python's builtin hash() is salted per process and is
never used.
"""

from __future__ import annotations

import hashlib

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Fresh PCG64 generator for a nonnegative integer seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal draws via Box-Muller on rng's uniform stream.

    Consumes 2*ceil(n/2) uniforms for n outputs. 1 - U keeps the log
    argument in (0, 1].
    """
    shape = (size,) if np.isscalar(size) else tuple(size)
    n = int(np.prod(shape)) if shape else 1
    pairs = (n + 1) // 2
    u1 = 1.0 - rng.random(pairs)
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([radius * np.cos(2.0 * np.pi * u2),
                        radius * np.sin(2.0 * np.pi * u2)])[:n]
    return z.reshape(shape) if shape else z[0]


def derive_seed(base_seed: int, *parts) -> int:
    """Stable 63-bit sub-stream seed from a base seed and a coordinate tuple.

    XORs the base seed with a blake2b digest of the repr of ``parts``.
    Deterministic across processes and platforms.
    """
    tag = repr(parts).encode("utf-8")
    digest = hashlib.blake2b(tag, digest_size=8).digest()
    mixed = int(base_seed) ^ int.from_bytes(digest, "big")
    return mixed & 0x7FFFFFFFFFFFFFFF
