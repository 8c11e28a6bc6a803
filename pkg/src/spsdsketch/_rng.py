"""Seeded, platform-stable random number generation.

All randomness in the package flows through :func:`generator`, which wraps
numpy's counter-based Philox bit generator.  Philox produces identical
streams on every platform for a given key, so any object built from a
64-bit seed is bit-reproducible.

Substreams are derived from a master seed plus string/integer labels via
:func:`substream` (a keyed BLAKE2b hash, also platform-stable).  Callers
that need several independent draws from one seed label each draw, e.g.
``substream(seed, "signs")`` and ``substream(seed, "columns")``.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def generator(seed):
    """Return a ``numpy.random.Generator`` over Philox keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed) & _MASK64)))


def substream(seed, *labels):
    """Derive a 64-bit sub-seed from ``seed`` and a sequence of labels.

    The derivation is ``master_seed XOR blake2b(labels)``: stable across
    platforms and Python processes (unlike built-in ``hash``).
    """
    h = hashlib.blake2b(digest_size=8)
    for label in labels:
        h.update(repr(label).encode("utf-8"))
        h.update(b"\x1f")
    return (int(seed) ^ int.from_bytes(h.digest(), "little")) & _MASK64
