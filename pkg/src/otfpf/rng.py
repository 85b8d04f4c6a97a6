"""Named, reproducible random streams derived from one root seed.

Every source of randomness is a :class:`numpy.random.Generator` backed by
PCG64. A stream is identified by the root seed plus a tuple of labels; each
label is hashed (BLAKE2b, 8 bytes, little endian) into the ``spawn_key`` of a
:class:`numpy.random.SeedSequence`. Distinct label tuples therefore give
statistically independent streams, and the mapping does not depend on the
order in which streams are requested.

Labels in use:

* ``("truth",)``        - initial state and process noise of the hidden signal
* ``("observation",)``  - observation noise
* ``("ensemble",)``     - initial particle draws
* ``("dynamics",)``     - per-particle Brownian increments
* ``("replication", r)`` - derives the integer seed of replication ``r``
* ``("observation-path",)`` - shared path of a comparison study
"""

import hashlib

import numpy as np


def _label_key(label):
    digest = hashlib.blake2b(repr(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _seed_sequence(root_seed, labels):
    if int(root_seed) < 0:
        raise ValueError(f"seed must be non-negative, got {root_seed}")
    return np.random.SeedSequence(int(root_seed), spawn_key=tuple(_label_key(l) for l in labels))


def stream(root_seed, *labels):
    """Return the generator for the stream named by ``labels`` under ``root_seed``."""
    return np.random.Generator(np.random.PCG64(_seed_sequence(root_seed, labels)))


def derive_seed(root_seed, *labels):
    """Return a 63-bit integer seed for a child computation.

    Used where a whole sub-run must be reproducible from a single integer,
    e.g. one replication of a variance study.
    """
    state = _seed_sequence(root_seed, labels).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))
