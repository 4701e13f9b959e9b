"""Deterministic RNG sub-streams.

Every random draw in a run comes from a generator keyed by
``(seed, quadrature, purpose[, group])``, so groups can be simulated in any
order or in parallel and still reproduce bit-identical output::

    seed
      └── quadrature (0 = X, 1 = P)
            ├── ALICE            symbols
            ├── ASSIGN           attenuation choice per pulse
            └── GROUP + k
                  ├── physics    modulation and detection noise
                  └── attack     intercept-resend, wavelength sign
"""

from __future__ import annotations

import numpy as np

ALICE = 0
ASSIGN = 1
GROUP = 2


def quadrature_id(quadrature: str) -> int:
    return {"X": 0, "P": 1}[quadrature]


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


def alice_stream(seed: int, quadrature: str) -> np.random.Generator:
    return stream(seed, quadrature_id(quadrature), ALICE)


def assign_stream(seed: int, quadrature: str) -> np.random.Generator:
    return stream(seed, quadrature_id(quadrature), ASSIGN)


def group_streams(seed: int, quadrature: str, atten_index: int):
    """Return ``(physics, attack)`` generators for one group."""
    ss = np.random.SeedSequence([int(seed), quadrature_id(quadrature), GROUP + int(atten_index)])
    physics, attack = ss.spawn(2)
    return np.random.default_rng(physics), np.random.default_rng(attack)
