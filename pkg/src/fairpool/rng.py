"""Counter-based uniform draws keyed by ``(seed, index)``.

The generator is Philox4x64-10 (numpy's ``Philox`` bit generator) with the
64-bit seed as its key. Sample ``index`` owns a fixed run of counter blocks,
``ceil(width / 4)`` of them starting at block ``index * ceil(width / 4)``, and
each 64-bit word becomes one uniform ``(word >> 11) * 2**-53`` in [0, 1).
Any slice of indices can therefore be drawn independently, in any chunking or
order, and reproduce the sequential stream bit for bit.
"""

from __future__ import annotations

import numpy as np

SEED_BITS = 64
_WORDS_PER_BLOCK = 4
_MASK64 = (1 << 64) - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < (1 << SEED_BITS):
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def uniforms(seed: int, start: int, stop: int, width: int) -> np.ndarray:
    """Uniforms for sample indices ``start..stop-1``, shape ``(stop - start, width)``."""
    seed = check_seed(seed)
    if start < 0 or stop < start:
        raise ValueError(f"invalid index range [{start}, {stop})")
    count = stop - start
    if width == 0 or count == 0:
        return np.zeros((count, width))
    blocks = -(-width // _WORDS_PER_BLOCK)
    first = start * blocks
    counter = [first & _MASK64, (first >> 64) & _MASK64, 0, 0]
    bitgen = np.random.Philox(key=seed, counter=counter)
    raw = bitgen.random_raw(count * blocks * _WORDS_PER_BLOCK)
    raw = raw.reshape(count, blocks * _WORDS_PER_BLOCK)[:, :width]
    return (raw >> np.uint64(11)).astype(float) * 2.0**-53
