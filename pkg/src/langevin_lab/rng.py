"""Counter-based noise streams for reproducible parallel Monte Carlo.

Every random draw in the package is keyed by (seed, stream tag, counter
index) through a Philox generator, so results are bit-identical for a
given seed no matter how the work is scheduled or chunked.
"""

import numpy as np

# Stream tags. Keeping them in one place guarantees streams never collide.
STEP_NOISE = 0        # LMC step noise, counter = step index
INIT_NOISE = 1        # ensemble initialization
INTERP_NOISE = 2      # fresh Brownian increments for the interpolated process
PATH_NOISE = 3        # Brownian paths in the MGF checks
PROBE_NOISE = 4       # probe points for gradient / Hoelder verification
GRID_SAMPLE = 5       # inverse-CDF sampling from grid densities
DIFFUSION_PATH = 6    # Euler substeps of the diffusion in the MGF checks

_TAG_SHIFT = np.uint64(56)


def generator(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Philox generator for stream (seed, tag, index).

    index must fit in 56 bits; tags occupy the top byte of the second
    key word so distinct (tag, index) pairs map to distinct keys.
    """
    if index < 0 or index >= (1 << 56):
        raise ValueError(f"stream index out of range: {index}")
    key = np.array(
        [np.uint64(seed), (np.uint64(tag) << _TAG_SHIFT) | np.uint64(index)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def normals(seed: int, tag: int, index: int, shape) -> np.ndarray:
    """Standard normal block for stream (seed, tag, index)."""
    return generator(seed, tag, index).standard_normal(shape)
