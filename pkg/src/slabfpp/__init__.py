"""Monte Carlo toolkit for critical first-passage percolation on slabs Z^2 x {0..k}."""
__version__ = "0.1.0"

from .config import EdgeConfig, FrozenMask, from_bits, resample_outside, sample, substream  # noqa: E402
from .lattice import Region, SlabLattice  # noqa: E402

__all__ = ["EdgeConfig", "FrozenMask", "Region", "SlabLattice", "from_bits", "resample_outside", "sample",
           "substream", "__version__"]
