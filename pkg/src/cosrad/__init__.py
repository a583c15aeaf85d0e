"""Co-spectral radii of subgroups, percolation clusters and subrelations of random walks."""
from .errors import CosradError
from .graphs import GroupFamily, RootedGraph, SubgroupOracle, build_ball, build_schreier
from .walks import WalkKernel, evolve, hit_probability

__version__ = "0.1.0"

__all__ = [
    "CosradError",
    "GroupFamily",
    "RootedGraph",
    "SubgroupOracle",
    "WalkKernel",
    "build_ball",
    "build_schreier",
    "evolve",
    "hit_probability",
]
