"""Simulation and statistical checks for exchangeable composition and interval fragmentations."""
from .compositions import Composition, Partition, enumerate_compositions, frag, restrict, shift
from .intervals import Interval, MassPartition, OpenSet, distance, embed, is_nested, ranked_lengths
from .measures import FragmentationCharacteristics, laplace_exponent

__all__ = [
    "Composition", "Partition", "enumerate_compositions", "frag", "restrict", "shift",
    "Interval", "MassPartition", "OpenSet", "distance", "embed", "is_nested", "ranked_lengths",
    "FragmentationCharacteristics", "laplace_exponent",
]
