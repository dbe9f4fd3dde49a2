"""Online POMDP planning with adaptive Voronoi-tree action discretization."""

__version__ = "0.1.0"
