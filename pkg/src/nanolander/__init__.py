"""Simulation toolkit for asteroid nano-landers.

Modules:
    gravity: polyhedron gravity field of a homogeneous small body.
    mobility: propelled hops and reaction-wheel tumbling/hopping.
    swarm: virtual-force coverage control for lander swarms.
    evolve: NSGA-II search over swarm design parameters.
    config, cli: scenario files and the command-line front end.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
