"""Structural-partition graph convolutional networks.

Thin wrapper over the _kgcn extension module: graph construction, per-node
structural partitioning, component-wise aggregation, k-GCN layers, training,
and the grid-equivalence harness.
"""

try:
    # installed wheel layout: the extension lives inside the package
    from ._kgcn import *  # noqa: F401,F403
    from ._kgcn import __version__  # noqa: F401
except ImportError:
    # development layout: the extension sits on sys.path (cmake build dir)
    from _kgcn import *  # noqa: F401,F403
    from _kgcn import __version__  # noqa: F401
