"""Path-based traffic-engineering experiments: topologies, traffic matrices, LP/MILP routing."""

__version__ = "0.1.0"
