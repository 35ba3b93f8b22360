"""Allocation of quantum measurement resources over hypergraph networks.

Subpackages and modules:
  qcore            measurement primitives (kets, POVMs, assemblies, MUBs)
  incompatibility  joint measurability and generalized robustness
  allocation       hypergraphs, closed-form optimal allocations, performance
  equitability     knapsack instances and exact lexicographic max-min
  bell             correlation evaluators, operator identities, bounds
  kernels          projection feasibility kernels (compiled + numpy twin)
  cli              deterministic command-line reports
"""

__version__ = "0.1.0"
