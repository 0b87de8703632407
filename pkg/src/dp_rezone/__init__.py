"""dp-rezone: privacy-aware school attendance boundary simulation.

Privatizes per-block student counts with epsilon-differential privacy, solves
a diversity-minimizing block-to-school assignment under travel, capacity, and
contiguity constraints, and quantifies the privacy-diversity tradeoff across
replicated simulations.
"""

__version__ = "0.1.0"
