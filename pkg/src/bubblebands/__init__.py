"""Band structures of square lattices of air bubbles in a fluid.

Subwavelength resonance solver built on a multipole (cylindrical-harmonic)
discretisation of the quasi-periodic single-layer potential, with Ewald
summation for the lattice sums, a Minnaert-type capacity approximation for
the first band, and a small suite of slow brute-force references used to
cross-check every fast path.
"""

__version__ = "0.1.0"
