"""Quantum Wang-Landau sampling of the transverse-field Ising chain.

Energies are drawn by simulated phase estimation from the infinite-temperature
state, fed to a Wang-Landau density-of-states estimator, and compared with a
quantum Metropolis baseline and exact diagonalization.
"""

__version__ = "0.1.0"
