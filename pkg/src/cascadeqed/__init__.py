"""Cascaded ultrastrong-coupling qubit-cavity simulator.

A single-photon wavepacket drives two unidirectionally coupled qubit-cavity
subsystems; the package builds the dressed models, integrates the Fock-state
master-equation hierarchy and evaluates delayed joint qubit correlations.
"""

__version__ = "0.1.0"
