"""Homogenized optics of plasmonic crystals built from conducting 2D sheets.

Modules: materials (Drude sheet conductivity and rescalings), geometry
(prototypical unit-cell cross-sections), meshing (conforming periodic
triangulations), cellsolver (corrector solves), effperm (effective
permittivity tensor), enz (closed-form epsilon-near-zero analysis),
analysis (frequency sweeps, resonance fits, ENZ roots), macrosolver
(2D frequency-domain solver for the homogenized system), cli (plasmahom
command-line front end).
"""

__version__ = "0.1.0"
