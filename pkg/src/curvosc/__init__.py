"""Curved harmonic oscillator on spaces of constant curvature.

Modules:
    ktrig      curvature-dependent trigonometric functions
    wavealg    exact symbolic wavefunctions
    qops       quantum operators and relation checks
    spectrum   representations, ladder states and spectra
    classical  phase-space functions, Poisson brackets and trajectories
    cli        command-line front end
"""

__version__ = "0.1.0"
