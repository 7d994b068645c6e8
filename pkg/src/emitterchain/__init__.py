"""Few-photon scattering for small emitter chains in a 1D waveguide.

Single-photon transmission and reflection (closed forms and a transfer-matrix
composer), pole analysis, and two-photon observables (inelastic flux,
fluorescence spectra, second-order coherence, rectification) computed with a
weak-coherent-drive master-equation engine cross-validated against the
closed-form pair results.
"""

__version__ = "0.1.0"
