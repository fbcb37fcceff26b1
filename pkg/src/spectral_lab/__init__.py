"""Numerical toolkit for spectral bounds of magnetic Schrodinger operators.

Library layers:

* :mod:`spectral_lab.basis` / :mod:`spectral_lab.potentials` /
  :mod:`spectral_lab.assembly` -- truncated bases, closed-form potential
  families, dense operator assembly.
* :mod:`spectral_lab.eigensolver` -- dense complex QR eigensolver with a
  compiled kernel and a pure-Python fallback.
* :mod:`spectral_lab.phase_space` -- escape function, Weyl quantization,
  Moyal and Garding checks.
* :mod:`spectral_lab.norms` -- discrete L^p norms, operator-norm power
  iteration, resolvent/projection/smoothing scans.
* :mod:`spectral_lab.enclosure` -- complex-potential eigenvalue
  enclosure sweeps.
* :mod:`spectral_lab.cli` -- the ``spectral-lab`` command line front end.
"""

__version__ = "0.1.0"
