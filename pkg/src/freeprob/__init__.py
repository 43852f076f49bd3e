"""
freeprob: noncrossing-partition cumulant calculus, S-transforms, Brown-measure
predictions for R-diagonal elements, and a seeded random-matrix harness.

Submodules
----------
ncpart      noncrossing partitions, joins, Kreweras complements
freecum     scalar free cumulants, freeness and R-diagonality checks
opval       matrix-valued (M_N) cumulants and amalgamated freeness
transforms  R- and S-transforms, discrete measures
brown       radial Brown-measure laws and annuli radii
trimodel    block triangular square roots and the triangular matrix model
randmat     random-matrix ensembles and spectral diagnostics
cli         command-line scenarios
"""
from .errors import (
    DomainError,
    FreeProbError,
    InvalidInputError,
    NotInvertibleError,
    ResourceLimitError,
    TracialityError,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FreeProbError",
    "InvalidInputError",
    "NotInvertibleError",
    "ResourceLimitError",
    "TracialityError",
    "__version__",
]
