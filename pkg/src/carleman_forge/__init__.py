"""Numerical verification lab for a Carleman weight/phase construction
and weighted semiclassical resolvent norms of radial Schrodinger operators."""

__version__ = "0.1.0"

from . import (  # noqa: F401
    errors,
    fitting,
    potential_model,
    scales,
    weight_phase,
)
from . import (  # noqa: F401  (depend on the modules above)
    harness,
    inequality_verifier,
    resolvent_lab,
)
