"""Fermionic star products, Clifford quantisation and polarised states.

The package works on the Grassmann algebra of an m-dimensional real inner
product space.  Elements are :class:`Multivector` objects stored on a
bitmask basis, either exactly (coefficients are Laurent polynomials in hbar
over Q(i)) or numerically at a fixed hbar.
"""

from __future__ import annotations

from .clifford import *  # noqa: F401,F403
from .forms import *  # noqa: F401,F403
from .hilbert import *  # noqa: F401,F403
from .multivector import *  # noqa: F401,F403
from .polarization import *  # noqa: F401,F403
from .sampling import *  # noqa: F401,F403
from .scalars import *  # noqa: F401,F403
from .star import *  # noqa: F401,F403
from .sw import *  # noqa: F401,F403
from .transport import *  # noqa: F401,F403
from .worked import *  # noqa: F401,F403
from . import clifford, forms, hilbert, multivector, polarization, sampling, scalars, star, sw, transport, worked

__version__ = "0.1.0"

__all__ = sorted(
    set(clifford.__all__) | set(forms.__all__) | set(hilbert.__all__) | set(multivector.__all__)
    | set(polarization.__all__) | set(sampling.__all__) | set(scalars.__all__) | set(star.__all__)
    | set(sw.__all__) | set(transport.__all__) | set(worked.__all__)
)
