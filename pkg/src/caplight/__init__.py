"""caplight: concentration inequalities, spectral estimates, and heat-equation
null-control on round spheres (circle and 2-sphere), at desk scale.

Subpackages
-----------
geometry       points, caps, regions, segments, covers, thickness
quadrature     exact-degree rules and polar-coordinate integration
harmonics      orthonormal eigenbasis, polynomials, norms, exponential sums
turan          sup-norm bounds for exponential sums and cap-local inequalities
concentration  restricted Gram matrices and sharp concentration constants
heat_control   heat semigroup, observability, HUM and staged null-control
cli            reproducible experiment runner (``caplight`` console script)
"""

from . import (  # noqa: F401
    concentration,
    geometry,
    harmonics,
    heat_control,
    quadrature,
    turan,
)

__version__ = "0.1.0"
