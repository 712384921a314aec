"""Numerical toolkit for harmonic-map style energies of generalized Lagrange metrics.

Subpackages of functionality:

* :mod:`glharmonic.jets` -- second-order forward-mode differentiation
* :mod:`glharmonic.chart` and :mod:`glharmonic.riemannian` -- metrics, Christoffel symbols, curvature
* :mod:`glharmonic.glmetric` -- conformal GL metrics, EM tensors, Maxwell and Einstein quantities
* :mod:`glharmonic.variational` -- the ``L_T`` functional, system residuals, energies on meshes
* :mod:`glharmonic.flows` -- orbits and Euler-Lagrange geodesics
* :mod:`glharmonic.scenarios` and :mod:`glharmonic.cli` -- built-in scenarios and the batch runner
"""

from .chart import MetricField, ScalarField
from .errors import (
    ConfigError,
    DegenerateMetricError,
    DomainError,
    ExcludedSetError,
    GLHarmonicError,
    IntegrationError,
    SingularLocusError,
)
from .glmetric import LEVI_CIVITA, DConnection, GLMetric
from .jets import Jet
from .variational import DirectionSection, MeshQuadrature, SmoothMap

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DConnection",
    "DegenerateMetricError",
    "DirectionSection",
    "DomainError",
    "ExcludedSetError",
    "GLHarmonicError",
    "GLMetric",
    "IntegrationError",
    "Jet",
    "LEVI_CIVITA",
    "MeshQuadrature",
    "MetricField",
    "ScalarField",
    "SingularLocusError",
    "SmoothMap",
]
