"""Exact simulation of Brownian motion on spheres and projective spaces."""
from .errors import ConvergenceError, DomainError, RegimeError
from .projective import (
    ProjectivePoint,
    Quaternion,
    canonicalize,
    field_inner,
    project,
    projective_distance,
    quaternion_inner,
    sample_projective_increment,
)
from .rng import RngStream
from .sphere import (
    HouseholderFrame,
    IncrementDraw,
    SpherePoint,
    apply_frame,
    geodesic_distance,
    householder_to,
    north_pole,
    sample_increment,
    sample_increment_radius,
    sample_path,
)
from .validation import StatReport, euler_maruyama_sphere, euler_maruyama_wf
from .wright_fisher import (
    EXACT_FLOOR,
    DeathProcessLaw,
    WrightFisherLaw,
    death_pmf,
    death_pmf_table,
    sample_ainf,
    sample_ainf_gaussian,
    sample_wf_increment,
    simulate_death_process,
    wf_mixture_cdf,
)

__version__ = "0.1.0"
