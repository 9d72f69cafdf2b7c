"""carasel: certified selections, random fixed points and equilibrium
certificates for tabulated correspondences on finite atomic spaces."""

from .errors import (
    CaraselError,
    ConstructionError,
    DomainError,
    NoCertificateError,
    ParseError,
    PreconditionError,
)
from .setops import (
    ConvexSet,
    PointSet,
    SetSequence,
    convex_distance,
    convex_hausdorff_dist,
    convex_membership,
    convex_project,
    eps_neighborhood_contains,
    hausdorff_dist,
    interior_point_margin,
    li_limit,
    ls_limit,
)
from .measure import AtomSpace, InfoPartition, Prior, conditional_density, integrate
from .corr import (
    CipWitness,
    Corr,
    GridSpace,
    canonical_witness,
    cip_verify,
    domain,
    k_operator,
    lower_measurable_check,
    lsc_check,
    n_operator,
    scip_verify,
    usc_check,
)
from .selection import (
    PhiResult,
    Selection,
    caratheodory_select,
    construct_phi,
    glue,
    grid_select,
    interior_series,
)
from .equilibria import (
    BayesSpec,
    EquilibriumCertificate,
    FixedPointProfile,
    GameSpec,
    MaximalResult,
    bayes_equilibrium,
    bayes_h,
    maximal_element,
    pref_from_payoff,
    random_equilibrium,
    random_fixed_point,
    random_nash,
)

__version__ = "0.1.0"

__all__ = [
    "AtomSpace",
    "BayesSpec",
    "CaraselError",
    "CipWitness",
    "ConstructionError",
    "ConvexSet",
    "Corr",
    "DomainError",
    "EquilibriumCertificate",
    "FixedPointProfile",
    "GameSpec",
    "GridSpace",
    "InfoPartition",
    "MaximalResult",
    "NoCertificateError",
    "ParseError",
    "PhiResult",
    "PointSet",
    "PreconditionError",
    "Prior",
    "Selection",
    "SetSequence",
    "bayes_equilibrium",
    "bayes_h",
    "canonical_witness",
    "caratheodory_select",
    "cip_verify",
    "conditional_density",
    "construct_phi",
    "convex_distance",
    "convex_hausdorff_dist",
    "convex_membership",
    "convex_project",
    "domain",
    "eps_neighborhood_contains",
    "glue",
    "grid_select",
    "hausdorff_dist",
    "integrate",
    "interior_point_margin",
    "interior_series",
    "k_operator",
    "li_limit",
    "lower_measurable_check",
    "ls_limit",
    "lsc_check",
    "maximal_element",
    "n_operator",
    "pref_from_payoff",
    "random_equilibrium",
    "random_fixed_point",
    "random_nash",
    "scip_verify",
    "usc_check",
]
