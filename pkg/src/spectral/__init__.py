from src.spectral.certificate import eigen_lower_bound_certificate
from src.spectral.eigen import (
    EigenPair,
    collatz_wielandt,
    domain_monotonicity_gap,
    hopf_ratio,
    principal_half_eigen,
    principal_pair,
)
