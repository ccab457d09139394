from src.discretization.field import Field
from src.discretization.grid import DomainSpec, Grid, HoleSpec, build_grid, distance_field, restrict_domain
from src.discretization.scheme import DiscreteHJB, apply_Fh, comparison_probe, discretize
