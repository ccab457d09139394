from src.solvers.constructions import (
    build_subsolution,
    build_supersolution,
    pucci_constant,
    pucci_scheme,
    supersolution_threshold,
)
from src.solvers.convexity import convex_combination_check
from src.solvers.howard import residual_norm, solve_proper
from src.solvers.newton import semismooth_newton
from src.solvers.perron import perron_iterate
from src.solvers.report import OrderedPair, SolveReport, SolveStatus
