from src.ambrosetti_prodi.bounds import apriori_bound, refined_apriori_bound, tstar_bracket
from src.ambrosetti_prodi.branches import (
    BranchPoint,
    asymptotic_floor,
    asymptotic_slopes,
    lower_branch_gaps,
    slope_deviations,
    trace_branches,
    upper_branch_measure_fraction,
    upper_branch_pointwise,
)
from src.ambrosetti_prodi.calibration import CalibrationResult, bound_ratio, calibrate
from src.ambrosetti_prodi.census import Census, colinearity_fit, comparable, count_solutions
from src.ambrosetti_prodi.context import ProblemContext, prepare_problem
from src.ambrosetti_prodi.tstar import TStarResult, check_monotone_transcript, find_tstar, tstar_continuity_probe
from src.ambrosetti_prodi.verdicts import SolvabilityVerdict, Verdict, solvable
