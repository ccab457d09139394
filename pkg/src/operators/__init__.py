from src.operators.coefficients import CoefficientField, LinearCoefficients, parse_expression
from src.operators.controlled import (
    ControlledOperator,
    PointState,
    Sign,
    asymptotic_operator,
    eval_F,
    fucik_operator,
    laplacian_operator,
    normalize_inhomogeneity,
    operator_from_controls,
    plateau_operator,
    pucci_extremal,
    pucci_operator,
)
from src.operators.structure import StructureReport, check_structure
