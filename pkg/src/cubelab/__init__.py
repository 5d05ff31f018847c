"""cubelab: recursive-partitioning regression on the uniform Boolean cube.

Sparse Fourier representations of target functions, CART / random-forest /
ERM / completely-random tree estimators, exact L2 risk via restricted
Fourier expansions, closed-form risk lower bounds, and an experiment
harness with deterministic sweeps.
"""

from .boolcube import Cell, Dataset, NoiseModel, sample_dataset, split_cell
from .bounds import (
    BoundReport,
    best_robust_bound,
    gamma_window,
    nonmsp_bound,
    rate_values,
    robust_bound,
    selection_prob_bounds,
    xor_bound,
)
from .erm import ErmParams, enumerate_erm_oracle, fit_erm
from .fourier import (
    SparseFourier,
    cut_analysis,
    inverse_wht,
    is_smsp,
    min_traversal,
    msp_closure,
    msp_residual,
    parse_function,
    restrict,
    sid_lambda,
    smsp_lambda,
    wht,
)
from .greedy import (
    CartParams,
    ForestParams,
    fit_cart,
    fit_forest,
    fit_random_tree,
    impurity,
    impurity_decrease,
    register_criterion,
)
from .harness import (
    ExperimentConfig,
    GridPoint,
    config_from_dict,
    run_fit,
    run_sweep,
    run_validation,
)
from .trees import (
    Forest,
    Internal,
    Leaf,
    TreeModel,
    coverage,
    exact_risk,
    expected_path_length,
    predict,
    predict_rows,
    query_path,
    selection_probability,
    tree_from_dict,
    tree_to_dict,
)

__version__ = "0.1.0"
