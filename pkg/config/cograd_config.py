"""
Cograduation Slope Estimation Configuration
Numerical rules for ranking, null tables, quadrature, simulation and output.
"""

# =============================================================================
# RANKING AND STEP FUNCTION RULES
# =============================================================================
RANKING_RULES = {
    "tie_relative_tolerance": 1e-12,  # Fraction of the data spread under which float residuals tie
    "tie_rounding_ulps": 8,           # Rounding floor, in units of machine epsilon times the data magnitude
    "step_function_max_n": 5000,      # O(N^2) slope table guard
}

# =============================================================================
# NULL DISTRIBUTION RULES
# =============================================================================
NULL_RULES = {
    "enumeration_ceiling": 10,   # 10! = 3,628,800 permutations
    "enumeration_chunk": 5040,   # Permutations scored per numpy batch (7!)
    "level_decimals": 2,         # Published tables quote levels to two decimals
    "default_mc_reps": 20000,
    "min_mc_reps": 1000,
}

# =============================================================================
# QUADRATURE RULES
# =============================================================================
QUADRATURE_RULES = {
    "c_abs_tol": 1e-8,
    "c_fail_tol": 1e-6,            # QuadratureFailure above this error estimate
    "b_abs_tol": 1e-9,
    "symmetric_route_tol": 1e-7,   # Even-density route for C must agree this well
    "degenerate_c_tol": 1e-10,
    "subdivision_limit": 200,
    "validation_grid_points": 24,  # Even, so the grid never hits u = 0.5
    "quantile_roundtrip_tol": 1e-8,
    "derivative_check_tol": 1e-5,
    "psi_table_n": 20000,          # N used to tabulate psi for designs without closed form
    "psi_table_points": 2001,
}

# =============================================================================
# SIMULATION RULES
# =============================================================================
SIMULATION_RULES = {
    "min_reps": 100,
    "default_workers": 1,
    "chunk_size": 250,    # Replications per worker task
}

# =============================================================================
# OUTPUT RULES
# =============================================================================
OUTPUT_RULES = {
    "schema_version": 1,
    "json_indent": 2,
    "infinity_token": "inf",
}

SUPPORTED_MODELS = ["normal", "laplace", "cauchy", "uniform"]
SUPPORTED_DESIGNS = ["linear", "geometric"]
NULL_METHODS = ["exact", "monte_carlo", "normal"]

# =============================================================================
# HELPER FUNCTIONS
# =============================================================================

def get_ranking_rule(rule_name: str):
    """Get a ranking / step function rule."""
    return RANKING_RULES.get(rule_name)

def get_null_rule(rule_name: str):
    """Get a null distribution rule."""
    return NULL_RULES.get(rule_name)

def get_quadrature_rule(rule_name: str):
    """Get a quadrature rule."""
    return QUADRATURE_RULES.get(rule_name)

def get_simulation_rule(rule_name: str):
    """Get a simulation rule."""
    return SIMULATION_RULES.get(rule_name)

def get_output_rule(rule_name: str):
    """Get an output rule."""
    return OUTPUT_RULES.get(rule_name)

def is_supported_model(name: str) -> bool:
    """Check if an error law is built in."""
    return name in SUPPORTED_MODELS

def is_supported_design(name: str) -> bool:
    """Check if a design sequence is built in."""
    return name in SUPPORTED_DESIGNS
