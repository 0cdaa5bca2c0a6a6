"""Versioned defaults: tolerances and discretization parameters.

Every acceptance-style comparison reads its tolerance from here; configs
may override individual entries via the "tolerances" block.
"""

SCHEMA_VERSION = 1

DEFAULTS = {
    # comparisons
    "beta_bound_slack": 0.0,
    "norm_identity_rel": 1e-3,
    "identity_abs": 1e-10,
    "clt_var_rel": 0.10,
    "ad_level": 0.01,
    "second_regime_var_rel": 0.15,
    "skewness_min": 0.5,
    "lift_var_rel": 0.15,
    "diag_envelope_factor": 10.0,
    "diag_decrease_factor": 2.0,
    # discretizations
    "J_pop": 10**5,
    "M_series": 10**4,
    "rosenblatt_M": 4096,
    "rosenblatt_L": 50.0,
    "distance_L": 10.0,
    "distance_resolution": 8,
    "mc_batch": 64,
}
