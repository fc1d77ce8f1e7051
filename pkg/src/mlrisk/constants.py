"""Numerical tolerances shared across the package.

Every threshold used for validation or degeneracy detection lives here so a
caller can audit (or temporarily override) them in one place.
"""

# Correlation matrix validity.
DIAG_TOL = 1e-10
SYMMETRY_TOL = 1e-12
PSD_TOL = -1e-10

# Specific variances may dip below zero by round-off only.
SPECIFIC_VARIANCE_TOL = -1e-10

# Eigenvalues below EIG_CLAMP * max(eigenvalues) are treated as zero.
EIG_CLAMP = 1e-12

# Tail eigenvalue spread (relative to the largest eigenvalue) below which the
# tail counts as already flat and deformations return their input unchanged.
FLAT_TAIL_TOL = 1e-12

# Singular values below RANK_TOL * max count as zero in rank checks.
RANK_TOL = 1e-10

# Sampling weights must sum to one within this tolerance.
WEIGHT_SUM_TOL = 1e-12

# Scale for median absolute deviation, same constant as R's mad().
MAD_SCALE = 1.4826

# Quantile convention for eigenvalue summaries (numpy "linear" == R type 7).
QUANTILE_METHOD = "linear"

# k-means defaults.
KMEANS_ITER_MAX = 100
KMEANS_RESTARTS = 10
