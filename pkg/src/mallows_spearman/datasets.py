"""Bundled datasets and reference values for the reproduction commands.

The sushi covariate block and the simulation-study reference grid let the
CLI check its own output against known results; nothing here is required
for ordinary library use.
"""

from __future__ import annotations

import csv
from pathlib import Path

SUSHI_ITEMS = (
    "shrimp",
    "sea eel",
    "tuna",
    "squid",
    "sea urchin",
    "salmon roe",
    "egg",
    "fatty tuna",
    "tuna roll",
    "cucumber roll",
)

SUSHI_COVARIATE_NAMES = ("oil", "eat", "price", "sell")

# item-by-covariate values; oil is scored inversely (small = oily)
SUSHI_COVARIATES = (
    (2.73, 2.14, 1.84, 0.84),
    (0.93, 1.99, 1.99, 0.88),
    (1.77, 2.35, 1.87, 0.88),
    (2.69, 2.04, 1.52, 0.92),
    (0.81, 1.64, 3.29, 0.88),
    (1.26, 1.98, 2.70, 0.88),
    (2.37, 1.87, 1.03, 0.84),
    (0.55, 2.06, 4.49, 0.80),
    (2.25, 1.88, 1.58, 0.44),
    (3.73, 1.46, 1.02, 0.40),
)

# orientations that encode "oily, frequently eaten, expensive, and
# often-sold items are preferred"
SUSHI_ORIENTATIONS = (
    "lower_is_better",   # oil: smaller value means oilier
    "higher_is_better",  # eat
    "higher_is_better",  # price
    "higher_is_better",  # sell
)

# expected per-covariate rank vectors (midranks at ties)
SUSHI_REFERENCE_RANKS = (
    (9, 2, 6, 6.5),
    (3, 5, 4, 3.5),
    (5, 1, 5, 3.5),
    (8, 4, 8, 1),
    (2, 9, 2, 3.5),
    (4, 6, 3, 3.5),
    (7, 8, 9, 6.5),
    (1, 3, 1, 8),
    (6, 7, 7, 9),
    (10, 10, 10, 10),
)

SUSHI_RHO01 = (5.875, 3.875, 3.625, 5.25, 4.125, 4.125, 7.625, 3.25, 7.25, 10)
SUSHI_RHO02 = (7, 3, 2, 6, 4.5, 4.5, 9, 1, 8, 10)


def write_sushi_covariates_csv(path) -> Path:
    """Write the bundled covariate block in the standard CSV layout."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("item",) + SUSHI_COVARIATE_NAMES)
        for item, row in zip(SUSHI_ITEMS, SUSHI_COVARIATES):
            writer.writerow((item,) + row)
    return path


# ---------------------------------------------------------------------------
# Reference grid for the bundled n=4 simulation study.
#
# The study draws N=30 rankings from the model with consensus (2,1,4,3) and
# concentration 0.06, then fits with prior mode (2,1,3,4) under increasing
# prior sample sizes.  SIMSTUDY_SEED regenerates a sample whose mean vector
# rounds to the reference (2.33, 2.17, 3, 2.5); by sufficiency the
# posterior depends on the data only through that mean, so the reference
# probabilities below apply to the regenerated sample as well.

SIMSTUDY_TRUE_RHO = (2, 1, 4, 3)
SIMSTUDY_TRUE_THETA = 0.06
SIMSTUDY_N = 30
SIMSTUDY_RHO0 = (2, 1, 3, 4)
SIMSTUDY_SEED = 151
SIMSTUDY_N0_SETTINGS = (0, 5, 10, 15, 16, 20)

SIMSTUDY_REFERENCE_THETA_MEANS = (0.068, 0.074, 0.065, 0.060, 0.057, 0.055)
SIMSTUDY_REFERENCE_THETA_MLE = 0.08

# rows: the 24 rankings in lexicographic order
# columns: total data distance D, prior distance D*, then one reference
# posterior probability per prior sample size setting
SIMSTUDY_REFERENCE_TABLE = {
    (1, 2, 3, 4): (260, 2, (0.029, 0.038, 0.050, 0.053, 0.053, 0.050)),
    (1, 2, 4, 3): (230, 4, (0.172, 0.125, 0.080, 0.052, 0.050, 0.036)),
    (1, 3, 2, 4): (310, 6, (0.007, 0.003, 0.003, 0.004, 0.004, 0.004)),
    (1, 3, 4, 2): (250, 10, (0.049, 0.010, 0.005, 0.004, 0.004, 0.003)),
    (1, 4, 2, 3): (330, 12, (0.004, 0.001, 0.001, 0.002, 0.002, 0.001)),
    (1, 4, 3, 2): (300, 14, (0.007, 0.002, 0.001, 0.002, 0.001, 0.001)),
    (2, 1, 3, 4): (250, 0, (0.048, 0.129, 0.257, 0.417, 0.436, 0.546)),
    (2, 1, 4, 3): (220, 2, (0.367, 0.579, 0.527, 0.410, 0.386, 0.303)),
    (2, 3, 1, 4): (350, 8, (0.003, 0.001, 0.001, 0.002, 0.002, 0.002)),
    (2, 3, 4, 1): (260, 14, (0.029, 0.005, 0.003, 0.002, 0.002, 0.002)),
    (2, 4, 1, 3): (370, 14, (0.002, 0.001, 0.001, 0.001, 0.001, 0.001)),
    (2, 4, 3, 1): (310, 18, (0.006, 0.001, 0.001, 0.001, 0.001, 0.001)),
    (3, 1, 2, 4): (290, 2, (0.009, 0.010, 0.015, 0.017, 0.023, 0.022)),
    (3, 1, 4, 2): (230, 6, (0.169, 0.065, 0.032, 0.016, 0.017, 0.012)),
    (3, 2, 1, 4): (340, 6, (0.003, 0.002, 0.002, 0.003, 0.003, 0.003)),
    (3, 2, 4, 1): (250, 12, (0.049, 0.007, 0.004, 0.002, 0.002, 0.002)),
    (3, 4, 1, 2): (380, 18, (0.002, 0.001, 0.001, 0.001, 0.001, 0.001)),
    (3, 4, 2, 1): (350, 20, (0.003, 0.001, 0.001, 0.001, 0.001, 0.001)),
    (4, 1, 2, 3): (300, 6, (0.007, 0.005, 0.004, 0.004, 0.004, 0.004)),
    (4, 1, 3, 2): (270, 8, (0.019, 0.007, 0.006, 0.004, 0.004, 0.004)),
    (4, 2, 1, 3): (350, 10, (0.003, 0.002, 0.001, 0.001, 0.002, 0.001)),
    (4, 2, 3, 1): (290, 14, (0.009, 0.002, 0.002, 0.001, 0.001, 0.001)),
    (4, 3, 1, 2): (370, 16, (0.002, 0.001, 0.001, 0.001, 0.001, 0.001)),
    (4, 3, 2, 1): (340, 18, (0.003, 0.001, 0.001, 0.001, 0.001, 0.000)),
}
