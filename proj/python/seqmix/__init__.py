"""Clustering of categorical sequences with exponential-distance mixture models.

Thin python surface over the C++ core: build a :class:`Dataset` from rows of
state labels (or ``read_csv``), then :func:`fit` a model or run
:func:`grid_search`, and inspect responsibilities, BIC and silhouettes.
"""

from ._core import (
    Dataset,
    EstimationError,
    FittedModel,
    InputError,
    dbs,
    fit,
    grid_search,
    read_csv,
    two_step_regress,
    wasw,
    wdbs,
    wlbs_se,
)

__all__ = [
    "Dataset",
    "EstimationError",
    "FittedModel",
    "InputError",
    "dbs",
    "fit",
    "grid_search",
    "read_csv",
    "two_step_regress",
    "wasw",
    "wdbs",
    "wlbs_se",
]
