"""Joint detection of communities and their signed relations.

Memberships ``U`` and relations ``H`` are fit from an interaction matrix ``R``
and a signed attitude matrix ``S``.
"""

from .analysis import assign, extract_relations, majority_label
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DAACError,
    DegenerateVarianceError,
    DimensionError,
    DomainError,
    ParseError,
)
from .ingest import LabeledDataset, Relation, build_dataset, load_dataset
from .matcore import SparseMatrix
from .metrics import score_all
from .solver import SolverConfig, SolverResult, fit
from .stats import validate_hypothesis, welch_t_test_one_sided
from .synth import PlantedSpec, australia_like, generate

__version__ = "0.1.0"
