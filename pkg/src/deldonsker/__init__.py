"""Monte Carlo checks of Donsker-type limits for complete and deleting-item
partial-sum, empirical and sequential empirical processes."""

from deldonsker.errors import ConfigError, DomainError
from deldonsker.sampling import DistributionSpec, SampleSequence, SeededStream, draw_iid
from deldonsker.deletion import (
    DeletionPlan,
    DeletionSchedule,
    make_overlapping_pair,
    make_plan,
    negligibility_ratio,
)
from deldonsker.processes import (
    EmpiricalPath,
    PathOnGrid,
    SequentialField,
    TestFunction,
    build_deleted_partial_sum,
    build_empirical,
    build_partial_sum,
    build_sequential_field,
    empirical_sup_abs,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "DistributionSpec",
    "SampleSequence",
    "SeededStream",
    "draw_iid",
    "DeletionPlan",
    "DeletionSchedule",
    "make_overlapping_pair",
    "make_plan",
    "negligibility_ratio",
    "EmpiricalPath",
    "PathOnGrid",
    "SequentialField",
    "TestFunction",
    "build_deleted_partial_sum",
    "build_empirical",
    "build_partial_sum",
    "build_sequential_field",
    "empirical_sup_abs",
]
