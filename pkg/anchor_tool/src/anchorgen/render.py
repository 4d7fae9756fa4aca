"""Description templates: one global paragraph per dataset, one per variable."""

from __future__ import annotations

from dataclasses import dataclass, field

from anchorgen.stats import VarStats

GLOBAL_TEMPLATE = (
    "The {name} dataset is sourced from the field of {domain} with a frequency "
    "of {frequency}. The dataset is {metadata}. The dataset consists of "
    "{n_variables} variables. The current task objective is to forecast time "
    "series over {prediction_length} future time steps using historical time "
    "series spanning {lookback_length} time steps."
)

VARIABLE_TEMPLATE = (
    "The '{name}' variable is a {domain} measurement recorded at {frequency}."
)

STATS_TEMPLATE = (
    "In the history statistics of this variable, the minimum value is "
    "{minimum:.5f}, the maximum value is {maximum:.5f}, the median value is "
    "{median:.5f}, the mean value is {mean:.5f}, and the overall trend is "
    "{trend}."
)


@dataclass(frozen=True)
class DatasetMeta:
    name: str
    domain: str
    frequency: str
    metadata: str
    var_names: tuple
    prediction_length: int
    lookback_length: int

    def __post_init__(self):
        if not self.var_names:
            raise ValueError("var_names must be non-empty")
        if len(set(self.var_names)) != len(self.var_names):
            raise ValueError("var_names must be unique")


def _require(meta: DatasetMeta, fields):
    for name in fields:
        if not getattr(meta, name):
            raise ValueError(f"meta field {name!r} is empty; refusing partial render")


def render_global(meta: DatasetMeta) -> str:
    """Fill the dataset-level paragraph; no partial renders."""
    _require(meta, ("name", "domain", "frequency", "metadata"))
    return GLOBAL_TEMPLATE.format(
        name=meta.name,
        domain=meta.domain,
        frequency=meta.frequency,
        metadata=meta.metadata,
        n_variables=len(meta.var_names),
        prediction_length=meta.prediction_length,
        lookback_length=meta.lookback_length,
    )


def stats_sentence(stats: VarStats) -> str:
    return STATS_TEMPLATE.format(
        minimum=stats.minimum,
        maximum=stats.maximum,
        median=stats.median,
        mean=stats.mean,
        trend=stats.trend,
    )


def render_variable(meta: DatasetMeta, name: str, stats: VarStats,
                    description: str = None) -> str:
    """A variable paragraph: supplied prose, or the offline template, plus the
    statistics sentence."""
    _require(meta, ("domain", "frequency"))
    if name not in meta.var_names:
        raise ValueError(f"unknown variable {name!r}")
    body = description if description else VARIABLE_TEMPLATE.format(
        name=name, domain=meta.domain, frequency=meta.frequency
    )
    return body + " " + stats_sentence(stats)
