"""Per-dataset benchmark presets: model configuration rows and split rules."""

from __future__ import annotations

from contextst.data import SplitSpec, ett_split_spec
from contextst.errors import DataFormatError
from contextst.model import ModelConfig

# (n_bands, patch_len, d_model, n_heads, n_blocks, n_experts, top_r)
_MODEL_ROWS = {
    "etth1": (1, 24, 256, 2, 1, 4, 2),
    "etth2": (2, 24, 256, 2, 1, 4, 2),
    "ettm1": (2, 24, 256, 4, 2, 4, 2),
    "ettm2": (2, 24, 256, 4, 2, 4, 2),
    "electricity": (3, 24, 512, 8, 4, 4, 2),
    "weather": (3, 24, 512, 8, 4, 4, 2),
    "traffic": (4, 24, 512, 8, 4, 4, 2),
}

PRESET_NAMES = tuple(sorted(_MODEL_ROWS))


def model_preset(name, lookback=96, horizon=96, d_context=384, **overrides) -> ModelConfig:
    key = name.lower()
    if key not in _MODEL_ROWS:
        raise DataFormatError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    k, p, d, h, j, m, r = _MODEL_ROWS[key]
    fields = dict(
        n_bands=k, patch_len=p, lookback=lookback, horizon=horizon,
        d_model=d, n_heads=h, n_blocks=j, n_experts=m, top_r=r,
        d_context=d_context, kappa=25,
    )
    fields.update(overrides)
    return ModelConfig(**fields)


def split_preset(name, lookback=96) -> SplitSpec:
    key = name.lower()
    if key in ("etth1", "etth2", "ettm1", "ettm2"):
        return ett_split_spec(key, lookback)
    return SplitSpec(mode="ratio", ratios=(0.7, 0.1, 0.2), eval_overlap=lookback)
