"""Feature-model analysis toolkit: IR, blueprint and UVL front ends, exact solver, AO1-AO16, LLM harness."""
from .analysis import AoKind, AoResult, AnalysisError, run_ao, run_all
from .blueprint import load_blueprint, parse_blueprint, render_blueprint, resolve, generate_variant, token_count
from .model import (Completeness, Configuration, FeatureModel, FmError, RelKind, enumerate_configurations,
                    semantics, validate_model)
from .uvl import parse_uvl, render_uvl

__version__ = "0.1.0"

__all__ = [
    "AoKind", "AoResult", "AnalysisError", "run_ao", "run_all",
    "load_blueprint", "parse_blueprint", "render_blueprint", "resolve", "generate_variant", "token_count",
    "Completeness", "Configuration", "FeatureModel", "FmError", "RelKind", "enumerate_configurations",
    "semantics", "validate_model", "parse_uvl", "render_uvl", "__version__",
]
