"""LLM evaluation harness: prompts, providers, scoring, matrix runs and reports."""
from .contract import ANSWER_TAGS, FailureMode, format_answer, parse_answer, score
from .prompts import PromptTemplate, load_template, load_templates, render_prompts
from .providers import HttpProvider, LlmExchange, MockProvider, ProviderConfig, load_model_configs
from .report import EvalReport, aggregate
from .runner import BlueprintCase, RecordStore, RunRecord, load_cases, read_records, run_matrix

__all__ = [
    "ANSWER_TAGS", "FailureMode", "format_answer", "parse_answer", "score",
    "PromptTemplate", "load_template", "load_templates", "render_prompts",
    "HttpProvider", "LlmExchange", "MockProvider", "ProviderConfig", "load_model_configs",
    "EvalReport", "aggregate",
    "BlueprintCase", "RecordStore", "RunRecord", "load_cases", "read_records", "run_matrix",
]
