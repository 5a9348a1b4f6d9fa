"""Verification harness: identity suites, reports and the JSON evaluator."""

from __future__ import annotations

from .cli import main, run
from .config import SUITES, ConfigError, SuiteConfig
from .evaluate import OPERATIONS, EvalError, evaluate, evaluate_document
from .report import SCHEMA_VERSION, CheckRecord, Report
from .suites import SUITE_CAPS, run_suite

__all__ = [
    "SUITES", "SUITE_CAPS", "SCHEMA_VERSION", "ConfigError", "SuiteConfig", "CheckRecord", "Report",
    "EvalError", "OPERATIONS", "evaluate", "evaluate_document", "run", "run_suite", "main",
]
