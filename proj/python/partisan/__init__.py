"""Partisan alignment toolkit: KL divergence and class tendency metrics over
stance, emotion and moral foundation labels, plus the corpus pipeline."""

import json

from ._core import (
    STANCE_INSTRUCTION,
    PartisanError,
    ValidationError,
    __version__,
    build_probe_prompts,
    class_distribution,
    class_names,
    extract_distinctive_terms,
    issue_presets,
    kl_divergence,
    parse_stance_response,
    render_stance_prompt,
    run_cli,
    tendency_accuracy,
    tokenize,
)


def load_corpus(path):
    """Validated corpus instances as dicts."""
    return [json.loads(line) for line in _core_load(path)]


def _core_load(path):
    from ._core import load_corpus_lines

    return load_corpus_lines(str(path))


__all__ = [
    "STANCE_INSTRUCTION",
    "PartisanError",
    "ValidationError",
    "__version__",
    "build_probe_prompts",
    "class_distribution",
    "class_names",
    "extract_distinctive_terms",
    "issue_presets",
    "kl_divergence",
    "load_corpus",
    "parse_stance_response",
    "render_stance_prompt",
    "run_cli",
    "tendency_accuracy",
    "tokenize",
]
