"""clinqgen: build QA datasets (question / logical form / answer evidence)
from existing clinical NLP annotations.

Subpackages follow the pipeline: ``lf`` (logical-form grammar), ``schema``
(ontology schema), ``templates`` (question templates and normalization),
``corpus`` (annotated-corpus model and synthetic fixtures), ``generator``
(template filling and answer-evidence extraction), ``analysis`` (dataset
statistics and paraphrase diversity), ``baselines`` (splits, heuristic
question-to-LF matchers, answer metrics, class predictor).
"""

from clinqgen.lf import (
    LogicalForm,
    classify_lf,
    lf_equal,
    parse_lf,
    serialize_lf,
)
from clinqgen.schema import Schema, load_schema, validate_lf

__all__ = [
    "LogicalForm",
    "Schema",
    "classify_lf",
    "lf_equal",
    "load_schema",
    "parse_lf",
    "serialize_lf",
    "validate_lf",
]

__version__ = "0.1.0"
