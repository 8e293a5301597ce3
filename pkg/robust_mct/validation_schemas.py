"""
Input validation schemas using marshmallow.

Command-line options and scenario grid rows are loaded through these
schemas before any computation starts.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from marshmallow import Schema, ValidationError, fields, post_load, validate, validates_schema

from robust_mct.errors import ConfigError
from robust_mct.settings import DEFAULT_SEED

logger = logging.getLogger(__name__)

ANALYSIS_METHODS = ["dunnett", "satterthwaite", "sandwich", "robust", "npar", "mlt", "colr", "mmm"]
TAILS = ["two.sided", "greater", "less"]
DISTRIBUTIONS = ["Normal", "Mixture10", "Mixture20"]
HYPOTHESES = ["H0", "H1"]


@dataclass
class AnalysisConfig:
    """Validated options of one analysis run."""

    input: str
    method: str
    responses: List[str]
    group_column: str = "Dose"
    control: Optional[str] = None
    tail: str = "two.sided"
    alpha: float = 0.05
    order: int = 5
    df_mode: Optional[str] = None
    link: str = "probit"
    psi: str = "huber"
    output_format: str = "human"
    output: Optional[str] = None
    emit_plot_data: Optional[str] = None
    drop_missing: bool = False
    seed: int = DEFAULT_SEED
    extra: Dict[str, Any] = field(default_factory=dict)


class AnalysisConfigSchema(Schema):
    """Schema for analysis subcommands"""

    input = fields.String(required=True, validate=validate.Length(min=1))
    method = fields.String(required=True, validate=validate.OneOf(ANALYSIS_METHODS))
    responses = fields.List(fields.String(validate=validate.Length(min=1)), required=True, validate=validate.Length(min=1))
    group_column = fields.String(load_default="Dose")
    control = fields.String(load_default=None, allow_none=True)
    tail = fields.String(load_default="two.sided", validate=validate.OneOf(TAILS))
    alpha = fields.Float(load_default=0.05, validate=validate.Range(min=0.0, max=1.0, min_inclusive=False, max_inclusive=False))
    order = fields.Integer(load_default=5, validate=validate.Range(min=1, max=50))
    df_mode = fields.String(load_default=None, allow_none=True, validate=validate.OneOf(["asymptotic", "linear-model"]))
    link = fields.String(load_default="probit", validate=validate.OneOf(["probit", "logit", "identity"]))
    psi = fields.String(load_default="huber", validate=validate.OneOf(["huber", "bisquare"]))
    output_format = fields.String(load_default="human", validate=validate.OneOf(["human", "csv", "json"]))
    output = fields.String(load_default=None, allow_none=True)
    emit_plot_data = fields.String(load_default=None, allow_none=True)
    drop_missing = fields.Boolean(load_default=False)
    seed = fields.Integer(load_default=DEFAULT_SEED, validate=validate.Range(min=0))

    @validates_schema
    def validate_endpoints(self, data, **kwargs):
        if data["method"] == "mmm" and len(data["responses"]) < 2:
            raise ValidationError("mmm needs at least two response columns", field_name="responses")
        if data["method"] != "mmm" and len(data["responses"]) != 1:
            raise ValidationError("Exactly one response column is required", field_name="responses")

    @post_load
    def make_config(self, data, **kwargs):
        return AnalysisConfig(**data)


class GridRowSchema(Schema):
    """Schema for one row of the scenario grid file"""

    scenario_id = fields.String(required=True, validate=validate.Length(min=1, max=100))
    distribution = fields.String(required=True, validate=validate.OneOf(DISTRIBUTIONS))
    xi = fields.Float(required=True, validate=validate.Range(min=1.0))
    n0 = fields.Integer(required=True, validate=validate.Range(min=2))
    n1 = fields.Integer(required=True, validate=validate.Range(min=2))
    n2 = fields.Integer(required=True, validate=validate.Range(min=2))
    n3 = fields.Integer(required=True, validate=validate.Range(min=2))
    hypothesis = fields.String(required=True, validate=validate.OneOf(HYPOTHESES))


def validate_config(schema_class: type, data: Optional[Dict[str, Any]]) -> Any:
    """
    Validate data against a marshmallow schema.

    Args:
        schema_class: The marshmallow schema class to use for validation
        data: The raw data to validate

    Returns:
        Whatever the schema loads (a dict, or an object for schemas with post_load)

    Raises:
        ConfigError: If validation fails
    """
    if data is None:
        raise ConfigError("No configuration data provided")

    schema = schema_class()
    try:
        return schema.load(data)
    except ValidationError as e:
        logger.warning(f"[CLI] Configuration validation failed: {e.messages}")
        raise ConfigError("Invalid configuration", {"fields": e.messages}) from e
