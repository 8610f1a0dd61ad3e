"""
Error codes and templates for structured error handling across the workbench.
"""

from __future__ import annotations

from enum import Enum


class ErrorCategory(str, Enum):
    """
    High level error categories
    """

    CONFIGURATION = "configuration"
    VALIDATION = "validation"
    FILE_SYSTEM = "file system"
    COMPUTATION = "computation"
    SIMULATION = "simulation"
    TRAINING = "training"
    PIPELINE = "pipeline"
    REPORT = "report"


class ErrorCode(str, Enum):
    """
    Enumeration of error codes used throughout the workbench.

    Error codes are organized by category:
    - 1xxx: Configuration errors
    - 4xxx: Validation errors
    - 5xxx: File system errors
    - 6xxx: Computation errors
    - 7xxx: Simulation errors
    - 8xxx: Training errors
    - 9xxx: Pipeline errors
    - 10xxx: Report generation errors
    """

    # Configuration errors (1xxx)
    CONFIG_FILE_MISSING = "1001"
    CONFIG_MISSING_PARAMETERS = "1002"
    CONFIG_INVALID_FILE = "1003"
    CONFIG_INVALID_YAML = "1004"
    CONFIG_INVALID_JSON = "1005"
    CONFIG_INVALID_VALUE = "1006"
    CONFIG_VALIDATION_FAILED = "1007"
    CONFIG_UNKNOWN_MODE = "1008"

    # Validation errors (4xxx)
    VALIDATION_INVALID_PARAMETER = "4001"
    VALIDATION_MISSING_PARAMETER = "4002"
    VALIDATION_INVALID_LENGTH = "4003"
    VALIDATION_LENGTH_MISMATCH = "4004"
    VALIDATION_SAMPLE_TOO_LARGE = "4005"

    # File system errors (5xxx)
    FILE_NOT_FOUND = "5001"
    FILE_READ_ERROR = "5002"
    FILE_WRITE_ERROR = "5003"
    FILE_HASH_MISMATCH = "5008"

    # Computation errors (6xxx)
    COMPUTATION_INVALID_INPUT = "6002"
    COMPUTATION_SHAPE_MISMATCH = "6003"
    COMPUTATION_NON_FINITE = "6004"
    COMPUTATION_NOT_POSITIVE_DEFINITE = "6005"
    COMPUTATION_DEGENERATE_BASIS = "6006"

    # Simulation errors (7xxx)
    SIMULATION_INVALID_STATE = "7001"
    SIMULATION_INTEGRATION_FAILED = "7002"
    SIMULATION_INVALID_ACTION = "7003"

    # Training errors (8xxx)
    TRAINING_DIVERGED = "8001"
    TRAINING_OFFLINE_CONTRACT_BROKEN = "8002"

    # Pipeline errors (9xxx)
    PIPELINE_STAGE_FAILED = "9001"
    PIPELINE_UNKNOWN_RECIPE = "9003"

    # Report generation errors (10xxx)
    REPORT_WRITE_FAILED = "10003"
    REPORT_TEMPLATE_ERROR = "10004"


class ErrorTemplate:
    """
    Template for creating structured error messages.
    """

    def __init__(
        self,
        category: ErrorCategory,
        user_message: str,
    ) -> None:
        self.category = category
        self.message = user_message

    def to_string(self) -> str:
        """
        Converts the error template to its string representation.
        """
        return self.message


ERRORS: dict[str, ErrorTemplate] = {
    # Configuration errors
    ErrorCode.CONFIG_MISSING_PARAMETERS: ErrorTemplate(
        category=ErrorCategory.CONFIGURATION,
        user_message="required parameters are missing: ",
    ),
    ErrorCode.CONFIG_FILE_MISSING: ErrorTemplate(
        category=ErrorCategory.CONFIGURATION,
        user_message="path provided for configuration was not found",
    ),
    ErrorCode.CONFIG_INVALID_FILE: ErrorTemplate(
        category=ErrorCategory.CONFIGURATION,
        user_message="configuration file is empty, invalid, or contains only comments",
    ),
    ErrorCode.CONFIG_INVALID_YAML: ErrorTemplate(
        category=ErrorCategory.CONFIGURATION,
        user_message="configuration file contains invalid YAML syntax",
    ),
    ErrorCode.CONFIG_INVALID_JSON: ErrorTemplate(
        category=ErrorCategory.CONFIGURATION,
        user_message="configuration file contains invalid JSON syntax",
    ),
    ErrorCode.CONFIG_INVALID_VALUE: ErrorTemplate(
        category=ErrorCategory.CONFIGURATION,
        user_message="configuration contains an invalid value",
    ),
    ErrorCode.CONFIG_VALIDATION_FAILED: ErrorTemplate(
        category=ErrorCategory.CONFIGURATION,
        user_message="configuration validation failed",
    ),
    ErrorCode.CONFIG_UNKNOWN_MODE: ErrorTemplate(
        category=ErrorCategory.CONFIGURATION,
        user_message="unknown mode requested",
    ),
    # Validation errors
    ErrorCode.VALIDATION_INVALID_PARAMETER: ErrorTemplate(
        category=ErrorCategory.VALIDATION,
        user_message="provided parameter value is invalid",
    ),
    ErrorCode.VALIDATION_MISSING_PARAMETER: ErrorTemplate(
        category=ErrorCategory.VALIDATION,
        user_message="required parameter is missing",
    ),
    ErrorCode.VALIDATION_INVALID_LENGTH: ErrorTemplate(
        category=ErrorCategory.VALIDATION,
        user_message="input has an invalid length",
    ),
    ErrorCode.VALIDATION_LENGTH_MISMATCH: ErrorTemplate(
        category=ErrorCategory.VALIDATION,
        user_message="inputs have inconsistent lengths",
    ),
    ErrorCode.VALIDATION_SAMPLE_TOO_LARGE: ErrorTemplate(
        category=ErrorCategory.VALIDATION,
        user_message="requested sample size exceeds the available population",
    ),
    # File system errors
    ErrorCode.FILE_NOT_FOUND: ErrorTemplate(
        category=ErrorCategory.FILE_SYSTEM,
        user_message="specified file was not found",
    ),
    ErrorCode.FILE_READ_ERROR: ErrorTemplate(
        category=ErrorCategory.FILE_SYSTEM,
        user_message="failed to read file",
    ),
    ErrorCode.FILE_WRITE_ERROR: ErrorTemplate(
        category=ErrorCategory.FILE_SYSTEM,
        user_message="failed to write to file",
    ),
    ErrorCode.FILE_HASH_MISMATCH: ErrorTemplate(
        category=ErrorCategory.FILE_SYSTEM,
        user_message="file content does not match its recorded hash",
    ),
    # Computation errors
    ErrorCode.COMPUTATION_INVALID_INPUT: ErrorTemplate(
        category=ErrorCategory.COMPUTATION,
        user_message="invalid input provided for computation",
    ),
    ErrorCode.COMPUTATION_SHAPE_MISMATCH: ErrorTemplate(
        category=ErrorCategory.COMPUTATION,
        user_message="array shapes do not match",
    ),
    ErrorCode.COMPUTATION_NON_FINITE: ErrorTemplate(
        category=ErrorCategory.COMPUTATION,
        user_message="non-finite value encountered in computation",
    ),
    ErrorCode.COMPUTATION_NOT_POSITIVE_DEFINITE: ErrorTemplate(
        category=ErrorCategory.COMPUTATION,
        user_message="covariance is not positive definite after regularization",
    ),
    ErrorCode.COMPUTATION_DEGENERATE_BASIS: ErrorTemplate(
        category=ErrorCategory.COMPUTATION,
        user_message="projection basis is degenerate",
    ),
    # Simulation errors
    ErrorCode.SIMULATION_INVALID_STATE: ErrorTemplate(
        category=ErrorCategory.SIMULATION,
        user_message="lander state, control or wind is not finite",
    ),
    ErrorCode.SIMULATION_INTEGRATION_FAILED: ErrorTemplate(
        category=ErrorCategory.SIMULATION,
        user_message="numerical integration produced a non-finite state",
    ),
    ErrorCode.SIMULATION_INVALID_ACTION: ErrorTemplate(
        category=ErrorCategory.SIMULATION,
        user_message="policy emitted a non-finite action",
    ),
    # Training errors
    ErrorCode.TRAINING_DIVERGED: ErrorTemplate(
        category=ErrorCategory.TRAINING,
        user_message="training diverged",
    ),
    ErrorCode.TRAINING_OFFLINE_CONTRACT_BROKEN: ErrorTemplate(
        category=ErrorCategory.TRAINING,
        user_message="offline training set changed during training",
    ),
    # Pipeline errors
    ErrorCode.PIPELINE_STAGE_FAILED: ErrorTemplate(
        category=ErrorCategory.PIPELINE,
        user_message="pipeline stage failed",
    ),
    ErrorCode.PIPELINE_UNKNOWN_RECIPE: ErrorTemplate(
        category=ErrorCategory.PIPELINE,
        user_message="unknown recipe",
    ),
    # Report generation errors
    ErrorCode.REPORT_WRITE_FAILED: ErrorTemplate(
        category=ErrorCategory.REPORT,
        user_message="failed to write report",
    ),
    ErrorCode.REPORT_TEMPLATE_ERROR: ErrorTemplate(
        category=ErrorCategory.REPORT,
        user_message="report template error",
    ),
}
