"""Common exception base for the toolkit.

Modules define their own exception types; everything user-facing derives
from CfqError so the CLI and service can map failures to exit codes and
HTTP statuses in one place.
"""


class CfqError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CfqError):
    """Bad configuration or usage; maps to exit code 2."""
