"""Turn regulatory prose into formal IF-THEN requirements and compliance test suites."""

__version__ = "0.1.0"
