"""Shared-blackboard graph protocols, hard input distributions and exact round-elimination checks."""

__version__ = "0.1.0"
