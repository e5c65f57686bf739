"""HTTP facade over the core package."""

from akalls.service.app import create_app

__all__ = ["create_app"]
