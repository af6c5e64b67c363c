"""Back-four defensive transition analysis from tracking and event data."""

__version__ = "0.1.0"
