"""Top-level package for StrategicDynamics."""
# StrategicDynamics/__init__.py

__app_name__ = "StrategicDynamics"
__version__ = "0.1.0"

# e.g., from StrategicDynamics import cli
from .cli import app as cli
