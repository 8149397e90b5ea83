"""Neural scoring sidecar speaking the statuteqa scorer wire protocol."""

from statuteqa_sidecar.models import ModelBundle, SidecarConfig
from statuteqa_sidecar.app import create_app

__all__ = ["ModelBundle", "SidecarConfig", "create_app"]

__version__ = "0.1.0"
