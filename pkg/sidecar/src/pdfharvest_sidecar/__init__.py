"""Out-of-process model provider for the pdfharvest pipeline."""

from .server import ALL_CAPABILITIES, SidecarConfig, SidecarServer, serve_background

__version__ = "0.1.0"

__all__ = ["ALL_CAPABILITIES", "SidecarConfig", "SidecarServer", "serve_background", "__version__"]
