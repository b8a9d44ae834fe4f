"""pdfharvest: mine PDF corpora into multimodal instruction-tuning data.

Stages: select image-bearing PDFs, extract image/text regions from the
first page, pair them by embedding similarity, screen for NSFW/PII,
generate instruction conversations, and export a conversation-JSON
dataset with statistics and score reports.
"""

from .config import RunConfig
from .pipeline import Pipeline, RunManifest, resume, run_pipeline

__version__ = "0.1.0"

__all__ = ["Pipeline", "RunConfig", "RunManifest", "resume", "run_pipeline", "__version__"]
