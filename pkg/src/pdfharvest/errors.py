"""Exception taxonomy for the pipeline."""

from __future__ import annotations


class PdfHarvestError(Exception):
    """Base class for all pipeline errors."""


# configuration / orchestration
class ConfigInvalid(PdfHarvestError):
    pass


class ConfigMismatch(PdfHarvestError):
    pass


class CorruptCheckpoint(PdfHarvestError):
    pass


class StageFatal(PdfHarvestError):
    def __init__(self, doc_id: str, stage: str, message: str):
        super().__init__(f"{doc_id} failed at {stage}: {message}")
        self.doc_id = doc_id
        self.stage = stage


# page extraction
class ParseFailure(PdfHarvestError):
    pass


class RenderFailure(PdfHarvestError):
    pass


class InvalidDpi(PdfHarvestError):
    pass


class RegionOutOfBounds(PdfHarvestError):
    pass


# providers
class ProviderUnavailable(PdfHarvestError):
    pass


class ProviderMalformedReply(PdfHarvestError):
    pass


# pairing
class EmptyInput(PdfHarvestError):
    pass


class DimensionMismatch(PdfHarvestError):
    pass


class ZeroVector(PdfHarvestError):
    pass


class NoCandidates(PdfHarvestError):
    pass


# safety
class MalformedVerdict(PdfHarvestError):
    pass


class MissingVerdict(PdfHarvestError):
    pass


# text generation
class EmptyReply(PdfHarvestError):
    pass


class MalformedConversation(PdfHarvestError):
    pass


class InvalidInputJson(PdfHarvestError):
    pass


class InvalidOutputJson(PdfHarvestError):
    pass


class TokenLost(PdfHarvestError):
    pass


# dataset export / reporting
class IoFailure(PdfHarvestError):
    pass


class InvariantViolation(PdfHarvestError):
    pass


class MissingStageLog(PdfHarvestError):
    pass


class NonPositiveReference(PdfHarvestError):
    pass
