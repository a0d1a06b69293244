"""Exception hierarchy shared across the hub."""

from __future__ import annotations


class LitHubError(Exception):
    """Base class for all hub errors."""


# --- record parsing / store ---------------------------------------------


class ParseError(LitHubError):
    """A corpus line could not be turned into a record."""


class MalformedLine(ParseError):
    pass


class MissingField(ParseError):
    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


class BadDate(ParseError):
    pass


class StoreUnavailable(LitHubError):
    pass


class NotFound(LitHubError):
    pass


# --- text / features ------------------------------------------------------


class EmptyCorpus(LitHubError):
    pass


# --- model training -------------------------------------------------------


class SingleClassDataset(LitHubError):
    pass


class NonFiniteLoss(LitHubError):
    pass


class ModelMissing(LitHubError):
    pass


class DegenerateTopic(LitHubError):
    def __init__(self, topic: str):
        super().__init__(f"topic has a single class in the training data: {topic}")
        self.topic = topic


# --- lexicons -------------------------------------------------------------


class DanglingConcept(LitHubError):
    pass


class DuplicateSurface(LitHubError):
    pass


class BadLink(LitHubError):
    pass


class NotAVaccine(LitHubError):
    pass


# --- review loop ----------------------------------------------------------


class AlreadyDecided(LitHubError):
    pass


class NoNewLabels(LitHubError):
    pass


class NonFiniteSignal(LitHubError):
    pass


# --- evaluation -----------------------------------------------------------


class SizeMismatch(LitHubError):
    pass


# --- search ---------------------------------------------------------------


class AnnotationMismatch(LitHubError):
    pass


class BadFacet(LitHubError):
    def __init__(self, name: str):
        super().__init__(f"unknown facet: {name}")
        self.name = name


class BadPage(LitHubError):
    pass


# --- stats ----------------------------------------------------------------


class PeriodMismatch(LitHubError):
    pass


# --- pipeline -------------------------------------------------------------


class StageFailure(LitHubError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
