"""Exception hierarchy shared across the pipeline.

Plain I/O failures (unwritable stores, missing files) are reported as the
stdlib ``OSError``; everything domain-specific derives from
:class:`SceneForgeError` so callers can catch pipeline failures in one go.
"""

from __future__ import annotations


class SceneForgeError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SceneForgeError):
    """Input file is not well-formed (e.g. broken JSON)."""


class SchemaError(SceneForgeError):
    """Input parsed but violates the scene-graph schema or its invariants."""


class UnknownIdError(SceneForgeError):
    """An object id was queried that does not exist in the graph."""


class InsufficientDemosError(SceneForgeError):
    """The demonstration library cannot supply the requested few-shot set."""


class UnsupportedTaskError(SceneForgeError):
    """The operation is undefined for this task kind."""


class GrammarError(SceneForgeError):
    """A raw response has unrecoverable structure (e.g. unclosed turn)."""


class IdLeakError(SceneForgeError):
    """Object-ID tokens remain in text that must be free of them."""


class RewriterUnavailableError(SceneForgeError):
    """The rewrite backend needed for ID removal could not be reached."""


class AuthError(SceneForgeError):
    """The chat backend rejected our credentials."""


class RateLimitedError(SceneForgeError):
    """The chat backend kept rate-limiting us after all retries."""


class TransportError(SceneForgeError):
    """The chat backend could not produce a response (network, no recording)."""


class BackendRefusalError(SceneForgeError):
    """The chat backend answered but declined to produce content."""


class EmptyVocabularyError(SceneForgeError):
    """No absent label is available to build a negative sample from."""


class InsufficientLabelsError(SceneForgeError):
    """The label pool cannot fill the requested evaluation subsets."""


class ValidationError(SceneForgeError):
    """A record violates the dataset record invariants."""


class IdMismatchError(SceneForgeError):
    """Prediction and reference files do not align on question ids."""


class OutOfWorkspaceError(SceneForgeError):
    """A continuous pose component lies outside the configured workspace."""


class WrongRangeError(SceneForgeError):
    """An action token id does not belong to the expected reserved range."""
