"""Error types raised across the package.

Kept in one module so the HTTP layer can map exception class names to
machine-readable error codes without per-module tables.
"""


class AuthcredError(Exception):
    """Base class for every operational error in this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


# crypto
class BadSeedLength(AuthcredError): ...
class BadSaltLength(AuthcredError): ...
class MalformedKey(AuthcredError): ...
class MalformedSignature(AuthcredError): ...
class ZeroScalar(AuthcredError): ...
class MalformedElementEncoding(AuthcredError): ...


# canonical serialization
class NotCanonicalizable(AuthcredError): ...
class ParseFailure(AuthcredError): ...


# identity
class DidParseError(AuthcredError): ...
class DuplicateDid(AuthcredError): ...
class InconsistentDocument(AuthcredError): ...
class NotFound(AuthcredError): ...
class AnchorMismatch(AuthcredError): ...


# trust registry
class EmptyBatch(AuthcredError): ...
class BatchTooLarge(AuthcredError): ...
class UniquenessViolation(AuthcredError): ...
class EntryNotFound(AuthcredError): ...


# credentials
class UnknownIssuerDid(AuthcredError): ...
class IssuerKeyMismatch(AuthcredError): ...
class DuplicateClaimName(AuthcredError): ...
class EmptyClaims(AuthcredError): ...
class InvalidSignature(AuthcredError): ...
class DuplicateAnchor(AuthcredError): ...
class UnknownClaimName(AuthcredError): ...
class ChallengeMismatch(AuthcredError): ...
class CommitmentOpenFailure(AuthcredError): ...
class StaleCredential(AuthcredError): ...


# submission workflow
class InvalidAuthorCredential(AuthcredError): ...
class UnresolvableCoauthor(AuthcredError): ...
class DuplicateCoauthor(AuthcredError): ...
class InvalidRole(AuthcredError): ...
class NotACoauthor(AuthcredError): ...
class BadConsentSignature(AuthcredError): ...
class WrongState(AuthcredError): ...
class PastDeadline(AuthcredError): ...
class AlreadyResolved(AuthcredError): ...
class ReviewerIsAuthor(AuthcredError): ...
class MissingExpertiseClaim(AuthcredError): ...
class InvalidReviewerCredential(AuthcredError): ...
class TranscriptInvalid(AuthcredError): ...
class CoiNotClear(AuthcredError): ...
class NoReviews(AuthcredError): ...
class UnknownSubmission(AuthcredError): ...
class UnknownAssignment(AuthcredError): ...
class UnknownAlert(AuthcredError): ...


# COI protocol
class EmptyElement(AuthcredError): ...
class ConflictSetTooLarge(AuthcredError): ...
class SaltReuse(AuthcredError): ...
class IncompleteTranscript(AuthcredError): ...


# publication metadata
class NotAccepted(AuthcredError): ...
class MissingConsentRef(AuthcredError): ...


# node service
class ConfigError(AuthcredError): ...
class CorruptLedgerAtStartup(AuthcredError): ...
class PortInUse(AuthcredError): ...
class WalletLocked(AuthcredError): ...
class UnknownWalletDid(AuthcredError): ...
class UnknownCredential(AuthcredError): ...
class StaleChallenge(AuthcredError): ...
