"""Exception types shared across the package.

Validation errors (bad inputs, malformed configs) exit the CLI with code 2;
protocol rejections (a structurally fine payload the ledger or the guardian
quorum refuses) exit with code 3.
"""


class SedeError(Exception):
    """Base class; treated as a validation error by the CLI."""

    exit_code = 2


class ProtocolRejection(SedeError):
    """The request was well-formed but the protocol refused it."""

    exit_code = 3


# curve
class EncodingFailure(SedeError):
    """No valid curve point exists in the Koblitz candidate window."""


class DecodingFailure(SedeError):
    """Point cannot be decoded back to message bytes."""


# elgamal
class BadRandomness(SedeError):
    """Encryption nonce outside [1, n)."""


class InsufficientContributions(ProtocolRejection):
    """Fewer guardian contributions than the decryption threshold."""


# threshold
class InvalidPolicy(SedeError):
    """Share policy violates 1 <= t <= n < group order."""


class DuplicateIndex(SedeError):
    """Two shares or decisions carry the same participant index."""


class NotInQuorum(SedeError):
    """Share index absent from the quorum it is asked to serve."""


class InsufficientShares(SedeError):
    """Fewer shares than the recovery threshold."""


# pool
class KeyMismatch(SedeError):
    """Provided owner secret does not match the note's public key."""


class TreeFull(SedeError):
    """Append-only tree has no empty leaf left."""


class ConservationViolation(SedeError):
    """Input and output values do not balance."""


class UnknownCommitment(SedeError):
    """Spent note's commitment is not in the tree at the claimed index."""


class AlreadySpent(SedeError):
    """Note's nullifier is already recorded on the ledger."""


class NotEnrolled(SedeError):
    """Note owner's member id is not in the enrollment registry."""


class ArityViolation(SedeError):
    """More spends or outputs than the configured transaction arity."""


class InvalidProof(ProtocolRejection):
    """Proof token invalid or bound to different public inputs."""


class DoubleSpend(ProtocolRejection):
    """Payload reuses a recorded nullifier."""


class UnknownRoot(ProtocolRejection):
    """Referenced tree root is outside the accepted root window."""


class NegativePoolBalance(ProtocolRejection):
    """Withdrawal would drive the pool balance below zero."""


# de-anonymization protocol
class UnknownTransaction(SedeError):
    """Request refers to a transaction absent from the ledger."""


class DuplicateGuardian(SedeError):
    """Two decisions for one request from the same guardian."""


class QuorumNotApproved(ProtocolRejection):
    """Decryption attempted without an approved, signature-valid request."""


class WitnessMismatch(SedeError):
    """Linkage proof witness does not satisfy the claimed statement."""


class CommitmentNotFound(SedeError):
    """Decrypted note's commitment is absent from the tree."""


# cli / scenarios
class InvalidConfig(SedeError):
    """Workspace or curve configuration rejected."""


class ScenarioParseError(SedeError):
    """Scenario file line failed validation."""
