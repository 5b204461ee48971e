"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name by
default) so the ledger, the CLI and scenario transcripts can report the
reason without string parsing.
"""


class ObscuraError(Exception):
    code = "ObscuraError"

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.code = cls.__name__


# -- curve / encoding ------------------------------------------------------

class EncodingError(ObscuraError):
    pass


class IdentityNotSerializable(EncodingError):
    pass


class WrongLength(EncodingError):
    pass


class NotOnCurve(EncodingError):
    pass


class CoordinateOutOfRange(EncodingError):
    pass


# -- signatures --------------------------------------------------------------

class SignatureError(ObscuraError):
    pass


class ZeroScalar(SignatureError):
    pass


class IndexMismatch(SignatureError):
    pass


class BadIndex(SignatureError):
    pass


class LengthMismatch(SignatureError):
    pass


class DuplicateMember(SignatureError):
    pass


class InvalidRing(SignatureError):
    pass


# -- proof codec -------------------------------------------------------------

class TruncatedPayload(EncodingError):
    pass


class MalformedChallenge(EncodingError):
    pass


class NonCanonicalScalar(EncodingError):
    pass


# -- ledger ------------------------------------------------------------------

class LedgerError(ObscuraError):
    pass


class BoxAlreadyExists(LedgerError):
    pass


class KeyTooLong(LedgerError):
    pass


class BudgetExceeded(LedgerError):
    pass


class InsufficientFee(LedgerError):
    pass


class InsufficientBalance(LedgerError):
    pass


class UnknownApp(LedgerError):
    pass


class MalformedDocument(LedgerError):
    pass


class GroupRejected(LedgerError):
    """A transaction group failed; the ledger state was left untouched.

    ``reason`` is the code of the first failing assertion and ``index`` the
    position of the offending transaction inside the group.
    """

    def __init__(self, reason, index=None, detail="", meter=None):
        self.reason = reason
        self.index = index
        self.detail = detail
        self.meter = meter
        msg = reason if not detail else f"{reason}: {detail}"
        super().__init__(msg)


class ContractError(LedgerError):
    """Assertion failure raised by application logic.

    The contract reports many distinct reasons (DoubleSpend, WrongAmount, ...)
    that share the same handling, so the reason travels as ``code`` instead
    of one subclass per assertion.
    """

    def __init__(self, code, detail=""):
        self.code = code
        super().__init__(code if not detail else f"{code}: {detail}")


# -- client / tooling --------------------------------------------------------

class InsufficientPool(ObscuraError):
    pass


class ScriptError(ObscuraError):
    def __init__(self, index, message):
        self.index = index
        super().__init__(f"action {index}: {message}")
