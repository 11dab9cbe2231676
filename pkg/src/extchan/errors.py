"""Exception hierarchy shared by every extchan module."""


class ExtchanError(Exception):
    """Base class for all errors raised by this package."""


class ChannelError(ExtchanError):
    pass


class SpawnFailure(ChannelError):
    pass


class NoCurrentChannel(ChannelError):
    def __init__(self, msg="no current external channel"):
        super().__init__(msg)


class UnknownDescriptor(ChannelError):
    def __init__(self, n):
        super().__init__(f"{n!r} is not the descriptor of a running external command")
        self.descriptor = n


class BrokenChannel(ChannelError):
    pass


class EndOfStreamBeforePrompt(ChannelError):
    """The child closed its output before printing the prompt line.

    ``partial`` holds whatever was read so far.
    """

    def __init__(self, partial: bytes):
        super().__init__(f"end of stream before prompt ({len(partial)} bytes read)")
        self.partial = partial


class ReadTimeout(ChannelError):
    def __init__(self, partial: bytes = b""):
        super().__init__("timed out waiting for the external command")
        self.partial = partial


class AttributeParseError(ExtchanError, ValueError):
    pass


class HandshakeError(ExtchanError):
    pass


class HandshakeTimeout(HandshakeError):
    pass


class HandshakeRejected(HandshakeError):
    pass


class PidMismatch(HandshakeError):
    pass


class PipeOptionError(ExtchanError, ValueError):
    pass


class ScriptError(ExtchanError):
    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)


class ScriptSyntaxError(ScriptError):
    pass


class GatewayError(ExtchanError):
    pass


class UnbalancedParens(GatewayError):
    pass


class UnknownCommand(GatewayError):
    pass


class BadIndex(GatewayError, IndexError):
    pass


class StoreFileError(GatewayError):
    pass


class ExprSyntaxError(ExtchanError, ValueError):
    pass


class MixedVariables(ExprSyntaxError):
    pass


class ChildFailure(ExtchanError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial
