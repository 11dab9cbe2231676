"""Full-duplex, prompt-framed channels to external commands."""
from .attrs import PREOPENED_ATTRS, ChannelAttributes
from .channels import ChannelRegistry, ChannelState, ExternalChannel
from .errors import *  # noqa: F403

__all__ = ["ChannelAttributes", "ChannelRegistry", "ChannelState", "ExternalChannel", "PREOPENED_ATTRS"]
