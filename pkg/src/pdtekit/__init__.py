"""Two-party private decision tree evaluation built on shared oblivious selection."""

from .channel import LAN, MAN, WAN, Channel, NetworkModel, Transcript, modeled_time, run
from .errors import ConfigError, PdteError, ProtocolError
from .pdte import (PdteConfig, PdteSession, deal, evaluation_budget, pdte_eval,
                   pdte_eval_clustered, pdte_eval_layered, pdte_setup)
from .sos import SosConfig
from .tree import DecisionTree, EncodedTree, NodeRecord, encode, pad_complete, plaintext_eval

__version__ = "0.1.0"

__all__ = [
    "LAN", "MAN", "WAN", "Channel", "NetworkModel", "Transcript", "modeled_time", "run",
    "ConfigError", "PdteError", "ProtocolError",
    "PdteConfig", "PdteSession", "deal", "evaluation_budget", "pdte_eval",
    "pdte_eval_clustered", "pdte_eval_layered", "pdte_setup",
    "SosConfig",
    "DecisionTree", "EncodedTree", "NodeRecord", "encode", "pad_complete", "plaintext_eval",
]
