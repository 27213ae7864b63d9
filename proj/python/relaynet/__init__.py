"""Python bindings for the relaynet C++ core."""

import json

from ._core import (
    InvalidAction,
    ParseError,
    actor_loss,
    advantage,
    closed_form_outage,
    config_hash,
    decode_action,
    lemma1_sweep,
    lemma2_sweep,
    mutual_information,
    resolve_scenario,
    robust_filter,
    theorem1_sweep,
    tv_distance,
)
from . import _core


def _text(scenario):
    if scenario is None:
        return ""
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    return str(scenario)


def scenario(scenario=None, overrides=()):
    """Resolved scenario as a dict. `scenario` is a dict or a JSON string."""
    return json.loads(resolve_scenario(_text(scenario), list(overrides)))


def train(method, seed, scenario=None, overrides=(), checkpoint=""):
    return _core.train(method, seed, _text(scenario), list(overrides), str(checkpoint))


def evaluate(checkpoint, scenario=None, overrides=()):
    return _core.evaluate(str(checkpoint), _text(scenario), list(overrides))
