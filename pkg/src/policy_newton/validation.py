"""Input-validation helpers shared by the estimator wrappers and the CLI."""

from __future__ import annotations

import os

import numpy as np

from .exceptions import InvalidInput
from .fixtures import BUILTINS
from .mdp import FiniteMdp, load_mdp, mdp_from_dict, validate_mdp


def resolve_mdp(source) -> FiniteMdp:
    """Turn a builtin name, fixture path, fixture dict or MDP into an MDP (unvalidated)."""
    if isinstance(source, FiniteMdp):
        return source
    if isinstance(source, dict):
        return mdp_from_dict(source)
    if isinstance(source, (str, os.PathLike)):
        name = os.fspath(source)
        if name in BUILTINS:
            return BUILTINS[name]()
        return load_mdp(name)
    raise InvalidInput(f"cannot interpret {type(source).__name__} as an MDP")


def check_mdp(source) -> FiniteMdp:
    """Resolve ``source`` and raise :class:`InvalidInput` naming the first failed check."""
    mdp = resolve_mdp(source)
    report = validate_mdp(mdp)
    if not report.passed:
        first = report.failures()[0]
        raise InvalidInput(f"invalid MDP: {first.name} at {first.index}: {first.message}")
    return mdp


def check_theta(theta, dim: int, name: str = "theta") -> np.ndarray:
    """A finite float vector of length ``dim``; ``None`` gives zeros."""
    if theta is None:
        return np.zeros(dim)
    arr = np.array(theta, dtype=float)
    if arr.shape != (dim,):
        raise InvalidInput(f"{name} must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} must be finite")
    return arr


def check_states(states, num_states: int) -> np.ndarray:
    arr = np.asarray(states)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise InvalidInput(f"states must be one-dimensional, got shape {arr.shape}")
    if arr.size and (not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() >= num_states):
        raise InvalidInput(f"states must be integers in [0, {num_states})")
    return arr.astype(np.int64)


def check_positive(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)) \
            or not np.isfinite(value) or value <= 0:
        raise InvalidInput(f"{name} must be positive")
    return float(value)
