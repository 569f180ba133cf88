"""Channel spec strings of the form ``name:key=value,key=value``."""
from __future__ import annotations

from typing import Callable, Dict, Tuple

from .. import zoo
from ..channel import Channel


class SpecError(ValueError):
    """Malformed spec; the message names the offending token."""


def _int(token: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise SpecError(f"expected an integer in {token!r}") from None


def _float(token: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise SpecError(f"expected a number in {token!r}") from None


# name -> (required keys, optional keys with defaults, constructor)
_FAMILIES: Dict[str, Tuple[tuple, dict, Callable[..., Channel]]] = {
    "randomizing": (("d",), {}, lambda d: zoo.randomizing_channel(d)),
    "werner": (("d", "lambda"), {}, lambda d, lam: zoo.werner_channel(d, lam)),
    "qc": (("a", "b"), {}, lambda a, b: zoo.qc_channel(a, b)),
    "cq": (("a", "b"), {}, lambda a, b: zoo.cq_channel(a, b)),
    "random": (("a", "b", "e"), {"seed": 0}, lambda a, b, e, seed: zoo.random_channel(a, b, e, seed)),
    "identity": (("d",), {}, lambda d: zoo.identity_channel(d)),
}
_FLOAT_KEYS = {"lambda"}


def parse_spec(spec: str) -> Tuple[str, dict]:
    """Split a spec into its family name and typed parameters."""
    name, sep, rest = spec.strip().partition(":")
    if name not in _FAMILIES:
        raise SpecError(f"unknown channel family {name!r}")
    required, optional, _ = _FAMILIES[name]
    params = dict(optional)
    seen = set()
    for token in filter(None, rest.split(",")) if sep else ():
        key, eq, value = token.partition("=")
        key = key.strip()
        if not eq or not value.strip():
            raise SpecError(f"expected key=value, got {token!r}")
        if key not in required and key not in optional:
            raise SpecError(f"unknown parameter {token!r} for {name}")
        if key in seen:
            raise SpecError(f"duplicate parameter {token!r}")
        seen.add(key)
        params[key] = _float(token, value) if key in _FLOAT_KEYS else _int(token, value)
    missing = [k for k in required if k not in params]
    if missing:
        raise SpecError(f"{name} spec is missing {', '.join(missing)}")
    return name, params


def build_channel(spec: str) -> Channel:
    name, params = parse_spec(spec)
    required, optional, make = _FAMILIES[name]
    args = [params[k] for k in required] + [params[k] for k in optional]
    try:
        return make(*args)
    except zoo.ParameterError as exc:
        raise SpecError(f"{spec!r}: {exc}") from None
