"""Flat key = value run configuration.

Grammar, one entry per line::

    # comment (also after a value)
    key = value
    key = v1, v2, v3        # arrays are comma separated

Keys:

    beta            slope of level 0 (required)
    k, g            band strengths and couplings, equal length N >= 1 (required)
    init            level0 | band:q | all            (default all)
    mode            analytic | numeric | validate    (default analytic)
    sweep           beta | k[i] | g[i] | k[i]-k[j]   (0-based config indices)
    sweep_start, sweep_stop, sweep_steps (>= 2), sweep_scale (linear | log)
    rel_tol, abs_tol, tau0, tau_max, max_steps       integrator settings
    tol_p00, tol_pq0                                 validation tolerances
    csv, svg                                         output paths

A sweep path ``k[i]-k[j]`` sets k[i] = k[j] + value, so the swept value is
the difference itself.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import ModelParams
from .propagator import IntegratorConfig

MODES = ("analytic", "numeric", "validate")
SCALES = ("linear", "log")
_INTEGRATOR_KEYS = {"rel_tol": float, "abs_tol": float, "tau0": float,
                    "tau_max": float, "max_steps": int}
_KNOWN = ({"beta", "k", "g", "init", "mode", "sweep", "sweep_start", "sweep_stop",
           "sweep_steps", "sweep_scale", "tol_p00", "tol_pq0", "csv", "svg"}
          | set(_INTEGRATOR_KEYS))
_PATH = re.compile(r"^(beta|[kg]\[(\d+)\])(?:-k\[(\d+)\])?$")


class ConfigFieldError(ConfigError):
    """Config problem tied to a field and, when known, a source line."""

    def __init__(self, field_name, message, source=None, line=None):
        where = source or "<config>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: field '{field_name}': {message}")
        self.field = field_name
        self.line = line


@dataclass(frozen=True)
class Sweep:
    path: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    def values(self):
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    raw_k: tuple
    raw_g: tuple
    init: str = "all"
    mode: str = "analytic"
    sweep: Sweep | None = None
    integrator: dict = field(default_factory=dict)
    tol_p00: float = 1e-3
    tol_pq0: float = 1e-2
    csv: str | None = None
    svg: str | None = None

    @property
    def band_init(self):
        """Band level q for ``init = band:q``, else None."""
        return int(self.init.split(":")[1]) if self.init.startswith("band:") else None

    def integrator_config(self, tau_max):
        """Integrator settings with ``tau_max`` unless the config fixes it."""
        return IntegratorConfig(**{"tau_max": tau_max, **self.integrator})

    def params_at(self, value):
        """Model parameters with the swept quantity set to ``value``."""
        if self.sweep is None:
            return self.params
        beta = self.params.beta
        k, g = list(self.raw_k), list(self.raw_g)
        m = _PATH.match(self.sweep.path)
        if m.group(1) == "beta":
            beta = value
        else:
            target = k if m.group(1)[0] == "k" else g
            idx = int(m.group(2))
            target[idx] = value if m.group(3) is None else k[int(m.group(3))] + value
        return ModelParams(beta, k, g)


def _lines(text):
    for number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            yield number, body


def parse_entries(text, source=None):
    """Map key -> (value string, line number); duplicate keys are an error."""
    entries = {}
    for number, body in _lines(text):
        if "=" not in body:
            raise ConfigFieldError(body.split()[0], "expected 'key = value'", source, number)
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in _KNOWN:
            raise ConfigFieldError(key, "unknown key", source, number)
        if key in entries:
            raise ConfigFieldError(key, f"duplicate (first set on line {entries[key][1]})",
                                   source, number)
        entries[key] = (value, number)
    return entries


def parse_overrides(pairs):
    """Entries from ``KEY=VALUE`` command-line overrides."""
    entries = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigFieldError(pair, "override must look like KEY=VALUE", "--set")
        key, value = (part.strip() for part in pair.split("=", 1))
        if key not in _KNOWN:
            raise ConfigFieldError(key, "unknown key", "--set")
        entries[key] = (value, None)
    return entries


def build_config(entries, source=None):
    """Validate parsed entries into a :class:`RunConfig`."""

    def fail(key, message):
        line = entries[key][1] if key in entries else None
        raise ConfigFieldError(key, message, source, line)

    def number(key, kind=float, default=None):
        if key not in entries:
            if default is None:
                fail(key, "missing required value")
            return default
        text = entries[key][0]
        try:
            return kind(text)
        except ValueError:
            fail(key, f"cannot read {text!r} as {kind.__name__}")

    def array(key):
        if key not in entries:
            fail(key, "missing required value")
        text = entries[key][0]
        if not text:
            fail(key, "n_levels must be >= 1 (empty list)")
        try:
            return tuple(float(x) for x in text.split(","))
        except ValueError:
            fail(key, f"cannot read {text!r} as a comma-separated list of numbers")

    k, g = array("k"), array("g")
    if len(k) != len(g):
        fail("g", f"has {len(g)} entries but k has {len(k)}")
    beta = number("beta")
    try:
        params = ModelParams(beta, k, g)
    except ConfigError as exc:
        fail("beta" if "beta" in str(exc) else "k", str(exc))

    mode = entries.get("mode", ("analytic", None))[0]
    if mode not in MODES:
        fail("mode", f"must be one of {', '.join(MODES)}")
    init = entries.get("init", ("all", None))[0]
    if init not in ("all", "level0"):
        m = re.fullmatch(r"band:(\d+)", init)
        if m is None:
            fail("init", "must be level0, all or band:q")
        if not 1 <= int(m.group(1)) <= len(k):
            fail("init", f"band level must lie in 1..{len(k)}")

    sweep = None
    if "sweep" in entries:
        path = entries["sweep"][0].replace(" ", "")
        m = _PATH.match(path)
        if m is None:
            fail("sweep", "must be beta, k[i], g[i] or k[i]-k[j]")
        for group in (m.group(2), m.group(3)):
            if group is not None and int(group) >= len(k):
                fail("sweep", f"index {group} out of range for N = {len(k)}")
        if m.group(3) is not None and (m.group(1)[0] != "k" or m.group(2) == m.group(3)):
            fail("sweep", "difference paths need two distinct k indices")
        steps = number("sweep_steps", int)
        if steps < 2:
            fail("sweep_steps", "must be >= 2")
        scale = entries.get("sweep_scale", ("linear", None))[0]
        if scale not in SCALES:
            fail("sweep_scale", "must be linear or log")
        start, stop = number("sweep_start"), number("sweep_stop")
        if scale == "log" and (start <= 0 or stop <= 0):
            fail("sweep_start", "log sweeps need positive endpoints")
        if path == "beta" and min(start, stop) <= 0:
            fail("sweep_start", "beta must stay positive")
        sweep = Sweep(path, start, stop, steps, scale)

    integrator = {key: number(key, kind) for key, kind in _INTEGRATOR_KEYS.items()
                  if key in entries}
    try:
        # horizons are chosen per point; a placeholder checks the rest
        IntegratorConfig(**{"tau_max": 1e9, **integrator})
    except ConfigError as exc:
        fail(next(iter(integrator)), str(exc))

    tol_p00 = number("tol_p00", default=1e-3)
    tol_pq0 = number("tol_pq0", default=1e-2)
    for key, val in (("tol_p00", tol_p00), ("tol_pq0", tol_pq0)):
        if not val > 0:
            fail(key, "must be positive")

    return RunConfig(params=params, raw_k=k, raw_g=g, init=init, mode=mode, sweep=sweep,
                     integrator=integrator, tol_p00=tol_p00, tol_pq0=tol_pq0,
                     csv=entries.get("csv", (None, None))[0],
                     svg=entries.get("svg", (None, None))[0])


def load_config(text, source=None, overrides=()):
    entries = parse_entries(text, source)
    entries.update(parse_overrides(overrides))
    return build_config(entries, source)
