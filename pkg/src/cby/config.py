"""Run configuration: line-oriented `key = value` text with dotted keys.

Unknown keys are rejected.  The equation-of-state range check w <= 1 is
a hyperbolicity condition, flagged so the CLI can map it to the refusal
exit status instead of the generic config error.
"""

from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .eos import Eos
from .errors import ParseError, ValidationError
from .initial_data import (EulerianData, flat_data, flrw_data,
                           flrw_perturbed_data, from_rest_eulerian, kasner_data)
from .integrate import HaltPolicy
from .stencil import StencilConfig

SCENARIOS = ("flat", "kasner", "flrw", "flrw_perturbed", "rest_bump")


@dataclass
class RunConfig:
    scenario: str = ""
    n: int = 0
    L: float = 0.0
    t_end: float = 0.0
    cfl: float = 0.25
    fd_order: int = 4
    dissipation_eps: float = 0.0
    eos_w: float = 1.0 / 3.0
    eos_p_ref: float = 1.0
    every_steps: int = 10
    directory: str = "."
    max_residual: float = 1.0e3
    min_dt: float = 1.0e-10
    max_steps: int = 1_000_000
    fosh_every: int = 1
    flat_b1: float = 0.0
    flat_b2: float = 0.0
    flat_b3: float = 0.0
    kasner_p1: float = 2.0 / 3.0
    kasner_p2: float = 2.0 / 3.0
    kasner_p3: float = -1.0 / 3.0
    kasner_t0: float = 1.0
    flrw_mu0: float = 3.0
    flrw_contracting: bool = False
    flrw_tilt: float = 0.0
    perturb_eps: float = 1.0e-3
    bump_eps: float = 1.0e-3


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# dotted key -> (attribute, converter)
KEY_TABLE = {
    "scenario": ("scenario", str),
    "grid.n": ("n", int),
    "grid.L": ("L", float),
    "t_end": ("t_end", float),
    "cfl": ("cfl", float),
    "fd_order": ("fd_order", int),
    "dissipation_eps": ("dissipation_eps", float),
    "eos.w": ("eos_w", float),
    "eos.p_ref": ("eos_p_ref", float),
    "output.every_steps": ("every_steps", int),
    "output.directory": ("directory", str),
    "halt.max_residual": ("max_residual", float),
    "halt.min_dt": ("min_dt", float),
    "halt.max_steps": ("max_steps", int),
    "check.fosh_every": ("fosh_every", int),
    "flat.b1": ("flat_b1", float),
    "flat.b2": ("flat_b2", float),
    "flat.b3": ("flat_b3", float),
    "kasner.p1": ("kasner_p1", float),
    "kasner.p2": ("kasner_p2", float),
    "kasner.p3": ("kasner_p3", float),
    "kasner.t0": ("kasner_t0", float),
    "flrw.mu0": ("flrw_mu0", float),
    "flrw.contracting": ("flrw_contracting", _parse_bool),
    "flrw.tilt": ("flrw_tilt", float),
    "perturb.eps": ("perturb_eps", float),
    "bump.eps": ("bump_eps", float),
}

REQUIRED = ("scenario", "grid.n", "grid.L", "t_end")


def parse_config(text):
    """Parse and validate config text into a RunConfig."""
    cfg = RunConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEY_TABLE:
            raise ValidationError(f"unknown key {key!r}", key=key)
        attr, conv = KEY_TABLE[key]
        try:
            setattr(cfg, attr, conv(value))
        except (ValueError, TypeError) as exc:
            raise ParseError(f"bad value for {key}: {exc}", line=lineno)
        seen.add(key)
    for key in REQUIRED:
        if key not in seen:
            raise ValidationError(f"missing required key {key!r}", key=key)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if cfg.scenario not in SCENARIOS:
        raise ValidationError(f"scenario must be one of {SCENARIOS}", key="scenario")
    if cfg.n < 4:
        raise ValidationError("grid.n must be >= 4 for the 4th-order stencil",
                              key="grid.n")
    if cfg.fd_order not in (2, 4):
        raise ValidationError("fd_order must be 2 or 4", key="fd_order")
    if cfg.n < cfg.fd_order + 1:
        raise ValidationError(
            f"grid.n = {cfg.n} too small for the order-{cfg.fd_order} stencil",
            key="grid.n")
    if cfg.L <= 0.0:
        raise ValidationError("grid.L must be positive", key="grid.L")
    if not 0.0 < cfg.cfl < 1.0:
        raise ValidationError("cfl must lie in (0, 1)", key="cfl")
    if cfg.dissipation_eps < 0.0:
        raise ValidationError("dissipation_eps must be >= 0", key="dissipation_eps")
    if cfg.eos_w <= 0.0:
        raise ValidationError("eos.w must be positive", key="eos.w")
    if cfg.eos_w > 1.0:
        raise ValidationError(
            "eos.w > 1 violates mu' >= 1 (sound speed above light)",
            key="eos.w", hyperbolicity=True)
    if cfg.eos_p_ref <= 0.0:
        raise ValidationError("eos.p_ref must be positive", key="eos.p_ref")
    if cfg.every_steps < 1:
        raise ValidationError("output.every_steps must be >= 1",
                              key="output.every_steps")
    if cfg.fosh_every < 0:
        raise ValidationError("check.fosh_every must be >= 0", key="check.fosh_every")
    if cfg.min_dt <= 0.0:
        raise ValidationError("halt.min_dt must be positive", key="halt.min_dt")
    if cfg.max_steps < 1:
        raise ValidationError("halt.max_steps must be >= 1", key="halt.max_steps")
    t0 = cfg.kasner_t0 if cfg.scenario == "kasner" else 0.0
    if cfg.t_end <= t0:
        raise ValidationError(f"t_end must exceed the start time {t0}", key="t_end")
    return cfg


def format_config(cfg):
    """Render a RunConfig back to config text (parse . format == identity)."""
    by_attr = {attr: key for key, (attr, _) in KEY_TABLE.items()}
    lines = []
    for f in dc_fields(RunConfig):
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, float):
            text = repr(val)
        else:
            text = str(val)
        lines.append(f"{by_attr[f.name]} = {text}")
    return "\n".join(lines) + "\n"


def stencil_of(cfg):
    return StencilConfig(fd_order=cfg.fd_order,
                         dissipation_eps=cfg.dissipation_eps, cfl=cfg.cfl)


def halt_of(cfg):
    return HaltPolicy(max_residual=cfg.max_residual, min_dt=cfg.min_dt,
                      max_steps=cfg.max_steps)


def eos_of(cfg):
    return Eos(w=cfg.eos_w, p_ref=cfg.eos_p_ref)


def _rest_bump_state(cfg):
    """Conformally flat rest data with a sinusoidal bump, via the Eulerian route."""
    n, L, eps = cfg.n, cfg.L, cfg.bump_eps
    from .fields import grid_coordinates
    x1, _, _ = grid_coordinates(n, L)
    psi = 1.0 + eps * np.sin(2.0 * np.pi * x1 / L)
    h0 = np.zeros((3, 3, n, n, n))
    for i in range(3):
        h0[i, i] = psi
    K = np.zeros((3, 3, n, n, n))
    p0 = np.full((n, n, n), eos_of(cfg).w)   # mu = 1 uniformly
    data = EulerianData(h0=h0, K=K, p0=p0, eos=eos_of(cfg))
    return from_rest_eulerian(data, n, L)


def build_state(cfg):
    """Construct the scenario's initial state."""
    if cfg.scenario == "flat":
        b = (cfg.flat_b1, cfg.flat_b2, cfg.flat_b3)
        return flat_data(cfg.n, cfg.L, b_const=b if any(b) else None)
    if cfg.scenario == "kasner":
        return kasner_data(cfg.n, cfg.L, cfg.kasner_p1, cfg.kasner_p2,
                           cfg.kasner_p3, cfg.kasner_t0)
    if cfg.scenario == "flrw":
        return flrw_data(cfg.n, cfg.L, cfg.flrw_mu0, eos_of(cfg),
                         contracting=cfg.flrw_contracting, tilt=cfg.flrw_tilt)
    if cfg.scenario == "flrw_perturbed":
        return flrw_perturbed_data(cfg.n, cfg.L, cfg.flrw_mu0, eos_of(cfg),
                                   cfg.perturb_eps)
    if cfg.scenario == "rest_bump":
        return _rest_bump_state(cfg)
    raise ValidationError(f"scenario {cfg.scenario!r} not implemented", key="scenario")
