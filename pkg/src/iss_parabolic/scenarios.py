"""Scenario files: flat key=value sections describing one run each.

A scenario file has up to five sections; unknown keys are rejected so typos
fail loudly::

    [scenario]
    name = eigen_decay          # output directory name
    kind = simulate             # simulate | sandwich | iss_check | lyapunov
                                # | kernel_synthesis | backstepping_loop
    seed = 42                   # drives every randomized input

    [grid]
    n_interior = 199
    dt = 1e-4
    t_final = 0.3

    [problem]
    a = 1.0
    k_reaction = 15.0           # backstepping_loop / kernel_synthesis only
    reaction = zero             # zero | linear(c) | cubic
    initial = sin_pi            # zero | constant(c) | sin_pi | mode(j)
                                # | ramp | random_smooth(modes, amp)
    d0 = zero                   # zero | constant(c) | step(c, t_on)
    d1 = zero                   # | sinusoid(amp, omega) | file(path)

    [check]                     # keys depend on kind, see the catalog below
    estimate = l2
    tol = 0.02

    [loop]                      # backstepping_loop only
    mode = closed               # open | closed

Selectors parse as ``name`` or ``name(arg, ...)``.  The reaction catalog
pairs each entry with the slope bound the solver's step restriction uses:
linear(c) has bound |c| (conservative: order preservation constrains the
negative slope), cubic is w - w^3 with unit bound on the working range.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ScenarioError
from .grid import Field, Grid1D
from .solver import BoundarySignal, SemilinearProblem

KINDS = ("simulate", "sandwich", "iss_check", "lyapunov", "kernel_synthesis", "backstepping_loop")

_SELECTOR_RE = re.compile(r"^\s*([a-z_][a-z0-9_]*)\s*(?:\((.*)\))?\s*$", re.IGNORECASE)


def parse_selector(text: str) -> tuple[str, list[str]]:
    m = _SELECTOR_RE.match(text)
    if not m:
        raise ScenarioError(f"malformed selector {text!r}")
    name = m.group(1).lower()
    args = [a.strip() for a in m.group(2).split(",")] if m.group(2) else []
    return name, args


def _floats(args: list[str], count: int, what: str) -> list[float]:
    if len(args) != count:
        raise ScenarioError(f"{what} expects {count} argument(s), got {len(args)}")
    try:
        return [float(a) for a in args]
    except ValueError as exc:
        raise ScenarioError(f"{what}: non-numeric argument in {args}") from exc


@dataclass(frozen=True)
class Scenario:
    """Everything needed to run one scenario deterministically."""

    name: str
    kind: str
    seed: int
    grid: Grid1D
    a: float = 1.0
    k_reaction: float = 0.0
    reaction: str = "zero"
    initial: str = "zero"
    d0: str = "zero"
    d1: str = "zero"
    estimate: str = "l2"
    p: float = 2.0
    norm_p: float = 2.0
    sigma: Optional[float] = None
    theta: Optional[float] = None
    tol: float = 0.02
    epsilon: float = 0.05
    ordering_tol: float = 1e-10
    decay_rate: Optional[float] = None
    decay_rate_tol: float = 0.02
    gain_override: Optional[float] = None
    mode: str = "closed"
    growth_min: float = 10.0
    rate_tol: float = 0.05
    oracle_tol: float = 1e-6
    roundtrip_tol: float = 1e-8
    n_fields: int = 20
    logy: bool = True
    base_dir: Path = field(default_factory=Path)


_SECTION_KEYS = {
    "scenario": {"name", "kind", "seed"},
    "grid": {"n_interior", "dt", "t_final"},
    "problem": {"a", "k_reaction", "reaction", "initial", "d0", "d1"},
    "check": {
        "estimate", "p", "norm_p", "sigma", "theta", "tol", "epsilon", "ordering_tol",
        "decay_rate", "decay_rate_tol", "gain_override", "growth_min", "rate_tol",
        "oracle_tol", "roundtrip_tol", "n_fields", "logy",
    },
    "loop": {"mode"},
}


def parse_scenario(path) -> Scenario:
    """Parse one scenario file, rejecting unknown sections, keys, and kinds."""
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ScenarioError(f"cannot parse scenario file {path}: {exc}") from exc

    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise ScenarioError(f"{path}: unknown section [{section}]")
        unknown = set(cp[section]) - _SECTION_KEYS[section]
        if unknown:
            raise ScenarioError(f"{path}: unknown key(s) {sorted(unknown)} in [{section}]")
    for required in ("scenario", "grid"):
        if required not in cp:
            raise ScenarioError(f"{path}: missing section [{required}]")

    def get(section, key, conv, default=None, required=False):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                return conv(raw)
            except ScenarioError:
                raise
            except ValueError as exc:
                raise ScenarioError(f"{path}: bad value for {section}.{key}: {raw!r}") from exc
        if required:
            raise ScenarioError(f"{path}: missing required key {section}.{key}")
        return default

    def boolean(raw: str) -> bool:
        lowered = raw.strip().lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ScenarioError(f"{path}: expected a boolean, got {raw!r}")

    kind = get("scenario", "kind", str, required=True).strip().lower()
    if kind not in KINDS:
        raise ScenarioError(f"{path}: unknown kind {kind!r}; expected one of {KINDS}")
    name = get("scenario", "name", str, default=path.stem).strip()
    if not re.fullmatch(r"[A-Za-z0-9._-]+", name):
        raise ScenarioError(f"{path}: scenario name {name!r} must be filesystem-safe")

    grid = Grid1D(
        n_interior=get("grid", "n_interior", int, required=True),
        dt=get("grid", "dt", float, required=True),
        t_final=get("grid", "t_final", float, required=True),
    )
    estimate = get("check", "estimate", str, default="l2").strip().lower()
    if estimate not in ("weighted_l1", "l2", "weighted_sup"):
        raise ScenarioError(f"{path}: unknown estimate {estimate!r}")
    mode = get("loop", "mode", str, default="closed").strip().lower()
    if mode not in ("open", "closed"):
        raise ScenarioError(f"{path}: loop mode must be open or closed, got {mode!r}")

    return Scenario(
        name=name,
        kind=kind,
        seed=get("scenario", "seed", int, default=0),
        grid=grid,
        a=get("problem", "a", float, default=1.0),
        k_reaction=get("problem", "k_reaction", float, default=0.0),
        reaction=get("problem", "reaction", str, default="zero"),
        initial=get("problem", "initial", str, default="zero"),
        d0=get("problem", "d0", str, default="zero"),
        d1=get("problem", "d1", str, default="zero"),
        estimate=estimate,
        p=get("check", "p", float, default=2.0),
        norm_p=get("check", "norm_p", float, default=2.0),
        sigma=get("check", "sigma", float),
        theta=get("check", "theta", float),
        tol=get("check", "tol", float, default=0.02),
        epsilon=get("check", "epsilon", float, default=0.05),
        ordering_tol=get("check", "ordering_tol", float, default=1e-10),
        decay_rate=get("check", "decay_rate", float),
        decay_rate_tol=get("check", "decay_rate_tol", float, default=0.02),
        gain_override=get("check", "gain_override", float),
        mode=mode,
        growth_min=get("check", "growth_min", float, default=10.0),
        rate_tol=get("check", "rate_tol", float, default=0.05),
        oracle_tol=get("check", "oracle_tol", float, default=1e-6),
        roundtrip_tol=get("check", "roundtrip_tol", float, default=1e-8),
        n_fields=get("check", "n_fields", int, default=20),
        logy=get("check", "logy", boolean, default=True),
        base_dir=path.parent,
    )


def make_reaction(selector: str):
    """Catalog lookup: returns (vectorized callable or None, slope bound)."""
    name, args = parse_selector(selector)
    if name == "zero":
        return None, 0.0
    if name == "linear":
        (c,) = _floats(args, 1, "linear reaction")
        return (lambda z, w, grad: c * w), abs(c)
    if name == "cubic":
        if args:
            raise ScenarioError("cubic reaction takes no arguments")
        return (lambda z, w, grad: w - w**3), 1.0
    raise ScenarioError(f"unknown reaction selector {selector!r}")


def make_signal(selector: str, grid: Grid1D, base_dir: Path) -> BoundarySignal:
    """Catalog lookup for boundary/actuator signals, sampled on grid times."""
    name, args = parse_selector(selector)
    times = grid.times()
    if name == "zero":
        return BoundarySignal.zero()
    if name == "constant":
        (c,) = _floats(args, 1, "constant signal")
        return BoundarySignal.constant(c)
    if name == "step":
        c, t_on = _floats(args, 2, "step signal")
        return BoundarySignal.sampled(times, np.where(times >= t_on, c, 0.0))
    if name == "sinusoid":
        amp, omega = _floats(args, 2, "sinusoid signal")
        return BoundarySignal.sampled(times, amp * np.sin(omega * times))
    if name == "file":
        # two-column CSV t,value with a header row; relative to the scenario file
        if len(args) != 1:
            raise ScenarioError("file signal expects one path argument")
        fpath = Path(args[0])
        if not fpath.is_absolute():
            fpath = base_dir / fpath
        try:
            table = np.loadtxt(fpath, delimiter=",", skiprows=1, ndmin=2)
        except OSError as exc:
            raise ScenarioError(f"cannot read signal file {fpath}: {exc}") from exc
        except ValueError as exc:
            raise ScenarioError(f"cannot parse signal file {fpath}: {exc}") from exc
        if table.shape[1] != 2:
            raise ScenarioError(f"signal file {fpath} must have two columns t,value")
        return BoundarySignal.sampled(table[:, 0], table[:, 1])
    raise ScenarioError(f"unknown signal selector {selector!r}")


def make_initial(selector: str, grid: Grid1D, rng: np.random.Generator, left0: float, right0: float) -> Field:
    """Catalog lookup for initial profiles.

    ``random_smooth`` anchors a linear ramp at the t = 0 boundary values so
    the pair (initial, signals) is always admissible; the deterministic
    profiles are used with matching boundary data.
    """
    name, args = parse_selector(selector)
    z = grid.nodes
    if name == "zero":
        return Field.zeros(grid)
    if name == "constant":
        (c,) = _floats(args, 1, "constant initial data")
        return Field.constant(grid, c)
    if name == "sin_pi":
        return Field(np.sin(np.pi * z), grid)
    if name == "mode":
        (j,) = _floats(args, 1, "mode initial data")
        if j < 1 or j != int(j):
            raise ScenarioError("mode index must be a positive integer")
        return Field(np.sin(int(j) * np.pi * z), grid)
    if name == "ramp":
        return Field(left0 * (1.0 - z) + right0 * z, grid)
    if name == "random_smooth":
        n_modes, amp = _floats(args, 2, "random_smooth initial data")
        if n_modes < 1 or n_modes != int(n_modes):
            raise ScenarioError("random_smooth mode count must be a positive integer")
        profile = left0 * (1.0 - z) + right0 * z
        for j in range(1, int(n_modes) + 1):
            profile = profile + amp * rng.uniform(-1.0, 1.0) / j**2 * np.sin(j * np.pi * z)
        return Field(profile, grid)
    raise ScenarioError(f"unknown initial-data selector {selector!r}")


def build_problem(scenario: Scenario, rng: np.random.Generator) -> SemilinearProblem:
    """Assemble the semilinear problem a scenario describes."""
    reaction, slope = make_reaction(scenario.reaction)
    d0 = make_signal(scenario.d0, scenario.grid, scenario.base_dir)
    d1 = make_signal(scenario.d1, scenario.grid, scenario.base_dir)
    initial = make_initial(scenario.initial, scenario.grid, rng, float(d0(0.0)), float(d1(0.0)))
    return SemilinearProblem(
        a=scenario.a,
        initial=initial,
        boundary_left=d0,
        boundary_right=d1,
        reaction=reaction,
        lipschitz_k=slope,
    )


def default_weighted_sup_params(a: float, sigma: Optional[float], theta: Optional[float]) -> tuple[float, float]:
    """Fill in (sigma, theta) for the weighted-sup estimate when omitted."""
    if sigma is None:
        sigma = 0.5 * a * math.pi**2
    phi = math.sqrt(sigma / a)
    if theta is None:
        theta = 0.5 * (math.pi - phi)
    return sigma, theta
