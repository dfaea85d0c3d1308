"""Run configuration: a flat, sectioned key-value file.

Example::

    [lattice]
    d = 2
    n = 128

    [law]
    family = IPMB
    nu = 0.0

    [initial]
    recipe = gevrey
    tau0 = 0.5
    seed = 7

Every key is listed in :data:`SCHEMA` together with its default.  Unknown
sections or keys are errors, and all errors are collected before raising
:class:`ConfigError`.  ``emit`` writes the fully resolved config, and parsing it
again gives an equal config.

Recipes
-------
``gevrey``  amplitude * exp(-tau0 |k|^{1/s}) with random phases.  Phases come from
            ``numpy.random.Generator(PCG64(seed)).random(shape)`` drawn over the
            whole lattice in C order; the phase at ``k`` becomes
            ``pi * (u(k) - u(-k))``, so the field is real and each amplitude is
            exactly the envelope.
``modes``   ``"k1,k2[,k3]:re[,im]; ..."``, each entry adding
            ``Re((re + i im) exp(i k.x))`` to the field.
``zero``    the zero field (``none`` is accepted as a synonym for forcing).
"""

from __future__ import annotations

import configparser
import math
import typing
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .laws import SymbolLaw
from .spectral import Lattice, SpectralField, reflect

__all__ = [
    "ConfigError",
    "LatticeSpec",
    "LawSpec",
    "Recipe",
    "PhysicsSpec",
    "StepPolicy",
    "NormPlan",
    "OutputSpec",
    "SweepSpec",
    "RadiusSpec",
    "PicardSpec",
    "CheckSpec",
    "RunConfig",
    "SCHEMA",
    "parse_config",
    "emit",
    "load_config",
    "build_recipe",
    "gevrey_field",
    "parse_modes",
]


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class LatticeSpec:
    d: int = 2
    n: int = 64
    dealias_cut: int = 0  # 0 selects the alias-free default


@dataclass(frozen=True)
class LawSpec:
    family: str = "IPMB"
    nu: float = 0.0
    beta: float = 1.0
    k3_plane: str = "zero"


@dataclass(frozen=True)
class Recipe:
    recipe: str = "gevrey"
    tau0: float = 0.5
    s: float = 1.0
    seed: int = 0
    amplitude: float = 1.0
    modes: str = ""


@dataclass(frozen=True)
class PhysicsSpec:
    kappa: float = 0.0


@dataclass(frozen=True)
class StepPolicy:
    integrator: str = "rk4"
    dt_mode: str = "cfl"
    dt: float = 0.01
    cfl: float = 0.5
    t_end: float = 1.0
    resolution_guard: float = 1e-6
    output_interval: float = 0.05


@dataclass(frozen=True)
class NormPlan:
    sobolev: tuple[float, ...] = (1.0, 2.0)
    lp: tuple[float, ...] = (2.0, 3.0, 4.0, math.inf)
    gevrey_s: float = 1.0
    gevrey_r: float = 0.0
    gevrey_tau: tuple[float, ...] = ()
    radius_model: str = "power"


@dataclass(frozen=True)
class OutputSpec:
    dir: str = ""


@dataclass(frozen=True)
class SweepSpec:
    nu_list: tuple[float, ...] = tuple(0.1 / 2**j for j in range(8))
    T: float = 0.0  # 0: half of the nu = 0 resolved window
    norm: str = "auto"
    gevrey_tau: float = 0.0  # 0: half the nu = 0 radius estimate at T
    gevrey_r: float = 0.0  # 0: d/2 + 1.6
    sobolev_s: float = 0.0  # 0: s - 1 with s = d/2 + 1.5


@dataclass(frozen=True)
class RadiusSpec:
    compare_kappa: float = 0.0


@dataclass(frozen=True)
class PicardSpec:
    n_max: int = 6
    T_init: float = 0.2
    nodes: int = 9
    s: float = 0.0  # 0: d/2 + 1.5
    max_ratio: float = 0.6
    max_halvings: int = 12


@dataclass(frozen=True)
class CheckSpec:
    L: float = 0.0  # 0: 128 in d = 2, 64 in d = 3
    nu_grid: tuple[float, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    law: LawSpec = field(default_factory=LawSpec)
    initial: Recipe = field(default_factory=Recipe)
    forcing: Recipe = field(default_factory=lambda: Recipe(recipe="zero"))
    physics: PhysicsSpec = field(default_factory=PhysicsSpec)
    step: StepPolicy = field(default_factory=StepPolicy)
    norms: NormPlan = field(default_factory=NormPlan)
    output: OutputSpec = field(default_factory=OutputSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    radius: RadiusSpec = field(default_factory=RadiusSpec)
    picard: PicardSpec = field(default_factory=PicardSpec)
    check: CheckSpec = field(default_factory=CheckSpec)

    @property
    def kappa(self) -> float:
        return self.physics.kappa

    def make_lattice(self) -> Lattice:
        cut = self.lattice.dealias_cut or None
        return Lattice(self.lattice.d, self.lattice.n, cut)

    def make_law(self) -> SymbolLaw:
        spec = self.law
        if spec.family.lower() == "zero":
            return SymbolLaw.zero(self.lattice.d)
        if spec.family == "MG":
            return SymbolLaw.mg(spec.nu, k3_plane=spec.k3_plane)
        if spec.family == "SIPM":
            return SymbolLaw.sipm(spec.beta)
        return SymbolLaw(spec.family, nu=spec.nu)

    def initial_field(self, lattice: Lattice | None = None) -> SpectralField:
        return build_recipe(self.initial, lattice or self.make_lattice())

    def forcing_field(self, lattice: Lattice | None = None) -> SpectralField:
        return build_recipe(self.forcing, lattice or self.make_lattice())

    def with_values(self, **sections) -> RunConfig:
        """Copy with per-section overrides, e.g. ``with_values(law={"nu": 0.1})``."""
        changes = {}
        for name, vals in sections.items():
            changes[name] = replace(getattr(self, name), **vals)
        return replace(self, **changes)


SCHEMA = {
    "lattice": LatticeSpec,
    "law": LawSpec,
    "initial": Recipe,
    "forcing": Recipe,
    "physics": PhysicsSpec,
    "step": StepPolicy,
    "norms": NormPlan,
    "output": OutputSpec,
    "sweep": SweepSpec,
    "radius": RadiusSpec,
    "picard": PicardSpec,
    "check": CheckSpec,
}

_FAMILIES = ("MG", "IPMB", "SIPM", "zero")
_RECIPES = ("gevrey", "modes", "zero", "none")


def _hints(cls):
    return typing.get_type_hints(cls)


def _convert(text: str, kind):
    text = text.strip()
    if kind is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind is str:
        return text
    if typing.get_origin(kind) is tuple:
        if not text:
            return ()
        return tuple(float(t) for t in text.replace(";", ",").split(","))
    raise TypeError(kind)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse and validate config text; ``overrides`` are ``section.key=value``."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str
    errors = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot:
            errors.append(f"override {item!r} is not of the form section.key=value")
            continue
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, value.strip())

    built = {}
    for section in parser.sections():
        if section not in SCHEMA:
            errors.append(f"unknown section [{section}]")
            continue
        cls = SCHEMA[section]
        hints = _hints(cls)
        kwargs = {}
        for key, raw in parser.items(section):
            if key not in hints:
                errors.append(f"unknown key {section}.{key}")
                continue
            try:
                kwargs[key] = _convert(raw, hints[key])
            except (TypeError, ValueError):
                errors.append(f"{section}.{key}: cannot read {raw!r} as {hints[key]}")
        built[section] = cls(**kwargs)
    specs = {name: built.get(name, None) for name in SCHEMA}
    if specs["forcing"] is None:
        specs["forcing"] = Recipe(recipe="zero")
    cfg = RunConfig(**{k: v for k, v in specs.items() if v is not None})
    errors += validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path, overrides=()) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def validate(cfg: RunConfig) -> list[str]:
    errors = []
    lat = cfg.lattice
    if lat.d not in (2, 3):
        errors.append(f"lattice.d must be 2 or 3, got {lat.d}")
    if lat.n < 8 or lat.n % 2:
        errors.append(f"lattice.n must be even and >= 8, got {lat.n}")
    if lat.dealias_cut < 0 or lat.dealias_cut > lat.n // 2:
        errors.append("lattice.dealias_cut must lie in [0, n/2]")

    law = cfg.law
    if law.family not in _FAMILIES:
        errors.append(f"law.family must be one of {_FAMILIES}, got {law.family!r}")
    natural = {"MG": 3, "IPMB": 2, "SIPM": 2}.get(law.family)
    if natural is not None and natural != lat.d:
        errors.append(f"law.family {law.family} needs d = {natural}, lattice has d = {lat.d}")
    if law.nu < 0:
        errors.append("law.nu must be nonnegative")
    if not 0 < law.beta <= 1:
        errors.append("law.beta must lie in (0, 1]")
    if law.k3_plane not in ("zero", "formula"):
        errors.append("law.k3_plane must be 'zero' or 'formula'")

    for name in ("initial", "forcing"):
        errors += [f"{name}.{e}" for e in _recipe_errors(getattr(cfg, name), lat.d)]

    if cfg.physics.kappa < 0:
        errors.append("physics.kappa must be nonnegative")

    st = cfg.step
    if st.integrator != "rk4":
        errors.append("step.integrator must be rk4")
    if st.dt_mode not in ("cfl", "fixed"):
        errors.append("step.dt_mode must be 'cfl' or 'fixed'")
    if st.dt_mode == "fixed" and st.dt <= 0:
        errors.append("step.dt must be positive")
    if not 0 < st.cfl <= 1:
        errors.append("step.cfl must lie in (0, 1]")
    if st.t_end <= 0:
        errors.append("step.t_end must be positive")
    if st.output_interval <= 0:
        errors.append("step.output_interval must be positive")
    if not 0 < st.resolution_guard <= 1:
        errors.append("step.resolution_guard must lie in (0, 1]")

    nm = cfg.norms
    if any(p < 1 for p in nm.lp):
        errors.append("norms.lp entries must be >= 1")
    if nm.gevrey_s < 1:
        errors.append("norms.gevrey_s must be >= 1")
    if nm.gevrey_r < 0 or any(t < 0 for t in nm.gevrey_tau):
        errors.append("norms.gevrey_r and norms.gevrey_tau must be nonnegative")
    if nm.radius_model not in ("power", "linear"):
        errors.append("norms.radius_model must be 'power' or 'linear'")

    sw = cfg.sweep
    if any(v < 0 for v in sw.nu_list):
        errors.append("sweep.nu_list entries must be nonnegative")
    if sw.norm not in ("auto", "gevrey", "sobolev"):
        errors.append("sweep.norm must be auto, gevrey or sobolev")
    pc = cfg.picard
    if pc.n_max < 2 or pc.nodes < 8 or pc.T_init <= 0:
        errors.append("picard needs n_max >= 2, nodes >= 8 and T_init > 0")
    if cfg.check.L < 0:
        errors.append("check.L must be nonnegative")
    return errors


def _recipe_errors(rec: Recipe, d: int) -> list[str]:
    if rec.recipe not in _RECIPES:
        return [f"recipe must be one of {_RECIPES}, got {rec.recipe!r}"]
    errors = []
    if rec.recipe == "gevrey":
        if rec.tau0 <= 0:
            errors.append("tau0 must be positive")
        if rec.s < 1:
            errors.append("s must be >= 1")
        if not 0 <= rec.seed < 2**64:
            errors.append("seed must be a 64-bit unsigned integer")
    if rec.recipe == "modes":
        try:
            entries = parse_modes(rec.modes)
        except ValueError as exc:
            errors.append(f"modes: {exc}")
        else:
            if not entries:
                errors.append("modes: empty mode list")
            for k, _ in entries:
                if len(k) != d:
                    errors.append(f"modes: wavevector {k} is not {d}-dimensional")
    return errors


def parse_modes(text: str) -> list[tuple[tuple[int, ...], complex]]:
    out = []
    for entry in filter(None, (e.strip() for e in text.split(";"))):
        kpart, sep, vpart = entry.partition(":")
        if not sep:
            raise ValueError(f"entry {entry!r} lacks ':'")
        k = tuple(int(t) for t in kpart.split(","))
        v = [float(t) for t in vpart.split(",")]
        if len(v) not in (1, 2):
            raise ValueError(f"entry {entry!r} needs re or re,im")
        out.append((k, complex(v[0], v[1] if len(v) == 2 else 0.0)))
    return out


def gevrey_field(lattice: Lattice, tau0: float, s: float = 1.0, seed: int = 0,
                 amplitude: float = 1.0) -> SpectralField:
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(lattice.shape)
    phase = np.pi * (u - reflect(u))
    c = amplitude * np.exp(-tau0 * lattice.kmag ** (1.0 / s)) * np.exp(1j * phase)
    c[(0,) * lattice.d] = 0.0
    return SpectralField(lattice, c)


def build_recipe(rec: Recipe, lattice: Lattice) -> SpectralField:
    if rec.recipe in ("zero", "none"):
        return SpectralField.zeros(lattice)
    if rec.recipe == "gevrey":
        return gevrey_field(lattice, rec.tau0, rec.s, rec.seed, rec.amplitude)
    if rec.recipe == "modes":
        entries = parse_modes(rec.modes)
        return SpectralField.from_modes(lattice, {k: rec.amplitude * v for k, v in entries})
    raise ValueError(f"unknown recipe {rec.recipe!r}")


def emit(cfg: RunConfig) -> str:
    """Serialise every section and key (defaults included)."""
    lines = []
    for section in SCHEMA:
        spec = getattr(cfg, section)
        lines.append(f"[{section}]")
        for f in fields(spec):
            lines.append(f"{f.name} = {_format(getattr(spec, f.name))}")
        lines.append("")
    return "\n".join(lines)
