"""Experiment configuration: parsing, validation, and preset factories.

Configurations are plain structured text (TOML or JSON) with units-free
scalars. Initial data and sources come from named analytic families rather
than arbitrary expressions, which keeps runs reproducible without an
expression parser.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .lattice import (DifferentialSymbol, PeriodicCoefficient, derivative_symbol_1d,
                      dual_lattice, gradient_symbol)

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

_COEFFICIENT_KINDS = ("constant", "sinusoid", "laminate", "checkerboard", "table")
_PHI_KINDS = ("sine", "cosine", "bump", "constant", "zero")
_METRICS = ("L2", "H1_corrected", "H1_interior_corrected", "flux_L2",
            "Lp_time_L2", "Lp_time_H1", "resolvent_L2")


@dataclass(frozen=True)
class ExperimentConfig:
    coefficient: dict
    symbol: dict
    domain: dict
    bc: str = "dirichlet"
    phi: dict = field(default_factory=lambda: {"kind": "sine", "mode": 1})
    source: dict = field(default_factory=lambda: {"kind": "zero"})
    eps: tuple = (0.1, 0.05, 0.025, 0.0125)
    t: float = 0.5
    final_time: float = 1.0
    p: tuple = (2.0,)
    delta: float | None = None
    corrector_variants: tuple = ("smoothed",)
    metrics: tuple = ("L2",)
    cells_per_eps: int = 16
    n_cell: int = 1024
    smoothing_order: int = 6
    cg_rtol: float = 1e-12
    eigen_cutoff: int = 4000
    time_nodes: int = 96
    resolvent_shift: float = -1.0
    check_discretization: bool = False
    out_dir: str | None = None
    max_nodes: int = 2_000_000

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        object.__setattr__(self, "corrector_variants", tuple(self.corrector_variants))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        self.validate()

    def validate(self):
        if self.coefficient.get("kind") not in _COEFFICIENT_KINDS:
            raise ConfigError("coefficient.kind",
                              f"must be one of {_COEFFICIENT_KINDS}")
        if self.bc not in ("dirichlet", "neumann"):
            raise ConfigError("bc", "must be dirichlet or neumann")
        if self.phi.get("kind") not in _PHI_KINDS:
            raise ConfigError("phi.kind", f"must be one of {_PHI_KINDS}")
        if self.source.get("kind") not in _PHI_KINDS:
            raise ConfigError("source.kind", f"must be one of {_PHI_KINDS}")
        lengths = tuple(float(v) for v in np.atleast_1d(self.domain.get("lengths", ())))
        if len(lengths) not in (1, 2) or any(v <= 0 for v in lengths):
            raise ConfigError("domain.lengths", "need 1 or 2 positive edge lengths")
        if not self.eps:
            raise ConfigError("eps", "empty list")
        eps_cap = min(lengths) / 4.0
        if self.delta is not None:
            eps_cap = min(eps_cap, float(self.delta))
        for e in self.eps:
            if e <= 0:
                raise ConfigError("eps", f"nonpositive value {e}")
            if e > eps_cap + 1e-12:
                raise ConfigError("eps", f"value {e} exceeds admissible cap {eps_cap:g}")
        if self.cells_per_eps < 16:
            raise ConfigError("cells_per_eps", "resolution rule requires >= 16")
        if self.n_cell < 8:
            raise ConfigError("n_cell", "cell resolution must be >= 8")
        if self.t is not None and self.t <= 0:
            raise ConfigError("t", "must be positive")
        if self.final_time is not None and self.final_time <= 0:
            raise ConfigError("T", "must be positive")
        for v in self.p:
            if not (1 <= v or v == np.inf):
                raise ConfigError("p", f"exponent {v} outside [1, inf]")
        for variant in self.corrector_variants:
            if variant not in ("smoothed", "plain"):
                raise ConfigError("corrector_variants", f"unknown variant {variant!r}")
        for metric in self.metrics:
            if metric not in _METRICS:
                raise ConfigError("metrics", f"unknown metric {metric!r}")
        if any(m in ("H1_interior_corrected",) for m in self.metrics) and self.delta is None:
            raise ConfigError("delta", "interior metrics need a margin")
        if self.max_nodes <= 0:
            raise ConfigError("max_nodes", "budget must be positive")

    def to_dict(self):
        d = asdict(self)
        d["eps"] = list(self.eps)
        d["p"] = ["inf" if v == np.inf else v for v in self.p]
        d["corrector_variants"] = list(self.corrector_variants)
        d["metrics"] = list(self.metrics)
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "p" in data:
            data["p"] = tuple(np.inf if v in ("inf", "Infinity") else float(v)
                              for v in data["p"])
        for key in ("eps", "corrector_variants", "metrics"):
            if key in data:
                data[key] = tuple(data[key])
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        return cls(**data)

    @property
    def domain_lengths(self):
        return tuple(float(v) for v in np.atleast_1d(self.domain["lengths"]))

    @property
    def dimension(self):
        return len(self.domain_lengths)


def load_config(path):
    text = open(path, "rb").read()
    name = str(path)
    if name.endswith(".json"):
        data = json.loads(text.decode("utf-8"))
    else:
        data = tomllib.loads(text.decode("utf-8"))
    return ExperimentConfig.from_dict(data)


def save_config(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)


def build_lattice(config):
    basis = config.coefficient.get("basis")
    if basis is None:
        return dual_lattice(np.eye(config.dimension))
    return dual_lattice(np.asarray(basis, dtype=float))


def build_symbol(config):
    kind = config.symbol.get("kind", "gradient")
    if kind == "derivative_1d":
        return derivative_symbol_1d()
    if kind == "gradient":
        return gradient_symbol(config.dimension)
    if kind == "custom":
        return DifferentialSymbol.create(np.asarray(config.symbol["matrices"], dtype=float))
    raise ConfigError("symbol.kind", f"unknown symbol kind {kind!r}")


def _scalar_profile(cfg, d):
    kind = cfg["kind"]
    if kind == "constant":
        value = float(cfg.get("value", 1.0))
        return lambda y: np.full(y.shape[0], value), "linear"
    if kind == "sinusoid":
        base = float(cfg.get("base", 2.0))
        amp = float(cfg.get("amplitude", 1.0))
        freq = int(cfg.get("frequency", 1))
        axis = int(cfg.get("axis", 0))
        if abs(amp) >= base:
            raise ConfigError("coefficient.amplitude", "must keep the field positive")
        return (lambda y: base + amp * np.sin(2 * np.pi * freq * y[:, axis])), "linear"
    if kind == "laminate":
        values = [float(v) for v in cfg.get("values", (1.0, 4.0))]
        fraction = float(cfg.get("fraction", 0.5))
        axis = int(cfg.get("axis", 0))
        if not 0 < fraction < 1:
            raise ConfigError("coefficient.fraction", "must lie in (0, 1)")

        def laminate(y):
            phase = y[:, axis] - np.floor(y[:, axis])
            return np.where(phase < fraction, values[0], values[1])

        return laminate, "nearest"
    if kind == "checkerboard":
        values = [float(v) for v in cfg.get("values", (1.0, 4.0))]
        if d != 2:
            raise ConfigError("coefficient.kind", "checkerboard needs a 2D cell")

        def checker(y):
            fx = np.floor(2 * (y[:, 0] - np.floor(y[:, 0])))
            fy = np.floor(2 * (y[:, 1] - np.floor(y[:, 1])))
            return np.where((fx + fy) % 2 == 0, values[0], values[1])

        return checker, "nearest"
    raise ConfigError("coefficient.kind", f"unknown kind {kind!r}")


def build_coefficient(config, symbol, lattice):
    cfg = config.coefficient
    kind = cfg["kind"]
    m = symbol.m
    n_cell = int(cfg.get("n_cell", config.n_cell))
    if kind == "table":
        samples = np.asarray(cfg["samples"], dtype=float)
        if samples.ndim == lattice.d:       # scalar table
            samples = samples[..., None, None] * np.eye(m)
        return PeriodicCoefficient(lattice=lattice, samples=samples,
                                   interpolation=cfg.get("interpolation", "nearest"))
    profile, default_interp = _scalar_profile(cfg, lattice.d)
    interp = cfg.get("interpolation", default_interp)
    eye = np.eye(m)

    def matrix_field(points):
        return profile(points)[:, None, None] * eye

    return PeriodicCoefficient.from_callable(matrix_field, lattice, n_cell, interp)


def analytic_family(cfg, lengths):
    """Named initial-data/source family as a callable on points (P, d)."""
    kind = cfg["kind"]
    amplitude = float(cfg.get("amplitude", 1.0))
    mode = int(cfg.get("mode", 1))
    d = len(lengths)
    if kind == "zero":
        return lambda x: np.zeros(x.shape[0])
    if kind == "constant":
        return lambda x: np.full(x.shape[0], amplitude)
    if kind == "sine":
        def sine(x):
            out = np.full(x.shape[0], amplitude)
            for a in range(d):
                out = out * np.sin(mode * np.pi * x[:, a] / lengths[a])
            return out
        return sine
    if kind == "cosine":
        def cosine(x):
            out = np.full(x.shape[0], amplitude)
            for a in range(d):
                out = out * np.cos(mode * np.pi * x[:, a] / lengths[a])
            return out
        return cosine
    if kind == "bump":
        def bump(x):
            out = np.full(x.shape[0], amplitude)
            for a in range(d):
                s = x[:, a] / lengths[a]
                out = out * 16.0 * (s * (1.0 - s)) ** 2
            return out
        return bump
    raise ConfigError("phi.kind", f"unknown analytic family {kind!r}")


def canonical_1d(**overrides):
    """The canonical 1D experiment base: unit interval, sinusoidal scalar
    coefficient, first sine/cosine mode data."""
    base = dict(
        coefficient={"kind": "sinusoid", "base": 2.0, "amplitude": 1.0, "frequency": 1},
        symbol={"kind": "derivative_1d"},
        domain={"lengths": [1.0]},
        bc="dirichlet",
        phi={"kind": "sine", "mode": 1},
        source={"kind": "zero"},
        eps=(0.1, 0.05, 0.025, 0.0125),
        t=0.5,
        final_time=1.0,
        delta=0.25,
        n_cell=1024,
    )
    base.update(overrides)
    return ExperimentConfig(**base)
