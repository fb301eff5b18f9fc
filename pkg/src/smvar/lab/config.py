"""Experiment configuration: a TOML document with one table per concern."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli
import tomli_w

from ..critical import DEFAULT_SEED, SolverConfig
from ..energy import PsiMode, SystemParams
from ..errors import ConfigError
from ..expr import field_from_expression, parse_expression
from ..manifold import Manifold, build_torus
from ..nonlinearity import Nonlinearity, from_spec


@dataclass
class ManifoldSpec:
    n: int = 16
    L: float = 1.0
    psi: str = ""

    def build(self) -> Manifold:
        if not self.psi:
            return build_torus(self.n, self.L)
        flat = build_torus(self.n, self.L)
        return build_torus(self.n, self.L, field_from_expression(flat, self.psi).values)


@dataclass
class ParamsSpec:
    e: float = 1.0
    q: float = 1.0
    mu0: float = 0.0
    alpha: str = "1"
    beta: str = "1"
    psi_mode: str = PsiMode.LAMBDA_ALPHA.value
    lam: float = 0.0

    def build(self, M: Manifold, lam: float | None = None) -> SystemParams:
        lam = self.lam if lam is None else lam
        mode = PsiMode(self.psi_mode)
        e = lam if mode is PsiMode.LAMBDA_ALPHA_PLUS_MU0_BETA else self.e
        return SystemParams(e, self.q, lam, self.mu0, field_from_expression(M, self.alpha),
                            field_from_expression(M, self.beta), mode)


@dataclass
class LambdaGrid:
    values: list[float] = field(default_factory=lambda: [1.0])
    # "absolute", or a named reference the values multiply:
    # "trivial_bound", "multiplicity_bound" (thresholds), "lambda0" (superlinear)
    relative_to: str = "absolute"


@dataclass
class ExperimentSpec:
    n_starts: int = 8
    start_amplitude: float = 1.0
    tau: float | None = None
    components_domain: list[float] = field(default_factory=lambda: [-10.0, 10.0])
    q_sweep: list[float] = field(default_factory=list)
    a_sweep: list[float] = field(default_factory=list)
    kappa_p: float | None = None
    tau_grid: list[float] = field(default_factory=lambda: [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0])
    j_mu_field: str = "1 + 0.5*sin(2*pi*x/L)"
    j_mu_scales: list[float] = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    trials: int = 100
    gradient_trials: int = 20
    mountain_pass: bool = True


@dataclass
class OutputSpec:
    dir: str = "out"
    formats: list[str] = field(default_factory=lambda: ["json", "csv", "gp"])


@dataclass
class ExperimentConfig:
    manifold: ManifoldSpec = field(default_factory=ManifoldSpec)
    nonlinearity: dict = field(default_factory=lambda: {"kind": "piecewise_g", "variant": "minus_one", "a": 2.0})
    params: ParamsSpec = field(default_factory=ParamsSpec)
    lambda_grid: LambdaGrid = field(default_factory=LambdaGrid)
    solver: SolverConfig = field(default_factory=SolverConfig)
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)

    def build_nonlinearity(self) -> Nonlinearity:
        return from_spec(self.nonlinearity)

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        d = self.to_dict()
        d["solver"]["rng_seed"] = int(seed)
        return ExperimentConfig.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"]["lambda"] = d["params"].pop("lam")
        # TOML has no null; drop unset optionals
        d["experiment"] = {k: v for k, v in d["experiment"].items() if v is not None}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        if "params" in data and "lambda" in data["params"]:
            data["params"]["lam"] = data["params"].pop("lambda")
        kw = {}
        for f in fields(cls):
            if f.name not in data:
                continue
            if f.name == "nonlinearity":
                kw[f.name] = dict(data[f.name])
                continue
            sub = {"manifold": ManifoldSpec, "params": ParamsSpec, "lambda_grid": LambdaGrid,
                   "solver": SolverConfig, "experiment": ExperimentSpec, "outputs": OutputSpec}[f.name]
            try:
                kw[f.name] = sub(**data[f.name])
            except TypeError as exc:
                raise ConfigError(f"[{f.name}]: {exc}") from None
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def validate(self):
        try:
            PsiMode(self.params.psi_mode)
        except ValueError:
            raise ConfigError(f"unknown psi_mode {self.params.psi_mode!r}") from None
        for text in (self.params.alpha, self.params.beta, self.manifold.psi or "0"):
            parse_expression(text)
        if self.lambda_grid.relative_to not in ("absolute", "trivial_bound", "multiplicity_bound", "lambda0"):
            raise ConfigError(f"unknown lambda_grid.relative_to {self.lambda_grid.relative_to!r}")
        self.build_nonlinearity()


def dumps(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def loads(text: str) -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return ExperimentConfig.from_dict(data)


def load(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)


__all__ = ["ExperimentConfig", "ManifoldSpec", "ParamsSpec", "LambdaGrid", "ExperimentSpec", "OutputSpec",
           "dumps", "loads", "load", "DEFAULT_SEED"]
