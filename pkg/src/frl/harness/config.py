"""Declarative sweep description and its JSON form."""

import json
from dataclasses import dataclass, field, fields

import numpy as np

from ..factorized import DeepChain, Direct, ElementwiseProduct, Factorization
from ..objectives import AffineDistance, MaskedCompletion, MatrixRegression, WhitenedRegression
from ..optim import OptimizerConfig

LOSS_KINDS = ("regression", "masked_completion", "whitened", "affine_distance")
MODEL_KINDS = ("factorized", "chain", "elementwise", "direct")
LAMBDA_ROLES = ("l2", "weight_decay")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _matrix(value, name):
    try:
        m = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, "must be a numeric nested array") from exc
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2 or m.size == 0:
        raise ConfigError(name, "must be a non-empty row-major matrix")
    if not np.all(np.isfinite(m)):
        raise ConfigError(name, "entries must be finite")
    return m


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(name, f"must be a positive integer, got {value!r}")
    return value


def _require(spec, key, prefix):
    if key not in spec:
        raise ConfigError(f"{prefix}.{key}", "missing")
    return spec[key]


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    loss: dict
    model: dict
    lambdas: list
    init: dict = field(default_factory=lambda: {"distribution": "gaussian", "scale": 0.1, "seed": 0})
    optimizer: dict = field(default_factory=dict)
    lambda_role: str = "l2"
    l2: float = 0.0
    steps: int = 20000
    record_every: int = 10
    output_dir: str = "out"
    threshold: float = 0.95
    rate_window: list = field(default_factory=lambda: [50, 500])
    workers: int = 1
    stop_tol: float | None = None

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ConfigError("name", "must be a non-empty string")
        if not isinstance(self.lambdas, (list, tuple)) or len(self.lambdas) == 0:
            raise ConfigError("lambdas", "must be a non-empty array")
        for i, lam in enumerate(self.lambdas):
            if isinstance(lam, bool) or not isinstance(lam, (int, float)) or not np.isfinite(lam) or lam < 0:
                raise ConfigError(f"lambdas[{i}]", f"must be a finite non-negative number, got {lam!r}")
        if self.lambda_role not in LAMBDA_ROLES:
            raise ConfigError("lambda_role", f"must be one of {LAMBDA_ROLES}")
        if not isinstance(self.l2, (int, float)) or self.l2 < 0:
            raise ConfigError("l2", "must be non-negative")
        if isinstance(self.steps, bool) or not isinstance(self.steps, int) or self.steps < 0:
            raise ConfigError("steps", "must be a non-negative integer")
        _positive_int(self.record_every, "record_every")
        _positive_int(self.workers, "workers")
        if not isinstance(self.output_dir, str) or not self.output_dir:
            raise ConfigError("output_dir", "must be a non-empty path")
        if not isinstance(self.threshold, (int, float)) or not 0 < self.threshold <= 1:
            raise ConfigError("threshold", "must lie in (0, 1]")
        w = self.rate_window
        if not isinstance(w, (list, tuple)) or len(w) != 2 or not all(isinstance(x, int) for x in w) or not 0 <= w[0] < w[1]:
            raise ConfigError("rate_window", "must be [start, stop] with 0 <= start < stop")
        if self.stop_tol is not None and not self.stop_tol > 0:
            raise ConfigError("stop_tol", "must be positive when set")
        self.optimizer_config(0)
        self.build_loss()
        self.build_model(np.random.default_rng(0))

    def optimizer_config(self, cell_seed, lam=None):
        opt = dict(self.optimizer)
        unknown = set(opt) - {f.name for f in fields(OptimizerConfig)}
        if unknown:
            raise ConfigError(f"optimizer.{sorted(unknown)[0]}", "unknown field")
        if lam is not None and self.lambda_role == "weight_decay":
            opt["weight_decay"] = lam
        opt["seed"] = int(opt.get("seed", 0)) + cell_seed
        try:
            return OptimizerConfig(**opt)
        except (TypeError, ValueError) as exc:
            raise ConfigError("optimizer", str(exc)) from exc

    def l2_strength(self, lam):
        return float(lam) if self.lambda_role == "l2" else float(self.l2)

    def build_loss(self):
        spec = self.loss
        if not isinstance(spec, dict):
            raise ConfigError("loss", "must be an object")
        kind = spec.get("kind")
        try:
            if kind == "regression":
                return MatrixRegression(_matrix(_require(spec, "target", "loss"), "loss.target"), spec.get("scale", 0.5))
            if kind == "masked_completion":
                return MaskedCompletion(
                    _matrix(_require(spec, "target", "loss"), "loss.target"),
                    _matrix(_require(spec, "mask", "loss"), "loss.mask"),
                )
            if kind == "whitened":
                return WhitenedRegression(
                    _matrix(_require(spec, "sigma_yx", "loss"), "loss.sigma_yx"),
                    _matrix(_require(spec, "sigma_xx", "loss"), "loss.sigma_xx"),
                )
            if kind == "affine_distance":
                return AffineDistance(_require(spec, "u", "loss"), _require(spec, "c", "loss"))
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError("loss", str(exc)) from exc
        raise ConfigError("loss.kind", f"must be one of {LOSS_KINDS}, got {kind!r}")

    def _shapes(self):
        spec = self.model
        if not isinstance(spec, dict):
            raise ConfigError("model", "must be an object")
        kind = spec.get("kind")
        if kind == "factorized":
            m, n, r = (_positive_int(_require(spec, k, "model"), f"model.{k}") for k in ("m", "n", "r"))
            return kind, [(m, r), (n, r)]
        if kind == "chain":
            dims = _require(spec, "dims", "model")
            if not isinstance(dims, list) or len(dims) < 3:
                raise ConfigError("model.dims", "needs at least 3 entries (2 layers)")
            dims = [_positive_int(d, f"model.dims[{i}]") for i, d in enumerate(dims)]
            return kind, [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
        if kind in ("elementwise", "direct"):
            m, n = (_positive_int(_require(spec, k, "model"), f"model.{k}") for k in ("m", "n"))
            return kind, [(m, n)] * (2 if kind == "elementwise" else 1)
        raise ConfigError("model.kind", f"must be one of {MODEL_KINDS}, got {kind!r}")

    def build_model(self, rng):
        kind, shapes = self._shapes()
        init = self.init
        if not isinstance(init, dict):
            raise ConfigError("init", "must be an object")
        dist = init.get("distribution", "gaussian")
        if dist == "gaussian":
            scale = init.get("scale", 0.1)
            if not isinstance(scale, (int, float)) or scale < 0:
                raise ConfigError("init.scale", "must be non-negative")
            params = [rng.normal(0.0, scale, shape) for shape in shapes]
        elif dist == "fixed":
            given = _require(init, "params", "init")
            if not isinstance(given, list) or len(given) != len(shapes):
                raise ConfigError("init.params", f"expected {len(shapes)} matrices")
            params = []
            for i, (p, shape) in enumerate(zip(given, shapes)):
                p = _matrix(p, f"init.params[{i}]")
                if p.shape != shape:
                    raise ConfigError(f"init.params[{i}]", f"expected shape {shape}, got {p.shape}")
                params.append(p)
        else:
            raise ConfigError("init.distribution", f"must be 'gaussian' or 'fixed', got {dist!r}")
        if kind == "factorized":
            model = Factorization(*params)
        elif kind == "chain":
            model = DeepChain(tuple(params))
        elif kind == "elementwise":
            model = ElementwiseProduct(*params)
        else:
            model = Direct(params[0])
        loss = self.build_loss()
        target = getattr(loss, "d", getattr(loss, "sigma_yx", None))
        if target is not None and target.shape != model.shape:
            raise ConfigError("model", f"product shape {model.shape} does not match loss target {target.shape}")
        if isinstance(loss, AffineDistance) and loss.u.size != int(np.prod(model.shape)):
            raise ConfigError("model", f"model has {int(np.prod(model.shape))} entries but loss.u has {loss.u.size}")
        return model

    def base_seed(self):
        seed = self.init.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("init.seed", "must be an integer")
        return seed

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        for key in ("name", "loss", "model", "lambdas"):
            if key not in data:
                raise ConfigError(key, "missing")
        return cls(**data)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    return ExperimentConfig.from_json(text)
