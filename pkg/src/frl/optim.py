"""Discrete optimizers and the training loop that records per-step diagnostics."""

from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .factorized import DeepChain, ElementwiseProduct, Factorization, balance_gap, chain_epsilon, product
from .objectives import param_gradients, regularizer_values
from .spectra import DEFAULT_THRESHOLD, pseudo_rank, singular_values

KINDS = ("gd", "momentum_wd", "adam", "adamw")

# absolute floor under which trace singular values count as zero; the
# experiments here work with O(1) weights
TRACE_SV_ATOL = 1e-12


class DivergenceError(RuntimeError):
    """Raised when a parameter or gradient becomes non-finite.

    ``trace`` holds the records captured before the failure, if any.
    """

    def __init__(self, message="diverged", trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "gd"
    step_size: float = 1e-2
    weight_decay: float = 0.0
    momentum: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    noise_sigma: float = 0.0
    grad_clip: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"optimizer kind must be one of {KINDS}, got {self.kind!r}")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.kind == "momentum_wd" and not 0 < self.momentum <= 1:
            raise ValueError("momentum must lie in (0, 1]")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ValueError("grad_clip must be positive when set")

    def to_dict(self):
        return asdict(self)


@dataclass
class OptimizerState:
    first: list
    second: list
    t: int = 0
    rng: np.random.Generator | None = None


def init_state(params, config):
    first = [np.zeros_like(p, dtype=np.float64) for p in params]
    second = [np.zeros_like(p, dtype=np.float64) for p in params]
    rng = np.random.Generator(np.random.Philox(config.seed)) if config.noise_sigma > 0 else None
    return OptimizerState(first=first, second=second, t=0, rng=rng)


def clip_gradients(grads, max_norm):
    """Rescale all gradients jointly so their global Frobenius norm is at most ``max_norm``."""
    if max_norm is None:
        return grads
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total <= max_norm or not np.isfinite(total):
        return grads
    return [g * (max_norm / total) for g in grads]


def _prepare(params, grads, config):
    if len(params) != len(grads):
        raise ValueError(f"got {len(params)} parameters but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ValueError(f"gradient shape {np.shape(g)} does not match parameter shape {np.shape(p)}")
    grads = [np.asarray(g, dtype=np.float64) for g in grads]
    if config.grad_clip is not None:
        grads = clip_gradients(grads, config.grad_clip)
    # non-finite gradients surface as non-finite parameters inside the kernels
    return grads


def gd_step(params, grads, config):
    """``p <- p - eta * g``; the regularizer, if any, is already inside ``g``."""
    grads = _prepare(params, grads, config)
    out = []
    for p, g in zip(params, grads):
        q = np.array(p, dtype=np.float64)
        if not kernels.sgd_update(q.reshape(-1), np.ascontiguousarray(g).reshape(-1), config.step_size):
            raise DivergenceError("diverged")
        out.append(q)
    return out


def momentum_wd_step(params, grads, state, config):
    """Heavy-ball momentum with decoupled weight decay and optional gradient noise.

    ``H <- (1 - mu) H + mu (g + sigma xi)`` then ``p <- p - eta (H + wd p)``,
    with ``xi`` fresh standard normal entries per step.
    """
    grads = _prepare(params, grads, config)
    state.t += 1
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        q = np.array(p, dtype=np.float64)
        if config.noise_sigma > 0:
            noise = state.rng.standard_normal(q.size)
        else:
            noise = np.zeros(q.size)
        ok = kernels.momentum_update(
            q.reshape(-1),
            np.ascontiguousarray(g).reshape(-1),
            state.first[i].reshape(-1),
            noise,
            config.step_size,
            config.momentum,
            config.noise_sigma,
            config.weight_decay,
        )
        if not ok:
            raise DivergenceError("diverged")
        out.append(q)
    return out, state


def adamw_step(params, grads, state, config):
    """Adam with bias correction; ``adamw`` applies decoupled decay, ``adam`` none."""
    grads = _prepare(params, grads, config)
    decay = config.weight_decay if config.kind == "adamw" else 0.0
    state.t += 1
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        q = np.array(p, dtype=np.float64)
        ok = kernels.adam_update(
            q.reshape(-1),
            np.ascontiguousarray(g).reshape(-1),
            state.first[i].reshape(-1),
            state.second[i].reshape(-1),
            state.t,
            config.step_size,
            config.beta1,
            config.beta2,
            config.epsilon,
            decay,
        )
        if not ok:
            raise DivergenceError("diverged")
        out.append(q)
    return out, state


def step(params, grads, state, config):
    if config.kind == "gd":
        state.t += 1
        return gd_step(params, grads, config), state
    if config.kind == "momentum_wd":
        return momentum_wd_step(params, grads, state, config)
    return adamw_step(params, grads, state, config)


@dataclass(frozen=True)
class TraceRecord:
    step: int
    loss_value: float
    l2_value: float
    nuclear_value: float
    balance_gap_fro: float
    reg_gap: float
    pseudo_rank: float
    singular_values: tuple


@dataclass
class Trace:
    records: list = field(default_factory=list)
    lam: float = 0.0
    config: OptimizerConfig | None = None
    final_model: object = None
    diverged: bool = False

    def column(self, name):
        if name == "step":
            return np.array([r.step for r in self.records], dtype=np.int64)
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def singular_value_matrix(self):
        return np.array([r.singular_values for r in self.records], dtype=np.float64)


def balance_measure(model):
    """Imbalance of a model's factors.

    Pair: ``||A^T A - B^T B||_F``. Chain: the nuclear-norm imbalance epsilon.
    Elementwise product: ``||A*A - B*B||_F``. Direct: 0.
    """
    if isinstance(model, Factorization):
        return float(np.linalg.norm(balance_gap(model)))
    if isinstance(model, DeepChain):
        return chain_epsilon(model.layers)
    if isinstance(model, ElementwiseProduct):
        return float(np.linalg.norm(model.a**2 - model.b**2))
    return 0.0


def make_record(step_index, model, loss, lam, threshold=DEFAULT_THRESHOLD):
    w = product(model)
    base = loss.value(w)
    fro, low_rank = regularizer_values(model, w)
    s = singular_values(w, atol=TRACE_SV_ATOL)
    return TraceRecord(
        step=int(step_index),
        loss_value=float(base),
        l2_value=float(base + lam * fro),
        nuclear_value=float(base + lam * low_rank),
        balance_gap_fro=balance_measure(model),
        reg_gap=float(abs(fro - low_rank)),
        pseudo_rank=pseudo_rank(s, threshold),
        singular_values=tuple(float(x) for x in s),
    )


def run_training(
    model,
    loss,
    lam,
    config,
    steps,
    record_every=1,
    threshold=DEFAULT_THRESHOLD,
    callback=None,
    stop_tol=None,
):
    """Optimize ``L(W) + lam/2 * sum ||P||^2`` over the parameters of ``model``.

    ``lam`` is always the L2 strength inside the gradient; decoupled decay for
    ``momentum_wd``/``adamw`` comes from ``config.weight_decay``. Records are
    taken at step 0, every ``record_every`` steps, and at the last step.
    ``callback(step, model)``, if given, runs after every step. With
    ``stop_tol`` set, training ends early once no parameter entry moves by
    more than ``stop_tol * step_size`` in one step.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    trace = Trace(lam=float(lam), config=config)
    trace.records.append(make_record(0, model, loss, lam, threshold))
    params = [np.array(p, dtype=np.float64) for p in model.params]
    state = init_state(params, config)
    for t in range(1, steps + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                grads = param_gradients(model, loss, lam)
                params, state = step(params, grads, state, config)
        except DivergenceError as exc:
            # keep the last finite state in the partial trace
            if trace.records[-1].step != t - 1:
                try:
                    with np.errstate(over="ignore", invalid="ignore"):
                        trace.records.append(make_record(t - 1, model, loss, lam, threshold))
                except ValueError:
                    pass  # already overflowed in the product
            trace.diverged = True
            trace.final_model = model
            raise DivergenceError(f"diverged at step {t}", trace) from exc
        converged = False
        if stop_tol is not None:
            moved = max(float(np.max(np.abs(p - q))) for p, q in zip(params, model.params))
            converged = moved < stop_tol * config.step_size
        model = model.with_params(params, check=False)
        if callback is not None:
            callback(t, model)
        if t % record_every == 0 or t == steps or converged:
            trace.records.append(make_record(t, model, loss, lam, threshold))
        if converged:
            break
    trace.final_model = model
    return trace
