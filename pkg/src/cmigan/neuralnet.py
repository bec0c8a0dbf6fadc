"""Dense feed-forward networks with exact gradients, RMSProp, and LR schedules.

Everything here is plain float64 numpy. Networks are ReLU-hidden,
identity-output MLPs stored as explicit weight/bias lists, initialized
uniformly in ``+-sqrt(6/fan_in)`` with zero biases. Gradients are exact
reverse-mode derivatives of ``sum_i <upstream_i, output_i>``, which is
what the adversarial training loops need (the upstream vector carries
the per-sample objective weights).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LR_FLOOR = 1e-8

_ACTIVATIONS = ("relu", "identity")
_SCHEDULE_MODES = ("total_decay", "per_interval")


class NumericalError(RuntimeError):
    """A training step produced non-finite parameters or losses."""


@dataclass(frozen=True)
class MLPSpec:
    """Architecture of a dense network.

    Parameters
    ----------
    input_dim, output_dim : int
        Positive layer widths at the boundaries.
    hidden_dims : tuple of int
        Hidden-layer widths. May be empty, which degenerates to a single
        linear map (handy for identity sanity checks).
    hidden_activation, output_activation : str
        ``"relu"`` for hidden layers and ``"identity"`` for the output
        are the only supported pair.
    """

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) != d or d < 1 for d in dims):
            raise ValueError(f"layer widths must be positive integers, got {dims}")
        if self.hidden_activation not in _ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation != "identity":
            raise ValueError("only identity output activation is supported")

    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    @property
    def num_params(self) -> int:
        dims = self.layer_dims()
        return sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))


@dataclass
class MLPParams:
    """Weights and biases of a dense network.

    ``weights[i]`` has shape ``(fan_in_i, fan_out_i)`` and ``biases[i]``
    shape ``(fan_out_i,)``. All entries stay finite; updates that would
    break that raise :class:`NumericalError`.
    """

    spec: MLPSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "MLPParams":
        return MLPParams(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        """All parameters concatenated into one vector (weights then bias per layer)."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)


@dataclass
class MLPGrads:
    """Gradient bundle returned by :func:`mlp_backward`.

    ``weights``/``biases`` mirror :class:`MLPParams`; ``inputs`` is the
    gradient with respect to the input batch, which lets a caller chain
    one network through another (generator through regressor).
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    inputs: np.ndarray


def mlp_init(spec: MLPSpec, seed: int) -> MLPParams:
    """Seeded uniform initialization.

    Weights are drawn from ``U(-sqrt(6/fan_in), +sqrt(6/fan_in))`` and
    biases start at zero. The same (spec, seed) pair always produces the
    same parameters bitwise.
    """
    rng = np.random.default_rng(seed)
    dims = spec.layer_dims()
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MLPParams(spec, weights, biases)


def _check_batch(params: MLPParams, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ValueError(f"batch must be 2-d, got shape {batch.shape}")
    if batch.shape[1] != params.spec.input_dim:
        raise ValueError(
            f"batch has {batch.shape[1]} columns, spec expects {params.spec.input_dim}"
        )
    return batch


def _forward_pass(params: MLPParams, batch: np.ndarray):
    """Forward pass keeping per-layer inputs and pre-activations for backprop."""
    layer_inputs = [batch]
    pre_acts = []
    h = batch
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        lin = h @ w + b
        pre_acts.append(lin)
        h = lin if i == last else np.maximum(lin, 0.0)
        if i < last:
            layer_inputs.append(h)
    return h, (layer_inputs, pre_acts)


def mlp_forward(params: MLPParams, batch: np.ndarray) -> np.ndarray:
    """Evaluate the network on a batch, returning ``(n, output_dim)`` scores."""
    batch = _check_batch(params, batch)
    out, _ = _forward_pass(params, batch)
    return out


def mlp_forward_cached(params: MLPParams, batch: np.ndarray):
    """Like :func:`mlp_forward` but also returns the activation cache.

    The cache feeds :func:`mlp_backward_cached`, which saves the training
    loops one redundant forward pass per update.
    """
    batch = _check_batch(params, batch)
    return _forward_pass(params, batch)


def _backward_pass(params: MLPParams, cache, upstream: np.ndarray) -> MLPGrads:
    layer_inputs, pre_acts = cache
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != pre_acts[-1].shape:
        raise ValueError(
            f"upstream gradient shape {upstream.shape} does not match output {pre_acts[-1].shape}"
        )
    n_layers = len(params.weights)
    g_w: list[np.ndarray] = [None] * n_layers
    g_b: list[np.ndarray] = [None] * n_layers
    delta = upstream
    for i in range(n_layers - 1, -1, -1):
        g_w[i] = layer_inputs[i].T @ delta
        g_b[i] = delta.sum(axis=0)
        delta = delta @ params.weights[i].T
        if i > 0:
            delta = delta * (pre_acts[i - 1] > 0.0)
    return MLPGrads(g_w, g_b, delta)


def mlp_backward(params: MLPParams, batch: np.ndarray, upstream_grad: np.ndarray) -> MLPGrads:
    """Exact gradients of ``sum_i <upstream_grad_i, output_i>``.

    Parameters
    ----------
    params : MLPParams
    batch : ndarray, shape (n, input_dim)
    upstream_grad : ndarray, shape (n, output_dim)
        Per-sample gradient of the scalar loss with respect to the
        network output.

    Returns
    -------
    MLPGrads
        Weight/bias gradients shaped like ``params`` plus the gradient
        with respect to ``batch``.
    """
    batch = _check_batch(params, batch)
    _, cache = _forward_pass(params, batch)
    return _backward_pass(params, cache, upstream_grad)


def mlp_backward_cached(params: MLPParams, cache, upstream_grad: np.ndarray) -> MLPGrads:
    """Backward pass reusing the cache from :func:`mlp_forward_cached`."""
    return _backward_pass(params, cache, upstream_grad)


def add_grads(a: MLPGrads, b: MLPGrads) -> MLPGrads:
    """Sum two gradient bundles (e.g. joint-batch and product-batch terms)."""
    return MLPGrads(
        [ga + gb for ga, gb in zip(a.weights, b.weights)],
        [ga + gb for ga, gb in zip(a.biases, b.biases)],
        a.inputs + b.inputs if a.inputs.shape == b.inputs.shape else a.inputs,
    )


@dataclass
class RMSPropState:
    """Per-parameter squared-gradient accumulators for RMSProp."""

    sq_weights: list[np.ndarray]
    sq_biases: list[np.ndarray]
    rho: float = 0.9
    eps: float = 1e-8


def rmsprop_init(params: MLPParams, rho: float = 0.9, eps: float = 1e-8) -> RMSPropState:
    return RMSPropState(
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
        rho=float(rho),
        eps=float(eps),
    )


def rmsprop_step(
    params: MLPParams, grads: MLPGrads, state: RMSPropState, lr: float
) -> tuple[MLPParams, RMSPropState]:
    """One RMSProp update.

    ``a <- rho*a + (1-rho)*g^2`` then ``p <- p - lr*g/(sqrt(a)+eps)``.
    Pure: returns fresh (params, state) and never mutates the inputs.

    Raises
    ------
    NumericalError
        If any updated parameter is non-finite.
    """
    if lr <= 0 or not math.isfinite(lr):
        raise ValueError(f"learning rate must be positive and finite, got {lr}")
    rho, eps = state.rho, state.eps
    new_w, new_b, new_sw, new_sb = [], [], [], []
    for w, gw, sw in zip(params.weights, grads.weights, state.sq_weights):
        acc = rho * sw + (1.0 - rho) * gw * gw
        new_sw.append(acc)
        new_w.append(w - lr * gw / (np.sqrt(acc) + eps))
    for b, gb, sb in zip(params.biases, grads.biases, state.sq_biases):
        acc = rho * sb + (1.0 - rho) * gb * gb
        new_sb.append(acc)
        new_b.append(b - lr * gb / (np.sqrt(acc) + eps))
    out = MLPParams(params.spec, new_w, new_b)
    if not all(np.isfinite(w).all() for w in new_w) or not all(
        np.isfinite(b).all() for b in new_b
    ):
        raise NumericalError("RMSProp update produced non-finite parameters")
    return out, RMSPropState(new_sw, new_sb, rho=rho, eps=eps)


@dataclass(frozen=True)
class ScheduleConfig:
    """Step-indexed learning-rate decay.

    ``total_decay`` (the default) spreads one full factor of
    ``decay_factor`` smoothly over ``total_steps``:
    ``lr(step) = initial_lr * decay_factor**(-completed/total_intervals)``
    with ``completed = floor(step/interval_steps)``, so the final step
    runs at ``initial_lr/decay_factor``.

    ``per_interval`` divides by the full factor at every interval
    boundary (``initial_lr * decay_factor**(-completed)``) and floors the
    result at 1e-8; over many intervals this effectively freezes
    training, which is why it is not the default.
    """

    initial_lr: float
    interval_steps: int
    decay_factor: float
    mode: str = "total_decay"
    total_steps: int = 30000

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        if self.interval_steps < 1:
            raise ValueError("interval_steps must be a positive integer")
        if self.decay_factor <= 1:
            raise ValueError("decay_factor must exceed 1")
        if self.mode not in _SCHEDULE_MODES:
            raise ValueError(f"mode must be one of {_SCHEDULE_MODES}, got {self.mode!r}")
        if self.mode == "total_decay" and self.total_steps < 1:
            raise ValueError("total_steps must be positive for total_decay")


def lr_at(step: int, config: ScheduleConfig) -> float:
    """Learning rate for a 0-indexed training step."""
    if step < 0:
        raise ValueError("step must be non-negative")
    completed = step // config.interval_steps
    if config.mode == "total_decay":
        total_intervals = config.total_steps / config.interval_steps
        return config.initial_lr * config.decay_factor ** (-completed / total_intervals)
    lr = config.initial_lr * config.decay_factor ** (-float(completed))
    return max(lr, LR_FLOOR)


@dataclass
class GradCheckFailure:
    net_seed: int
    layer: int
    kind: str
    index: tuple
    analytic: float
    numeric: float
    rel_err: float


@dataclass
class GradCheckReport:
    """Outcome of the finite-difference gradient audit."""

    passed: bool
    num_nets: int
    worst_rel_err: float
    tol: float
    h: float
    failures: list[GradCheckFailure] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "num_nets": self.num_nets,
            "worst_rel_err": self.worst_rel_err,
            "tol": self.tol,
            "h": self.h,
            "failures": [vars(f) | {"index": list(f.index)} for f in self.failures],
        }


def _random_small_spec(rng: np.random.Generator) -> MLPSpec:
    """A random architecture with at most 64 parameters."""
    while True:
        d_in = int(rng.integers(1, 5))
        d_out = int(rng.integers(1, 4))
        n_hidden = int(rng.integers(1, 3))
        hidden = tuple(int(rng.integers(2, 6)) for _ in range(n_hidden))
        spec = MLPSpec(d_in, hidden, d_out)
        if spec.num_params <= 64:
            return spec


def _rel_err(a: float, f: float) -> float:
    return abs(a - f) / max(abs(a), abs(f), 1e-2)


def gradient_check(
    num_nets: int = 100,
    seed: int = 0,
    h: float = 1e-4,
    tol: float = 1e-4,
    backward_fn=None,
) -> GradCheckReport:
    """Compare :func:`mlp_backward` against central finite differences.

    Checks every weight and bias of ``num_nets`` random small networks
    (<= 64 parameters each) on the scalar loss
    ``L = sum_i <u_i, f(batch)_i>`` with a fixed random ``u``. Networks
    whose pre-activations sit within 5e-3 of a ReLU kink are re-drawn, so
    the central difference never straddles a non-smooth point.

    ``backward_fn`` exists for fault injection in tests; it defaults to
    :func:`mlp_backward`.
    """
    if backward_fn is None:
        backward_fn = mlp_backward
    worst = 0.0
    failures: list[GradCheckFailure] = []
    for net_idx in range(num_nets):
        for attempt in range(50):
            net_seed = seed + 1000 * net_idx + attempt
            rng = np.random.default_rng(net_seed)
            spec = _random_small_spec(rng)
            params = mlp_init(spec, seed=int(rng.integers(2**31)))
            batch = rng.normal(size=(int(rng.integers(2, 6)), spec.input_dim))
            upstream = rng.normal(size=(batch.shape[0], spec.output_dim))
            _, (_, pre_acts) = _forward_pass(params, batch)
            margin = min(float(np.abs(p).min()) for p in pre_acts[:-1]) if len(pre_acts) > 1 else 1.0
            if margin > 5e-3:
                break
        grads = backward_fn(params, batch, upstream)

        def loss(p: MLPParams) -> float:
            return float(np.sum(mlp_forward(p, batch) * upstream))

        for layer in range(len(params.weights)):
            for kind, arr, g_arr in (
                ("weight", params.weights[layer], grads.weights[layer]),
                ("bias", params.biases[layer], grads.biases[layer]),
            ):
                it = np.nditer(arr, flags=["multi_index"])
                while not it.finished:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    up = loss(params)
                    arr[idx] = orig - h
                    down = loss(params)
                    arr[idx] = orig
                    numeric = (up - down) / (2.0 * h)
                    analytic = float(g_arr[idx])
                    err = _rel_err(analytic, numeric)
                    worst = max(worst, err)
                    if err >= tol:
                        failures.append(
                            GradCheckFailure(net_seed, layer, kind, idx, analytic, numeric, err)
                        )
                    it.iternext()
    return GradCheckReport(
        passed=not failures,
        num_nets=num_nets,
        worst_rel_err=worst,
        tol=tol,
        h=h,
        failures=failures,
    )
