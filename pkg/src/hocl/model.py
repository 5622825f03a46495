"""Forward pass and the two-timescale training loop at toy scale.

Each unit i owns a base point z_i in the ball. Its position for an input x_i is
exp_{z_i}(P x_i), which is exp_0(P x_i) while z_i sits at the origin. The task
head is a per-unit linear readout y_hat_i = v_i . h_i + b_i, trained against
fixed random targets by least squares. Task and embedding gradients are
central finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import TrainConfig
from .geometry import exp_map, exp_map_rows, pairwise_distances, riemannian_grad
from .graph import SparseGraph, build_graph, density
from .oscillator import (CouplingVariant, EdgeWeights, OscillatorState, local_attention, order_parameter,
                         phase_drift, wrap_phase)
from .plasticity import GateMode, PlasticityParams, gate, hebbian_step
from .scenarios import seeded_rng
from .stability import lr_schedule, lyapunov

TRAIN_COLUMNS = ("iter", "loss", "r", "gate", "v_total", "frob_w", "density")
ALGORITHM_ORDER = ("graph", "phase_sync", "attention", "loss", "task_gradient", "order_parameter",
                   "hebbian", "embedding", "lyapunov")


class NonFiniteLossError(FloatingPointError):
    pass


@dataclass(frozen=True)
class HoclModel:
    embeddings: np.ndarray  # (N, d) base points z_i
    projection: np.ndarray  # (d, d_in)
    readout: np.ndarray  # (N, d_in)
    bias: np.ndarray  # (N,)
    oscillator: OscillatorState
    weights: np.ndarray  # (N, N)
    plasticity: PlasticityParams
    delta: float
    k_cap: Optional[int]
    t_sync: int
    dt: float
    alpha_f: float
    alpha_s: float
    alpha_z: float
    lam: float
    nonlinearity: str = "relu"

    def __post_init__(self):
        if self.t_sync < 1:
            raise ValueError("t_sync must be at least 1")
        n = self.oscillator.n
        if self.embeddings.shape[0] != n or self.weights.shape != (n, n):
            raise ValueError("embeddings, weights and oscillator disagree on N")
        if self.projection.shape[0] != self.embeddings.shape[1]:
            raise ValueError("projection rows must equal the embedding dimension")
        if np.any(np.linalg.norm(self.embeddings, axis=1) >= 1.0):
            raise ValueError("embeddings must lie inside the unit ball")

    @property
    def n(self) -> int:
        return self.oscillator.n


@dataclass
class ForwardResult:
    positions: np.ndarray
    graph: SparseGraph
    phases: np.ndarray
    attention: EdgeWeights
    hidden: np.ndarray
    activations: np.ndarray
    r: float
    predictions: np.ndarray
    loss: Optional[float] = None


def _nonlinearity(name: str, h: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(h, 0.0)
    if name == "identity":
        return h
    raise ValueError(f"unknown nonlinearity {name!r}")


def embed_positions(embeddings, projection, inputs) -> np.ndarray:
    P = np.asarray(projection)
    X = np.asarray(inputs)
    if X.ndim != 2 or X.shape[1] != P.shape[1]:
        raise ValueError(f"inputs must be (N, {P.shape[1]}), got {X.shape}")
    tangent = X @ P.T
    return exp_map_rows(embeddings, tangent)


def propagate(state: OscillatorState, edge_weights, inputs, graph: SparseGraph, t_sync: int, dt: float,
              nonlinearity: str = "relu") -> tuple[OscillatorState, EdgeWeights, np.ndarray]:
    """Sparse phase integration, local attention and message passing on a fixed graph.

    ``edge_weights`` holds W_ij for each stored edge, aligned with ``graph.indices``.
    h_i = sigma_a(sum_{j in N_i} A_ij W_ij x_j). Cost is O(T_sync * nnz + nnz * d_in).
    """
    for _ in range(t_sync):
        drift = phase_drift(state, CouplingVariant.SPARSE_LOCAL, graph)
        state = state.with_phases(wrap_phase(state.phases + drift * dt))
    att = local_attention(state, graph)
    rows = graph.rows()
    cols = graph.indices
    coef = att.values * np.asarray(edge_weights, dtype=np.float64)
    X = np.asarray(inputs, dtype=np.float64)
    msg = np.zeros_like(X)
    np.add.at(msg, rows, coef[:, None] * X[cols])
    return state, att, _nonlinearity(nonlinearity, msg)


def unit_activations(hidden: np.ndarray) -> np.ndarray:
    """Scalar activity per unit for the Hebbian rule: tanh of the mean hidden feature (|a| < 1)."""
    return np.tanh(hidden.mean(axis=1))


def _readout(readout, bias, hidden) -> np.ndarray:
    return np.einsum("ij,ij->i", readout, hidden) + bias


def _mse(pred, targets) -> float:
    return float(np.mean((pred - targets) ** 2))


def forward(model: HoclModel, inputs, targets=None) -> ForwardResult:
    """Embed, build the graph, synchronize, attend, message-pass and read out. Pure."""
    X = np.asarray(inputs, dtype=np.float64)
    if X.shape[0] != model.n:
        raise ValueError(f"expected {model.n} inputs, got {X.shape[0]}")
    positions = embed_positions(model.embeddings, model.projection, X)
    graph = build_graph(positions, model.delta, model.k_cap)
    state, att, hidden = propagate(model.oscillator, edge_values(model.weights, graph), X, graph, model.t_sync,
                                   model.dt, model.nonlinearity)
    r, _ = order_parameter(state.phases)
    pred = _readout(model.readout, model.bias, hidden)
    loss = None if targets is None else _mse(pred, np.asarray(targets, dtype=np.float64))
    return ForwardResult(positions, graph, state.phases, att, hidden, unit_activations(hidden), r, pred, loss)


def edge_values(W, graph: SparseGraph) -> np.ndarray:
    return np.asarray(W, dtype=np.float64)[graph.rows(), graph.indices]


def _same_graph(a: SparseGraph, b: SparseGraph) -> bool:
    return np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)


def _loss_for_geometry(model: HoclModel, X, y, base: ForwardResult, embeddings, projection) -> float:
    # The loss sees embeddings only through the neighbourhoods; identical graphs give identical loss.
    positions = embed_positions(embeddings, projection, X)
    graph = build_graph(positions, model.delta, model.k_cap)
    if _same_graph(graph, base.graph):
        return base.loss
    _, _, hidden = propagate(model.oscillator, edge_values(model.weights, graph), X, graph, model.t_sync,
                             model.dt, model.nonlinearity)
    return _mse(_readout(model.readout, model.bias, hidden), y)


def fd_gradient(f, x0: np.ndarray, h: float) -> np.ndarray:
    """Central differences of scalar ``f`` at ``x0``, same shape as ``x0``."""
    x = np.array(x0, dtype=np.float64)
    flat = x.reshape(-1)
    grad = np.empty(flat.size)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        fp = f(x)
        flat[k] = orig - h
        fm = f(x)
        flat[k] = orig
        grad[k] = (fp - fm) / (2.0 * h)
    return grad.reshape(x.shape)


def _clip(g: np.ndarray, limit: float) -> np.ndarray:
    norm = float(np.linalg.norm(g))
    return g * (limit / norm) if norm > limit else g


@dataclass
class StepMetrics:
    iteration: int
    loss: float
    r: float
    gate: float
    lyapunov: float
    delta_v: float
    frob_w: float
    density: float
    alpha_f: float
    alpha_s: float
    hebbian_r: float
    max_embedding_norm: float = 0.0
    order: tuple = ()
    grad_norms: dict = field(default_factory=dict)

    def row(self) -> tuple:
        return (self.iteration, self.loss, self.r, self.gate, self.lyapunov, self.frob_w, self.density)


def train_step(model: HoclModel, inputs, targets, *, iteration: int = 1, prev_v: Optional[float] = None,
               h_fd: float = 1e-5, grad_clip: float = 1.0,
               schedule: Optional[tuple[float, float, float, float]] = None) -> tuple[HoclModel, StepMetrics]:
    """One pass of the training procedure (graph, sync, attention, task step, gate, Hebbian, embeddings, V)."""
    X = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    alpha_f, alpha_s = model.alpha_f, model.alpha_s
    if schedule is not None:
        a, b, p, q = schedule
        alpha_f, alpha_s = lr_schedule(iteration - 1, a, b, p, q)

    events = []
    # steps 1-3: graph, phase sync, attention, forward loss
    res = forward(model, X, y)
    events += ["graph", "phase_sync", "attention", "loss"]
    if not math.isfinite(res.loss):
        raise NonFiniteLossError(f"loss became {res.loss} at iteration {iteration}")

    # step 4: task parameters
    def readout_loss(v):
        return _mse(_readout(v, model.bias, res.hidden), y)

    def bias_loss(b):
        return _mse(_readout(model.readout, b, res.hidden), y)

    def projection_loss(P):
        return _loss_for_geometry(model, X, y, res, model.embeddings, P)

    g_v = fd_gradient(readout_loss, model.readout, h_fd)
    g_b = fd_gradient(bias_loss, model.bias, h_fd)
    g_P = _clip(fd_gradient(projection_loss, model.projection, h_fd), grad_clip)
    readout = model.readout - alpha_f * g_v
    bias = model.bias - alpha_f * g_b
    projection = model.projection - alpha_f * g_P
    events.append("task_gradient")

    # step 5: global order parameter of the synchronized phases
    r = res.r
    events.append("order_parameter")
    # step 6: gated Hebbian update on the active edges, using this iteration's r
    params = model.plasticity
    g = gate(r, params)
    W = hebbian_step(model.weights, res.activations, r, params, alpha_s=alpha_s, edges=res.graph)
    hebbian_r = r
    events.append("hebbian")

    # step 7: Riemannian update of the unit base points
    def embedding_loss(Z):
        return _loss_for_geometry(model, X, y, res, Z, model.projection)

    g_Z = fd_gradient(embedding_loss, model.embeddings, h_fd)
    Z = np.empty_like(model.embeddings)
    for i, (z, gz) in enumerate(zip(model.embeddings, g_Z)):
        step = _clip(riemannian_grad(z, gz), grad_clip)
        Z[i] = exp_map(z, -model.alpha_z * step)
    events.append("embedding")

    osc = model.oscillator.with_phases(res.phases)
    new = replace(model, embeddings=Z, projection=projection, readout=readout, bias=bias,
                  oscillator=osc, weights=W)

    # step 8: Lyapunov value for the convergence check
    V = lyapunov(osc, W, model.lam).total
    events.append("lyapunov")
    metrics = StepMetrics(
        iteration=iteration, loss=res.loss, r=r, gate=g, lyapunov=V,
        delta_v=math.inf if prev_v is None else abs(V - prev_v),
        frob_w=float(np.linalg.norm(W)), density=density(res.graph),
        alpha_f=alpha_f, alpha_s=alpha_s, hebbian_r=hebbian_r, order=tuple(events),
        max_embedding_norm=float(np.linalg.norm(Z, axis=1).max()),
        grad_norms={"readout": float(np.linalg.norm(g_v)), "bias": float(np.linalg.norm(g_b)),
                    "projection": float(np.linalg.norm(g_P)), "embeddings": float(np.linalg.norm(g_Z))},
    )
    return new, metrics


@dataclass
class TrainResult:
    model: HoclModel
    metrics: list[StepMetrics]
    converged: bool
    initial_v: float

    @property
    def rows(self) -> list[tuple]:
        return [m.row() for m in self.metrics]


def train(model: HoclModel, inputs, targets, max_iters: int, eps_conv: float, *, h_fd: float = 1e-5,
          grad_clip: float = 1.0, schedule=None) -> TrainResult:
    """Repeat train_step until |V_t - V_{t-1}| < eps_conv or max_iters is reached."""
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters}")
    prev_v = lyapunov(model.oscillator, model.weights, model.lam).total
    initial_v = prev_v
    history = []
    converged = False
    for it in range(1, max_iters + 1):
        model, m = train_step(model, inputs, targets, iteration=it, prev_v=prev_v, h_fd=h_fd,
                              grad_clip=grad_clip, schedule=schedule)
        history.append(m)
        prev_v = m.lyapunov
        if m.delta_v < eps_conv:
            converged = True
            break
    return TrainResult(model, history, converged, initial_v)


@dataclass
class ToyProblem:
    model: HoclModel
    inputs: np.ndarray
    targets: np.ndarray
    config: TrainConfig

    @property
    def schedule(self):
        c = self.config
        if not c.lr_schedule:
            return None
        return (c.alpha_f, c.alpha_s, c.schedule_p, c.schedule_q)


def build_toy_problem(cfg: TrainConfig) -> ToyProblem:
    """Seeded synthetic regression: random inputs, random scalar targets, fresh model."""
    root = np.random.SeedSequence(cfg.seed)
    data_ss, model_ss = root.spawn(2)
    data_rng = seeded_rng(data_ss)
    rng = seeded_rng(model_ss)
    n, d, d_in = cfg.n, cfg.d, cfg.d_in
    X = data_rng.normal(0.0, 1.0, size=(n, d_in))
    y = data_rng.normal(0.0, 1.0, size=n)

    projection = rng.normal(0.0, 0.5 / math.sqrt(d_in), size=(d, d_in))
    embeddings = np.zeros((n, d))
    omega = rng.normal(0.0, cfg.sigma_omega, size=n)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n)
    osc = OscillatorState.centered(phases, omega, cfg.coupling, cfg.sigma_c)
    upper = np.triu(rng.uniform(0.5, 1.0, size=(n, n)) * (rng.random((n, n)) < cfg.w_init_density), k=1)
    W = upper + upper.T
    readout = rng.normal(0.0, 0.1, size=(n, d_in))
    bias = np.zeros(n)

    delta = cfg.delta
    if delta is None:
        positions = embed_positions(embeddings, projection, X)
        delta = delta_for_density(positions, cfg.target_density)
    params = PlasticityParams(eta=cfg.eta, gamma=cfg.gamma, r_c=cfg.r_c, beta=cfg.beta,
                              gate_mode=GateMode.SMOOTH, act_bound=cfg.act_bound)
    model = HoclModel(embeddings, projection, readout, bias, osc, W, params, float(delta), cfg.k_cap,
                      cfg.t_sync, cfg.dt, cfg.alpha_f, cfg.alpha_s, cfg.alpha_z, cfg.lam, cfg.nonlinearity)
    return ToyProblem(model, X, y, cfg)


def delta_for_density(positions, target: float) -> float:
    """Smallest threshold whose neighbourhoods reach ``target`` density (self-loops included)."""
    D = pairwise_distances(positions)
    n = D.shape[0]
    off = np.sort(D[~np.eye(n, dtype=bool)])
    need = int(math.ceil(target * n * n)) - n
    if need <= 0:
        return float(off[0]) if off.size and off[0] > 0 else 1e-12
    k = min(need, off.size) - 1
    return float(np.nextafter(off[k], np.inf))
