"""Synchronization-gated Hebbian plasticity."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import SparseGraph


class ContractViolation(ValueError):
    """An input broke a declared bound (e.g. |x_i| > M)."""


class GateMode(enum.Enum):
    HARD = "hard"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class PlasticityParams:
    eta: float
    gamma: float
    r_c: float = 0.5
    beta: float = 20.0
    gate_mode: GateMode = GateMode.SMOOTH
    act_bound: float = 1.0  # M

    def __post_init__(self):
        if not self.eta >= 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 < self.r_c < 1.0:
            raise ValueError(f"r_c must lie in (0, 1), got {self.r_c}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.act_bound > 0:
            raise ValueError(f"act_bound must be positive, got {self.act_bound}")
        object.__setattr__(self, "gate_mode", GateMode(self.gate_mode))


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    ez = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez))


def gate(r, params: PlasticityParams):
    """G(r): logistic sigmoid of beta (r - r_c), or the indicator r > r_c in hard mode."""
    r = np.asarray(r, dtype=np.float64)
    if params.gate_mode is GateMode.HARD:
        out = (r > params.r_c).astype(np.float64)
    else:
        out = _sigmoid(params.beta * (r - params.r_c))
    return float(out) if out.ndim == 0 else out


def gate_derivative(r, params: PlasticityParams):
    """dG/dr = beta G (1 - G) for the smooth gate."""
    g = _sigmoid(params.beta * (np.asarray(r, dtype=np.float64) - params.r_c))
    out = params.beta * g * (1.0 - g)
    return float(out) if out.ndim == 0 else out


def check_activations(x, bound: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ContractViolation("activations must be finite")
    worst = float(np.max(np.abs(x))) if x.size else 0.0
    if worst > bound:
        raise ContractViolation(f"activation magnitude {worst:.6g} exceeds declared bound M={bound:.6g}")
    return x


def hebbian_step(W, activations, r: float, params: PlasticityParams, *, alpha_s: float = 1.0,
                 edges: Optional[SparseGraph] = None, decay_everywhere: bool = False) -> np.ndarray:
    """One discrete gated Hebbian update; returns a new matrix.

    W_ij <- W_ij + alpha_s (-gamma W_ij + eta x_i x_j G(r)) on every updated pair,
    written to both (i, j) and (j, i). ``edges=None`` updates all pairs. With a
    graph, only pairs touched by an edge change unless ``decay_everywhere`` is set,
    in which case the remaining pairs get the decay term alone. The diagonal is
    never written.
    """
    W = np.asarray(W, dtype=np.float64)
    x = check_activations(activations, params.act_bound)
    n = x.size
    if W.shape != (n, n):
        raise ValueError(f"weight matrix shape {W.shape} does not match {n} activations")
    g = gate(r, params)
    if edges is None:
        delta = -params.gamma * W + params.eta * g * np.outer(x, x)
        np.fill_diagonal(delta, 0.0)
        return W + alpha_s * delta

    if edges.n != n:
        raise ValueError(f"graph has {edges.n} units, activations have {n}")
    out = W * (1.0 - alpha_s * params.gamma) if decay_everywhere else W.copy()
    np.fill_diagonal(out, np.diag(W))
    i, j = edges.undirected_pairs()
    new = W[i, j] + alpha_s * (-params.gamma * W[i, j] + params.eta * g * x[i] * x[j])
    out[i, j] = new
    out[j, i] = new
    return out


def hebbian_edge_step(values, graph: SparseGraph, activations, r: float, params: PlasticityParams, *,
                      alpha_s: float = 1.0, out: Optional[np.ndarray] = None) -> np.ndarray:
    """The gated Hebbian update on weights stored per edge, aligned with ``graph.indices``.

    Every stored off-diagonal entry gets the same increment as in :func:`hebbian_step`;
    self-loop entries are left alone. O(nnz) time and memory. Pass ``out=values`` to
    update in place.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != (graph.nnz,):
        raise ValueError(f"expected {graph.nnz} edge values, got shape {vals.shape}")
    x = check_activations(activations, params.act_bound)
    if x.size != graph.n:
        raise ValueError(f"graph has {graph.n} units, activations have {x.size}")
    rows = graph.rows()
    cols = graph.indices
    inc = params.eta * gate(r, params) * x[rows] * x[cols] - params.gamma * vals
    inc[rows == cols] = 0.0
    if out is None:
        return vals + alpha_s * inc
    np.add(vals, alpha_s * inc, out=out)
    return out


def weight_bound(params: PlasticityParams, m: float, n: int) -> float:
    """Ultimate bound on ||W||_F: eta M^2 N / gamma."""
    if not params.gamma > 0:
        raise ValueError("gamma must be positive")
    return params.eta * m * m * n / params.gamma


def symmetric_init(rng: np.random.Generator, n: int, std: float) -> np.ndarray:
    """Symmetric Gaussian matrix with zero diagonal; W_ij ~ N(0, std^2) for each i < j."""
    upper = np.triu(rng.normal(0.0, std, size=(n, n)), k=1)
    return upper + upper.T
