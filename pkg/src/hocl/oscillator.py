"""Kuramoto phase dynamics, order parameters and synchronization attention."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .graph import SparseGraph

TWO_PI = 2.0 * np.pi
_PSI_FLOOR = 1e-12


class DegenerateNeighborhoodWarning(RuntimeWarning):
    pass


class CouplingVariant(enum.Enum):
    """Which coupling sum drives dtheta/dt.

    MEAN_FIELD   omega_i + (K/N) sum_j sin(theta_j - theta_i)
    ORDER_GATED  omega_i + K r sum_j C(omega_i, omega_j) sin(theta_j - theta_i)
    SPARSE_LOCAL omega_i + K r_{N_i} sum_{j in N_i} C(omega_i, omega_j) sin(theta_j - theta_i)
    """

    MEAN_FIELD = "mean_field"
    ORDER_GATED = "order_gated"
    SPARSE_LOCAL = "sparse_local"


def wrap_phase(theta):
    """Map angles into [0, 2pi)."""
    out = np.mod(theta, TWO_PI)
    # np.mod can round up to exactly 2pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


@dataclass(frozen=True)
class OscillatorState:
    phases: np.ndarray
    frequencies: np.ndarray
    coupling: float
    sigma_c: float = 1.0

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=np.float64)
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        if phases.ndim != 1 or phases.size < 1:
            raise ValueError("phases must be a non-empty vector")
        if freqs.shape != phases.shape:
            raise ValueError(f"frequencies shape {freqs.shape} does not match phases {phases.shape}")
        if not self.coupling > 0:
            raise ValueError(f"coupling K must be positive, got {self.coupling}")
        if not self.sigma_c > 0:
            raise ValueError(f"sigma_c must be positive, got {self.sigma_c}")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def n(self) -> int:
        return self.phases.size

    def with_phases(self, phases) -> "OscillatorState":
        return replace(self, phases=np.asarray(phases, dtype=np.float64))

    @classmethod
    def centered(cls, phases, frequencies, coupling: float, sigma_c: float = 1.0) -> "OscillatorState":
        freqs = np.asarray(frequencies, dtype=np.float64)
        return cls(wrap_phase(np.asarray(phases, dtype=np.float64)), freqs - freqs.mean(), coupling, sigma_c)


def compatibility(omega_i, omega_j, sigma_c: float):
    """Gaussian frequency kernel exp(-(w_i - w_j)^2 / (2 sigma_c^2)). Broadcasts."""
    if not sigma_c > 0:
        raise ValueError(f"sigma_c must be positive, got {sigma_c}")
    d = np.asarray(omega_i, dtype=np.float64) - np.asarray(omega_j, dtype=np.float64)
    return np.exp(-(d * d) / (2.0 * sigma_c * sigma_c))


def order_parameter(phases) -> tuple[float, float]:
    """Return (r, psi) with r e^{i psi} = mean_j e^{i theta_j}; psi is 0 when r < 1e-12."""
    theta = np.asarray(phases, dtype=np.float64)
    if theta.size == 0:
        raise ValueError("order parameter of an empty population")
    c = np.cos(theta).mean()
    s = np.sin(theta).mean()
    r = float(np.hypot(c, s))
    if r < _PSI_FLOOR:
        return r, 0.0
    return min(r, 1.0), float(wrap_phase(np.arctan2(s, c)))


def local_order_parameter(phases, neighborhood) -> float:
    idx = np.asarray(neighborhood, dtype=np.int64)
    if idx.size == 0:
        warnings.warn("empty neighbourhood; local order parameter set to 0", DegenerateNeighborhoodWarning, stacklevel=2)
        return 0.0
    theta = np.asarray(phases, dtype=np.float64)[idx]
    return min(float(np.hypot(np.cos(theta).mean(), np.sin(theta).mean())), 1.0)


def local_order_parameters(phases, graph: SparseGraph) -> np.ndarray:
    """r_{N_i} for every row of ``graph``; empty rows give 0."""
    theta = np.asarray(phases, dtype=np.float64)
    rows = graph.rows()
    nbr = theta[graph.indices]
    size = graph.sizes()
    c = np.bincount(rows, weights=np.cos(nbr), minlength=graph.n)
    s = np.bincount(rows, weights=np.sin(nbr), minlength=graph.n)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.hypot(c, s) / size
    if np.any(size == 0):
        warnings.warn("graph has empty neighbourhoods; their local order parameter is 0",
                      DegenerateNeighborhoodWarning, stacklevel=2)
        r = np.where(size == 0, 0.0, r)
    return np.minimum(r, 1.0)


def phase_drift(state: OscillatorState, variant: CouplingVariant, graph: Optional[SparseGraph] = None) -> np.ndarray:
    """dtheta/dt for every unit under ``variant``."""
    theta = state.phases
    omega = state.frequencies
    K = state.coupling
    if variant is CouplingVariant.SPARSE_LOCAL:
        if graph is None:
            raise ValueError("SPARSE_LOCAL coupling needs a graph")
        if graph.n != state.n:
            raise ValueError(f"graph has {graph.n} units, state has {state.n}")
        rows = graph.rows()
        cols = graph.indices
        r_loc = local_order_parameters(theta, graph)
        terms = compatibility(omega[rows], omega[cols], state.sigma_c) * np.sin(theta[cols] - theta[rows])
        return omega + K * r_loc * np.bincount(rows, weights=terms, minlength=state.n)

    diff = np.sin(theta[None, :] - theta[:, None])
    if variant is CouplingVariant.MEAN_FIELD:
        return omega + (K / state.n) * diff.sum(axis=1)
    if variant is CouplingVariant.ORDER_GATED:
        r, _ = order_parameter(theta)
        C = compatibility(omega[:, None], omega[None, :], state.sigma_c)
        return omega + K * r * (C * diff).sum(axis=1)
    raise ValueError(f"unknown coupling variant {variant!r}")


def euler_phase_step(state: OscillatorState, dt: float, variant: CouplingVariant,
                     graph: Optional[SparseGraph] = None) -> OscillatorState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    drift = phase_drift(state, variant, graph)
    return state.with_phases(wrap_phase(state.phases + drift * dt))


def ssa_attention(omega_i, omega_j, coupling: float, r: float, sigma_c: float):
    """max(0, K r C(w_i, w_j) - |w_i - w_j|)."""
    if not coupling > 0:
        raise ValueError(f"coupling K must be positive, got {coupling}")
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    wi = np.asarray(omega_i, dtype=np.float64)
    wj = np.asarray(omega_j, dtype=np.float64)
    return np.maximum(0.0, coupling * r * compatibility(wi, wj, sigma_c) - np.abs(wi - wj))


@dataclass(frozen=True)
class EdgeWeights:
    """Values on the edges of a SparseGraph, aligned with ``graph.indices``."""

    graph: SparseGraph
    values: np.ndarray

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.graph.n, self.graph.n))
        out[self.graph.rows(), self.graph.indices] = self.values
        return out


def local_attention(state: OscillatorState, graph: SparseGraph) -> EdgeWeights:
    """A_ij = max(0, K r_{N_i} C(w_i, w_j) - |w_i - w_j|) on the edges of ``graph``."""
    if graph.n != state.n:
        raise ValueError(f"graph has {graph.n} units, state has {state.n}")
    rows = graph.rows()
    cols = graph.indices
    omega = state.frequencies
    r_loc = local_order_parameters(state.phases, graph)
    vals = state.coupling * r_loc[rows] * compatibility(omega[rows], omega[cols], state.sigma_c)
    vals = np.maximum(0.0, vals - np.abs(omega[rows] - omega[cols]))
    return EdgeWeights(graph, vals)


def local_attention_matrix(state: OscillatorState, graph: SparseGraph) -> np.ndarray:
    """Dense N x N view of :func:`local_attention`; zero off the neighbourhoods."""
    return local_attention(state, graph).to_dense()
