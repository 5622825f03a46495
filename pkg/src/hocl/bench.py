"""Per-step cost scaling at fixed neighbourhood size.

The timed step is T_sync sparse phase updates, local attention, message
passing, the order parameter and the edge-restricted Hebbian update. The naive
O(n^2) graph construction is timed separately and reported alongside.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .graph import SparseGraph, build_graph
from .model import propagate, unit_activations
from .oscillator import OscillatorState, order_parameter
from .plasticity import PlasticityParams, hebbian_edge_step
from .scenarios import seeded_rng

BENCH_COLUMNS = ("n", "k", "median_ns_per_step", "median_ns_graph_build")


@dataclass(frozen=True)
class BenchSettings:
    k: int = 16
    reps: int = 5
    steps_per_rep: int = 10
    d: int = 4
    d_in: int = 4
    t_sync: int = 5
    dt: float = 0.05
    coupling: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.reps < 1 or self.steps_per_rep < 1:
            raise ValueError(f"reps and steps_per_rep must be positive, got {self.reps}, {self.steps_per_rep}")


@dataclass(frozen=True)
class BenchRow:
    n: int
    k: int
    step_ns: float
    graph_ns: float


@dataclass(frozen=True)
class BenchReport:
    rows: list[BenchRow]
    exponent: float

    @property
    def doubling_ratios(self) -> list[float]:
        return [b.step_ns / a.step_ns for a, b in zip(self.rows, self.rows[1:])]


def _workload(n: int, s: BenchSettings):
    rng = seeded_rng(s.seed + n)
    raw = rng.normal(size=(n, s.d))
    points = 0.9 * raw / (1.0 + np.linalg.norm(raw, axis=1, keepdims=True))
    state = OscillatorState(rng.uniform(0.0, 2.0 * np.pi, n), rng.normal(0.0, 0.1, n), s.coupling)
    inputs = rng.normal(size=(n, s.d_in)) / math.sqrt(s.d_in)
    return points, state, inputs


def per_step(state: OscillatorState, weights: np.ndarray, inputs, graph: SparseGraph, params: PlasticityParams,
             s: BenchSettings) -> OscillatorState:
    """One step of the sparse forward pass plus the Hebbian update; ``weights`` is updated in place."""
    state, _, hidden = propagate(state, weights, inputs, graph, s.t_sync, s.dt)
    r, _ = order_parameter(state.phases)
    hebbian_edge_step(weights, graph, unit_activations(hidden), r, params, alpha_s=0.5, out=weights)
    return state


def _time_graph(points, s: BenchSettings) -> tuple[SparseGraph, float]:
    times = []
    # rep 0 is a warm-up and is discarded
    for rep in range(s.reps + 1):
        t0 = time.perf_counter_ns()
        graph = build_graph(points, np.inf, s.k)
        if rep > 0:
            times.append(time.perf_counter_ns() - t0)
    return graph, float(np.median(times))


def time_sizes(ns, s: BenchSettings) -> list[BenchRow]:
    """Median per-step time for each n.

    Sizes are interleaved within every round so that slow drift of the machine
    (clock ramp-up, cache state) spreads over all sizes instead of biasing one.
    Round 0 is a warm-up and is discarded.
    """
    params = PlasticityParams(eta=0.01, gamma=0.01)
    jobs = []
    for n in ns:
        points, state, inputs = _workload(n, s)
        graph, graph_ns = _time_graph(points, s)
        jobs.append({"state": state, "inputs": inputs, "graph": graph, "graph_ns": graph_ns,
                     "weights": np.full(graph.nnz, 0.5), "times": []})
    for rnd in range(s.reps + 1):
        for job in jobs:
            t0 = time.perf_counter_ns()
            for _ in range(s.steps_per_rep):
                job["state"] = per_step(job["state"], job["weights"], job["inputs"], job["graph"], params, s)
            if rnd > 0:
                job["times"].append((time.perf_counter_ns() - t0) / s.steps_per_rep)
    return [BenchRow(n, s.k, float(np.median(job["times"])), job["graph_ns"]) for n, job in zip(ns, jobs)]


def time_n(n: int, s: BenchSettings) -> BenchRow:
    return time_sizes([n], s)[0]


def fit_exponent(ns, times) -> float:
    """Least-squares slope of log(time) against log(n)."""
    if len(ns) < 2:
        raise ValueError("need at least two sizes to fit an exponent")
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=np.float64)), np.log(np.asarray(times, dtype=np.float64)), 1)
    return float(slope)


def run_bench(ns, settings: BenchSettings = BenchSettings()) -> BenchReport:
    ns = [int(n) for n in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError(f"sizes must be strictly ascending, got {ns}")
    if ns and ns[0] <= settings.k:
        raise ValueError(f"smallest n must exceed k={settings.k}")
    rows = time_sizes(ns, settings)
    exponent = fit_exponent(ns, [r.step_ns for r in rows]) if len(rows) > 1 else float("nan")
    return BenchReport(rows, exponent)
