"""Seeded reproductions of the three coupled Kuramoto-Hebbian simulations.

Randomness comes from numpy's PCG64 bit generator. Each run derives
independent child streams from ``np.random.SeedSequence(seed)`` in a fixed
order, so a (config, seed) pair always replays the same numbers. Normal
variates use numpy's ziggurat sampler (``Generator.normal``).

Every step of the joint system does, in order: read r and psi from the current
phases, evaluate the gate G(r), draw activations, compute the phase drift, apply
the Hebbian update to W, then advance the phases by forward Euler. A trace row
holds the quantities of that step: the pre-step state (r, ||W||_F, V) and the
updates it produced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ScenarioConfig
from .oscillator import CouplingVariant, OscillatorState, order_parameter, phase_drift, wrap_phase
from .plasticity import GateMode, PlasticityParams, gate, hebbian_step, symmetric_init, weight_bound
from .stability import lyapunov, min_compatibility, projected_lyapunov

TRACE_COLUMNS = ("t", "r", "gate", "mean_abs_dtheta", "mean_abs_dw", "frob_w", "v_theta", "v_w", "v_total")
PROJECTION_COLUMNS = ("trajectory", "t", "w", "phi_bar", "v_projected")


def seeded_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn_streams(seed, count: int) -> list[np.random.Generator]:
    """``count`` independent PCG64 streams split from ``seed`` (an int or a SeedSequence)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(count)]


@dataclass
class SimulationTrace:
    columns: dict[str, np.ndarray]
    final_phases: np.ndarray
    final_weights: np.ndarray
    frequencies: np.ndarray
    clusters: Optional[list[list[int]]] = None
    extras: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.columns["t"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def final_r(self) -> float:
        return order_parameter(self.final_phases)[0]

    def cluster_labels(self) -> Optional[list[int]]:
        if self.clusters is None:
            return None
        labels = [0] * len(self.final_phases)
        for k, members in enumerate(self.clusters):
            for i in members:
                labels[i] = k
        return labels


def draw_frequencies(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    dist = cfg.frequencies
    if dist["kind"] == "normal":
        omega = rng.normal(dist["mean"], math.sqrt(dist["var"]), size=cfg.n)
    else:
        omega = np.concatenate([rng.normal(c["mean"], math.sqrt(c["var"]), size=c["count"])
                                for c in dist["clusters"]])
    if cfg.centered:
        omega = omega - omega.mean()
    return omega


def draw_activations(cfg: ScenarioConfig, phases: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    act = cfg.activation
    if act["kind"] == "sparse_gaussian":
        mask = rng.random(cfg.n) < act["density"]
        values = rng.normal(0.0, math.sqrt(act["var"]), size=cfg.n)
        return np.where(mask, values, 0.0)
    noise = rng.normal(0.0, math.sqrt(act["noise_var"]), size=cfg.n)
    return np.clip(np.cos(phases) / 2.0 + 0.5 + noise, 0.0, 1.0)


def plasticity_params(cfg: ScenarioConfig) -> PlasticityParams:
    return PlasticityParams(eta=cfg.eta, gamma=cfg.gamma, r_c=cfg.r_c, beta=cfg.beta,
                            gate_mode=GateMode(cfg.gate_mode), act_bound=cfg.act_bound)


def phase_deviation(phases) -> float:
    """Mean |wrap(theta_i - psi)| with wraps into (-pi, pi]."""
    theta = np.asarray(phases, dtype=np.float64)
    _, psi = order_parameter(theta)
    dev = np.angle(np.exp(1j * (theta - psi)))
    return float(np.mean(np.abs(dev)))


def integrate(cfg: ScenarioConfig, omega: np.ndarray, phases: np.ndarray, W: np.ndarray,
              act_rng: np.random.Generator, *, project: bool = False) -> SimulationTrace:
    """Run ``cfg.steps`` joint Euler steps from (phases, W)."""
    variant = CouplingVariant(cfg.variant)
    params = plasticity_params(cfg)
    n = cfg.n
    off = ~np.eye(n, dtype=bool)
    state = OscillatorState(wrap_phase(phases), omega, cfg.coupling, cfg.sigma_c)
    W = np.array(W, dtype=np.float64)
    rows = {name: np.empty(cfg.steps) for name in TRACE_COLUMNS}
    proj = {name: np.empty(cfg.steps) for name in ("w", "phi_bar", "v_projected")} if project else None

    for t in range(cfg.steps):
        r, _ = order_parameter(state.phases)
        g = gate(r, params)
        x = draw_activations(cfg, state.phases, act_rng)
        drift = phase_drift(state, variant)
        W_next = hebbian_step(W, x, r, params, alpha_s=cfg.alpha_s)
        lyap = lyapunov(state, W, cfg.lam)
        frob = float(np.linalg.norm(W))

        rows["t"][t] = t
        rows["r"][t] = r
        rows["gate"][t] = g
        rows["mean_abs_dtheta"][t] = float(np.mean(np.abs(drift)))
        rows["mean_abs_dw"][t] = float(np.mean(np.abs(W_next - W)[off])) if n > 1 else 0.0
        rows["frob_w"][t] = frob
        rows["v_theta"][t] = lyap.v_theta
        rows["v_w"][t] = lyap.v_w
        rows["v_total"][t] = lyap.total
        if proj is not None:
            w = frob / n
            phi = phase_deviation(state.phases)
            proj["w"][t] = w
            proj["phi_bar"][t] = phi
            proj["v_projected"][t] = projected_lyapunov(w, phi, cfg.coupling, cfg.lam)

        W = W_next
        state = state.with_phases(wrap_phase(state.phases + drift * cfg.dt))

    trace = SimulationTrace(rows, state.phases, W, omega)
    if proj is not None:
        trace.extras["projection"] = proj
    return trace


def running_average(series, window: int) -> np.ndarray:
    """Trailing mean over the last ``window`` samples (shorter at the start)."""
    x = np.asarray(series, dtype=np.float64)
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def first_crossing(r, r_c: float) -> Optional[int]:
    """First step with r > r_c, or None."""
    above = np.nonzero(np.asarray(r) > r_c)[0]
    return int(above[0]) if above.size else None


def zero_crossing_rate(series) -> float:
    """Sign changes of the mean-removed series per sample."""
    x = np.asarray(series, dtype=np.float64)
    if x.size < 2:
        return 0.0
    s = np.sign(x - x.mean())
    s = s[s != 0]
    return float(np.count_nonzero(s[1:] != s[:-1])) / (x.size - 1)


def run_fig2(cfg: ScenarioConfig) -> SimulationTrace:
    """Two-timescale run: N oscillators, gated Hebbian updates on random sparse patterns."""
    freq_rng, init_rng, act_rng = spawn_streams(cfg.seed, 3)
    omega = draw_frequencies(cfg, freq_rng)
    phases = init_rng.uniform(0.0, 2.0 * np.pi, size=cfg.n)
    W0 = symmetric_init(init_rng, cfg.n, math.sqrt(cfg.w_init_var))
    trace = integrate(cfg, omega, phases, W0, act_rng)

    cross = first_crossing(trace["r"], cfg.r_c)
    dw = trace["mean_abs_dw"]
    trace.extras["gate_open_step"] = cross
    trace.extras["running_dtheta"] = running_average(trace["mean_abs_dtheta"], cfg.window)
    trace.extras["running_dw"] = running_average(dw, cfg.window)
    if cross is not None and 0 < cross < len(trace):
        trace.extras["dw_pre"] = float(dw[:cross].mean())
        trace.extras["dw_post"] = float(dw[cross:].mean())
    return trace


def run_fig3(cfg: ScenarioConfig) -> SimulationTrace:
    """Two frequency clusters; phase-derived activations; W starts at zero."""
    freq_rng, init_rng, act_rng = spawn_streams(cfg.seed, 3)
    omega = draw_frequencies(cfg, freq_rng)
    phases = init_rng.uniform(0.0, 2.0 * np.pi, size=cfg.n)
    W0 = symmetric_init(init_rng, cfg.n, math.sqrt(cfg.w_init_var))
    trace = integrate(cfg, omega, phases, W0, act_rng)
    trace.clusters = detect_clusters(trace.final_phases, cfg.cluster_cut)
    if cfg.frequencies["kind"] == "two_cluster":
        k = cfg.frequencies["clusters"][0]["count"]
        trace.extras["block_ratio"] = block_ratio(trace.final_weights, list(range(k)))
    return trace


def block_ratio(W, group: list[int]) -> float:
    """Mean off-diagonal weight inside ``group`` over mean weight between group and the rest."""
    W = np.asarray(W, dtype=np.float64)
    inside = np.zeros(W.shape[0], dtype=bool)
    inside[group] = True
    block = W[np.ix_(inside, inside)]
    m = inside.sum()
    within = (block.sum() - np.trace(block)) / (m * (m - 1))
    cross = W[np.ix_(inside, ~inside)].mean()
    return float(within / cross) if cross != 0 else math.inf


@dataclass
class BasinResult:
    trajectories: list[SimulationTrace]
    surface_w: np.ndarray
    surface_phi: np.ndarray
    surface_v: np.ndarray

    @property
    def surface_minimum(self) -> tuple[float, float, float]:
        i, j = np.unravel_index(np.argmin(self.surface_v), self.surface_v.shape)
        return float(self.surface_w[i]), float(self.surface_phi[j]), float(self.surface_v[i, j])


def lyapunov_surface(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projected V on a (w, phi_bar) grid; both axes contain 0 exactly."""
    m = cfg.surface_points
    w = np.linspace(0.0, cfg.surface_w_max, m)
    half = np.linspace(0.0, np.pi / 2.0, m // 2 + 1)
    phi = np.concatenate([-half[:0:-1], half])
    V = projected_lyapunov(w[:, None], phi[None, :], cfg.coupling, cfg.lam)
    return w, phi, V


def run_fig4(cfg: ScenarioConfig) -> BasinResult:
    """Several random initializations of the joint system sharing one frequency draw."""
    root = np.random.SeedSequence(cfg.seed)
    freq_ss, *traj_ss = root.spawn(1 + cfg.trajectories)
    omega = draw_frequencies(cfg, np.random.Generator(np.random.PCG64(freq_ss)))
    trajectories = []
    for ss in traj_ss:
        init_rng, act_rng = spawn_streams(ss, 2)
        phases = init_rng.uniform(0.0, 2.0 * np.pi, size=cfg.n)
        W0 = symmetric_init(init_rng, cfg.n, math.sqrt(cfg.w_init_var))
        trajectories.append(integrate(cfg, omega, phases, W0, act_rng, project=True))
    w, phi, V = lyapunov_surface(cfg)
    return BasinResult(trajectories, w, phi, V)


def circular_distance(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % (2.0 * np.pi)
    return np.minimum(d, 2.0 * np.pi - d)


def detect_clusters(phases, cut: float = math.pi / 4) -> list[list[int]]:
    """Complete-linkage agglomerative clustering under circular distance.

    Merges the closest pair of clusters while their linkage is below ``cut``.
    Ties go to the pair whose smallest members are lowest. Clusters come back
    sorted by their smallest member.
    """
    if not 0 < cut <= math.pi:
        raise ValueError(f"cut must lie in (0, pi], got {cut}")
    theta = np.asarray(phases, dtype=np.float64)
    D = circular_distance(theta[:, None], theta[None, :])
    clusters = [[i] for i in range(theta.size)]
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                link = D[np.ix_(clusters[a], clusters[b])].max()
                key = (link, clusters[a][0], clusters[b][0])
                if best is None or key < best[0]:
                    best = (key, a, b)
        (link, _, _), a, b = best
        if not link < cut:
            break
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
    return sorted(clusters, key=lambda c: c[0])


def scenario_summary(cfg: ScenarioConfig, result) -> dict:
    """Headline numbers for the run manifest."""
    params = plasticity_params(cfg)
    bound = weight_bound(params, cfg.act_bound, cfg.n)
    traces = result.trajectories if isinstance(result, BasinResult) else [result]
    last = traces[0]
    summary = {
        "final_r": last.final_r,
        "final_frob_w": float(np.linalg.norm(last.final_weights)),
        "final_v": float(lyapunov(OscillatorState(last.final_phases, last.frequencies, cfg.coupling, cfg.sigma_c),
                                  last.final_weights, cfg.lam).total),
        "gate_open_step": first_crossing(last["r"], cfg.r_c),
        "weight_bound": bound,
        "weight_bound_respected": bool(all(np.all(tr["frob_w"][1:] <= bound) for tr in traces)),
        "c_min": min_compatibility(last.frequencies, cfg.sigma_c),
    }
    if cfg.scenario == "fig2":
        summary["dw_pre_gate"] = last.extras.get("dw_pre")
        summary["dw_post_gate"] = last.extras.get("dw_post")
    if cfg.scenario == "fig3":
        summary["clusters"] = last.clusters
        summary["block_ratio"] = last.extras.get("block_ratio")
    if isinstance(result, BasinResult):
        w0, p0, v0 = result.surface_minimum
        summary["trajectories"] = len(traces)
        summary["final_phase_deviation"] = [phase_deviation(tr.final_phases) for tr in traces]
        summary["final_r_per_trajectory"] = [tr.final_r for tr in traces]
        summary["surface_minimum"] = {"w": w0, "phi_bar": p0, "v": v0}
    return summary


RUNNERS = {"fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4}


def run_scenario(cfg: ScenarioConfig):
    return RUNNERS[cfg.scenario](cfg)
