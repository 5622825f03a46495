"""Lyapunov functions and the analytic bounds of the two-timescale analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oscillator import OscillatorState, compatibility


@dataclass(frozen=True)
class LyapunovValue:
    total: float
    v_theta: float
    v_w: float
    lam: float


def oscillatory_energy(phases, coupling: float) -> float:
    """V_theta = -(K / 2N) sum_{i,j} cos(theta_i - theta_j), all ordered pairs incl. i = j.

    Evaluated as -(K / 2N) |sum_j e^{i theta_j}|^2, which is the same double sum.
    """
    theta = np.asarray(phases, dtype=np.float64)
    c = np.cos(theta).sum()
    s = np.sin(theta).sum()
    return -coupling / (2.0 * theta.size) * (c * c + s * s)


def oscillatory_energy_grad(phases, coupling: float) -> np.ndarray:
    """dV_theta/dtheta_i = (K/N) sum_j sin(theta_i - theta_j)."""
    theta = np.asarray(phases, dtype=np.float64)
    return coupling / theta.size * np.sin(theta[:, None] - theta[None, :]).sum(axis=1)


def lyapunov(state: OscillatorState, W, lam: float) -> LyapunovValue:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (state.n, state.n):
        raise ValueError(f"weight matrix shape {W.shape} does not match {state.n} units")
    v_theta = float(oscillatory_energy(state.phases, state.coupling))
    v_w = 0.5 * lam * float(np.sum(W * W))
    return LyapunovValue(v_theta + v_w, v_theta, v_w, lam)


def projected_lyapunov(w, phi_bar, coupling: float, lam: float):
    """Mean-field reduction -(K/2) cos^2(phi_bar) + (lam/2) w^2. Broadcasts."""
    w = np.asarray(w, dtype=np.float64)
    phi_bar = np.asarray(phi_bar, dtype=np.float64)
    out = -0.5 * coupling * np.cos(phi_bar) ** 2 + 0.5 * lam * w * w
    return float(out) if out.ndim == 0 else out


def kernel_lipschitz(sigma_c: float) -> float:
    """L_C = 1 / (sigma_c^2 sqrt(e)) as stated for the Gaussian kernel.

    Equals the kernel's true maximal slope 1/(sigma_c sqrt(e)) only at sigma_c = 1;
    it over-estimates for narrower and under-estimates for wider kernels.
    """
    if not sigma_c > 0:
        raise ValueError(f"sigma_c must be positive, got {sigma_c}")
    return 1.0 / (sigma_c * sigma_c * math.sqrt(math.e))


def separation_bound(eps: float, l_c: float, coupling: float, n: int, eta: float, m: float) -> float:
    """Largest admissible alpha_slow / alpha_fast: eps / (L_C K N + eta M^2)."""
    for name, v in (("eps", eps), ("L_C", l_c), ("K", coupling), ("N", n), ("eta", eta), ("M", m)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return eps / (l_c * coupling * n + eta * m * m)


def lr_schedule(t: int, a: float, b: float, p: float, q: float) -> tuple[float, float]:
    """(a/(t+1)^p, b/(t+1)^q) with 1/2 < p < q <= 1."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if not (0.5 < p < q <= 1.0):
        raise ValueError(f"need 1/2 < p < q <= 1, got p={p}, q={q}")
    if not (a > 0 and b > 0):
        raise ValueError(f"a and b must be positive, got a={a}, b={b}")
    return a / (t + 1) ** p, b / (t + 1) ** q


def min_compatibility(frequencies, sigma_c: float) -> float:
    """C_min over all frequency pairs; reported as a diagnostic."""
    w = np.asarray(frequencies, dtype=np.float64)
    return float(compatibility(w.min(), w.max(), sigma_c))
