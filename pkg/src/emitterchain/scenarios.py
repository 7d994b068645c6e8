"""Figure-style sweep pipelines built on the closed forms and the engine.

Each scenario returns plain in-memory tables (dict of column name -> array)
plus scalar annotations; the CLI serializes them. Sweep points are
independent, so they can be fanned out over a thread pool.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import engine
from .model import EmitterChain, PairGeometry, build_232, build_pair
from .singlephoton import (
    chain_amplitudes,
    delay_232_formula,
    identical_array_delay,
    t_pair,
    time_delay,
)

__all__ = [
    "ScenarioError",
    "RidgeFit",
    "RectificationMap",
    "OMEGA0",
    "find_half_transmission",
    "reproduce_spectra",
    "reproduce_g2",
    "rectification_map",
    "ridge_fit",
    "loss_markov_compare",
]

OMEGA0 = 100.0  # default resonance frequency in decay-rate units
FIG3_DETUNINGS = (0.0, 0.35, 1.5)
FIG6_RABIS = (0.0, 3.0)
FIG5_DETUNINGS = (-0.03, -0.06, -0.09, -0.12)  # around the optimum at 0.98 pi
FIG5_QUADS = ((0.98, -0.06), (0.98, -0.12), (1.02, 0.06), (1.02, 0.12))


class ScenarioError(RuntimeError):
    """A scenario precondition failed (e.g. no half-transmission point in range)."""


@dataclass(frozen=True)
class RidgeFit:
    """Least-squares line through the rectification maxima in the detuning-length plane."""

    slope: float
    intercept: float
    residual: float
    reference_slope: float = math.pi
    literature_slope: float = 3.18


@dataclass(frozen=True)
class RectificationMap:
    k0L: np.ndarray
    delta: np.ndarray
    value: np.ndarray      # max_k |X_fw - X_bw|, shape (len(k0L), len(delta))
    argmax_k: np.ndarray   # momentum of the maximum, same shape


def _parallel(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _flux_columns(chain: EmitterChain, ks, threads: int = 1):
    def one(k):
        f_fw, f_tot = engine.inelastic_flux(chain, float(k))
        return f_fw, f_tot

    rows = _parallel(one, ks, threads)
    f_r = np.array([r[0] for r in rows])
    f = np.array([r[1] for r in rows])
    return f_r, f - f_r, f


def _spectrum_table(chain: EmitterChain, ks, threads: int = 1):
    sol = chain_amplitudes(chain, ks, "markovian")
    f_r, f_l, f = _flux_columns(chain, ks, threads)
    return {
        "k": np.asarray(ks, dtype=float),
        "Re_t": sol.t.real,
        "Im_t": sol.t.imag,
        "T": sol.T,
        "R": sol.R_fw,
        "F_R": f_r,
        "F_L": f_l,
        "F": f,
    }


def reproduce_spectra(scenario: str, ks=None, threads: int = 1):
    """Transmission and inelastic-flux spectra.

    "fig3": detuned pair at half-wavelength spacing for three detunings;
    "fig6": the 2-3-2 chain, undriven and driven center emitter.
    Returns {label: table}.
    """
    if ks is None:
        ks = np.linspace(OMEGA0 - 2.0, OMEGA0 + 2.0, 201)
    out = {}
    if scenario == "fig3":
        for delta in FIG3_DETUNINGS:
            chain = build_pair(OMEGA0, delta, 1.0, math.pi)
            out[f"delta={delta:g}"] = _spectrum_table(chain, ks, threads)
    elif scenario == "fig6":
        for rabi in FIG6_RABIS:
            chain = build_232(OMEGA0, 0.35, 1.0, rabi)
            out[f"rabi={rabi:g}"] = _spectrum_table(chain, ks, threads)
    else:
        raise ScenarioError(f"unknown spectra scenario {scenario!r}")
    return out


def find_half_transmission(chain: EmitterChain, lo: float, hi: float,
                           target: float = 0.5, tol: float = 1e-8) -> float:
    """Bisect T(k) = target on [lo, hi] (markovian closed forms)."""
    def T(k):
        return float(np.abs(chain_amplitudes(chain, [k], "markovian").t[0]) ** 2)

    f_lo, f_hi = T(lo) - target, T(hi) - target
    if f_lo * f_hi > 0:
        raise ScenarioError(
            f"no T={target} crossing in [{lo}, {hi}] (T={f_lo + target:.3f}..{f_hi + target:.3f})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (T(mid) - target) * f_lo <= 0:
            hi = mid
        else:
            lo, f_lo = mid, T(mid) - target
    return 0.5 * (lo + hi)


def _g2_trace(chain, k, tau, n_t=401, t_max=None):
    t_max = 3 * tau if t_max is None else t_max
    times = np.linspace(0.0, t_max, n_t)
    g2 = engine.g2_transmitted(chain, k, "left", times)
    return {"t": times, "g2": g2}


def reproduce_g2(scenario: str, n_t: int = 401):
    """Transmitted-photon correlation traces.

    "fig4": pair detunings 0, 0.35, 1.5 plus the 2-3-2, each probed at the
    red-detuned half-transmission point; "fig7" probes the 2-3-2 on resonance
    (perfect elastic transmission). Each table carries the probe momentum and
    the annotated characteristic delay.
    """
    out = {}
    if scenario == "fig4":
        cases = []
        for delta in FIG3_DETUNINGS:
            chain = build_pair(OMEGA0, delta, 1.0, math.pi)
            if delta == 0:
                lo, hi = OMEGA0 - 4.0, OMEGA0 - 1e-6
                tau = identical_array_delay(1.0)
            else:
                lo, hi = OMEGA0 - delta / 2 + 1e-6, OMEGA0 - 1e-9
                tau = None
            cases.append((f"pair delta={delta:g}", chain, lo, hi, tau))
        chain = build_232(OMEGA0, 0.35, 1.0, 3.0)
        cases.append(("232 rabi=3", chain, OMEGA0 - 0.175 + 1e-6, OMEGA0 - 1e-9, None))
        for label, chain, lo, hi, tau in cases:
            k = find_half_transmission(chain, lo, hi)
            if tau is None:
                tau = time_delay(chain, k)
            table = _g2_trace(chain, k, tau, n_t, t_max=max(3 * tau, 40.0))
            table["annotations"] = {"k_probe": k, "tau": tau}
            out[label] = table
    elif scenario == "fig7":
        chain = build_232(OMEGA0, 0.35, 1.0, 3.0)
        tau = delay_232_formula(0.35, 3.0, 1.0)
        omegas = engine.build_omega_grid(chain, OMEGA0)
        spec_r = engine.incoherent_spectrum(chain, OMEGA0, "left", omegas)
        # reflected-side spectrum from the same drive
        spec_l = _reflected_spectrum(chain, OMEGA0, omegas)
        table = _g2_trace(chain, OMEGA0, tau, n_t)
        table["annotations"] = {"k_probe": OMEGA0, "tau": tau}
        out["g2"] = table
        out["spectrum"] = {"w": omegas, "S_R": spec_r, "S_L": spec_l,
                           "S": spec_r + spec_l}
    else:
        raise ScenarioError(f"unknown g2 scenario {scenario!r}")
    return out


def _reflected_spectrum(chain, k, omegas, amplitude=engine.DEFAULT_AMPLITUDE):
    problem = engine.build_liouvillian(chain, engine.DriveSpec("left", k, amplitude))
    rho = engine.steady_state(problem)
    b = problem.reflected_op()
    b_mean = np.trace(b @ rho)
    db = b - b_mean * np.eye(problem.dim)
    scale = engine.KAPPA_FLUX / amplitude ** 4
    return scale * np.array([engine._spectrum_resolvent(problem, rho, db, w - k)
                             for w in omegas])


def rectification_map(k0L_values, delta_values, k_rule: str = "second_qubit",
                      k_halfspan: float = 0.25, n_k: int = 51,
                      threads: int = 1) -> RectificationMap:
    """Map of max_k |X_fw - X_bw| over separation phase and detuning.

    `k_rule="second_qubit"` probes only k = center - delta/2 (the incident
    photon resonant with the emitter it reaches second); "maximize" scans a
    window around it.
    """
    k0L_values = np.asarray(k0L_values, dtype=float)
    delta_values = np.asarray(delta_values, dtype=float)
    value = np.zeros((len(k0L_values), len(delta_values)))
    argmax_k = np.zeros_like(value)

    def one(args):
        i, j = args
        chain = build_pair(OMEGA0, delta_values[j], 1.0, k0L_values[i])
        center_k = OMEGA0 - delta_values[j] / 2
        if k_rule == "second_qubit":
            ks = [center_k]
        elif k_rule == "maximize":
            ks = np.linspace(center_k - k_halfspan, center_k + k_halfspan, n_k)
        else:
            raise ScenarioError(f"unknown k rule {k_rule!r}")
        best_v, best_k = -1.0, center_k
        for k in ks:
            _, _, rect = engine.nonlinear_intensity(chain, float(k))
            if rect > best_v:
                best_v, best_k = rect, float(k)
        return i, j, best_v, best_k

    jobs = [(i, j) for i in range(len(k0L_values)) for j in range(len(delta_values))]
    for i, j, v, k in _parallel(one, jobs, threads):
        value[i, j] = v
        argmax_k[i, j] = k
    return RectificationMap(k0L=k0L_values, delta=delta_values,
                            value=value, argmax_k=argmax_k)


def ridge_fit(rect_map: RectificationMap) -> RidgeFit:
    """Fit the rectification ridge delta_max(L) to a straight line.

    The abscissa is L/(lambda0/2) - 1 = k0L/pi - 1; the dark-pole argument
    predicts slope pi, and 3.18 is the slope fitted to earlier pulsed-drive
    sweeps, reported for comparison.
    """
    if len(rect_map.k0L) < 5:
        raise ScenarioError("ridge fit needs at least 5 separation values")
    xs = rect_map.k0L / math.pi - 1.0
    ys = np.array([rect_map.delta[np.argmax(rect_map.value[i])]
                   for i in range(len(rect_map.k0L))])
    A = np.column_stack([xs, np.ones_like(xs)])
    sol, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = float(np.max(np.abs(A @ sol - ys)))
    if abs(sol[0]) < 1e-12:
        raise ScenarioError("degenerate ridge fit")
    return RidgeFit(slope=float(sol[0]), intercept=float(sol[1]), residual=resid)


def loss_markov_compare(ks=None):
    """Transmission curves probing the lossless and markovian approximations.

    Four curves for the detuning-0.35 pair: exact propagation at
    half-wavelength spacing, the same with loss 0.02, the markovian curve
    (identical for both spacings), and exact propagation at twenty
    wavelengths, where the markovian approximation visibly fails.
    """
    if ks is None:
        ks = np.linspace(OMEGA0 - 2.0, OMEGA0 + 2.0, 801)
    ks = np.asarray(ks, dtype=float)
    half = PairGeometry(OMEGA0, 0.35, 1.0, math.pi)
    half_lossy = PairGeometry(OMEGA0, 0.35, 1.0, math.pi, 0.02)
    long = PairGeometry(OMEGA0, 0.35, 1.0, 40 * math.pi)
    return {
        "k": ks,
        "T_exact": np.abs(t_pair(ks, half, "exact")) ** 2,
        "T_lossy": np.abs(t_pair(ks, half_lossy, "exact")) ** 2,
        "T_markovian": np.abs(t_pair(ks, half, "markovian")) ** 2,
        "T_exact_20lam0": np.abs(t_pair(ks, long, "exact")) ** 2,
    }
