"""Single-photon transmission and reflection amplitudes.

Closed forms for the detuned pair and the driven Lambda emitter, a general
transfer-matrix composer for arbitrary chains, transmission-pole analysis, and
the Wigner time delay.

Two phase conventions are supported everywhere:

* ``"exact"``     - propagation phases evaluated at the photon momentum k,
* ``"markovian"`` - propagation phases frozen at the resonance wavevector k0,
  valid for separations small compared to the inverse decay rate.

Loss to non-waveguide channels enters every amplitude through the substitution
omega -> omega - i*loss/2 of the relevant level.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    DrivenLambdaEmitter,
    EmitterChain,
    InvalidParameterError,
    PairGeometry,
    TwoLevelEmitter,
)

__all__ = [
    "Mode",
    "NumericFailure",
    "UndefinedPhaseError",
    "ScatteringSolution",
    "PoleSet",
    "t_pair",
    "t_lambda",
    "emitter_numden",
    "chain_amplitudes",
    "pole_analysis",
    "delta_opt",
    "time_delay",
    "delay_232_formula",
    "identical_array_delay",
]

Mode = str  # "markovian" | "exact"

_MODES = ("markovian", "exact")


class NumericFailure(ArithmeticError):
    """A numerically singular composition or solve."""


class UndefinedPhaseError(ValueError):
    """Transmission phase requested at a point of vanishing transmission."""


def _check_mode(mode: Mode):
    if mode not in _MODES:
        raise InvalidParameterError(f"unknown mode {mode!r}; expected one of {_MODES}")


@dataclass(frozen=True)
class ScatteringSolution:
    """Amplitudes on a momentum grid for one chain and phase convention."""

    k: np.ndarray
    t: np.ndarray
    r_fw: np.ndarray  # reflection for left incidence
    r_bw: np.ndarray  # reflection for right incidence
    mode: Mode

    @property
    def T(self) -> np.ndarray:
        return np.abs(self.t) ** 2

    @property
    def R_fw(self) -> np.ndarray:
        return np.abs(self.r_fw) ** 2

    @property
    def R_bw(self) -> np.ndarray:
        return np.abs(self.r_bw) ** 2

    def flux_defect(self) -> np.ndarray:
        """1 - T - R for left incidence; zero when lossless, positive with loss."""
        return 1.0 - self.T - self.R_fw


@dataclass(frozen=True)
class PoleSet:
    """The two transmission poles of a detuned pair (markovian propagation)."""

    dark: complex
    bright: complex
    dark_expansion: complex
    bright_expansion: complex

    @property
    def poles(self) -> tuple[complex, complex]:
        return (self.dark, self.bright)


def t_pair(k, pair: PairGeometry, mode: Mode = "markovian"):
    """Transmission amplitude of the detuned pair; broadcasts over k."""
    _check_mode(mode)
    k = np.asarray(k, dtype=float)
    g = pair.gamma
    w_left = pair.center + pair.detuning / 2 - 0.5j * pair.loss
    w_right = pair.center - pair.detuning / 2 - 0.5j * pair.loss
    if mode == "markovian":
        phase = np.exp(2j * pair.separation_phase)
    else:
        phase = np.exp(2j * k * pair.separation)
    num = (k - w_left) * (k - w_right)
    den = (k - w_left + 0.5j * g) * (k - w_right + 0.5j * g) + (g * g / 4) * phase
    return num / den


def t_lambda(k, emitter: DrivenLambdaEmitter):
    """Transmission amplitude of a driven Lambda emitter; broadcasts over k."""
    k = np.asarray(k, dtype=float)
    we = emitter.excited - 0.5j * emitter.loss_excited
    if emitter.rabi == 0:
        # metastable level decouples; cancel the common (k - ws) factor so the
        # bare-emitter zero is exact instead of 0/0
        return (k - we) / (k - we + 0.5j * emitter.waveguide_decay)
    ws = emitter.metastable - 0.5j * emitter.loss_metastable
    quarter_rabi_sq = emitter.rabi ** 2 / 4
    num = (k - ws) * (k - we) - quarter_rabi_sq
    den = (k - ws) * (k - we + 0.5j * emitter.waveguide_decay) - quarter_rabi_sq
    return num / den


def emitter_numden(k, emitter):
    """(numerator, denominator) of a single side-coupled emitter's t = n/d.

    Kept factored so chain composition never divides by a vanishing t; the
    point-scatterer reflection is r = t - 1 = (n - d)/d.
    """
    k = np.asarray(k, dtype=float)
    if isinstance(emitter, TwoLevelEmitter):
        n = k - emitter.frequency + 0.5j * emitter.loss
        d = n + 0.5j * emitter.waveguide_decay
        return n, d
    we = emitter.excited - 0.5j * emitter.loss_excited
    if emitter.rabi == 0:
        # decoupled metastable level: cancel the common factor (see t_lambda)
        n = k - we
        return n, n + 0.5j * emitter.waveguide_decay
    ws = emitter.metastable - 0.5j * emitter.loss_metastable
    quarter_rabi_sq = emitter.rabi ** 2 / 4
    n = (k - ws) * (k - we) - quarter_rabi_sq
    d = (k - ws) * (k - we + 0.5j * emitter.waveguide_decay) - quarter_rabi_sq
    return n, d


def chain_amplitudes(chain: EmitterChain, grid, mode: Mode = "markovian",
                     drive_direction: str = "left") -> ScatteringSolution:
    """Compose per-emitter point scatterers into chain amplitudes on a grid.

    Uses denominator-scaled transfer matrices, so T = 0 points (where a single
    emitter is perfectly reflecting) are exact zeros rather than 0/0. The
    transmission amplitude is direction-independent; `drive_direction` only
    selects which reflection is reported first.
    """
    _check_mode(mode)
    k = np.atleast_1d(np.asarray(grid, dtype=float))
    beta = chain.k0 if mode == "markovian" else k

    # running matrix product, scaled by every emitter's denominator
    m11 = np.ones_like(k, dtype=complex)
    m12 = np.zeros_like(k, dtype=complex)
    m21 = np.zeros_like(k, dtype=complex)
    m22 = np.ones_like(k, dtype=complex)
    tnum = np.ones_like(k, dtype=complex)

    for emitter in chain.emitters:
        n, d = emitter_numden(k, emitter)
        ph = np.exp(2j * beta * emitter.position)
        a11 = 2 * n - d
        a12 = (n - d) / ph
        a21 = -(n - d) * ph
        a22 = d
        m11, m12, m21, m22 = (
            a11 * m11 + a12 * m21,
            a11 * m12 + a12 * m22,
            a21 * m11 + a22 * m21,
            a21 * m12 + a22 * m22,
        )
        tnum = tnum * n

    if np.any(m22 == 0) or not np.all(np.isfinite(m22)):
        raise NumericFailure("singular transfer-matrix composition")

    t = tnum / m22
    r_fw = -m21 / m22
    r_bw = m12 / m22
    if drive_direction == "right":
        r_fw, r_bw = r_bw, r_fw
    return ScatteringSolution(k=k, t=t, r_fw=r_fw, r_bw=r_bw, mode=mode)


def pole_analysis(pair: PairGeometry) -> PoleSet:
    """Transmission poles of the pair and their first-order expansion near k0L = pi.

    Exact poles: center - i gamma/2 +- sqrt(delta^2 - gamma^2 e^{2i k0L})/2.
    One pole keeps an anomalously small width (dark), the other carries the
    full collective width (bright). The expansion is taken to first order in
    the detuning and in k0L - pi; the dark pole also has a second-order
    negative imaginary part left out of the expansion, so it can still be
    driven.
    """
    g = pair.gamma
    w0 = pair.center
    s = cmath.sqrt(pair.detuning ** 2 - g * g * cmath.exp(2j * pair.separation_phase))
    p_a = w0 - 0.5j * g + s / 2
    p_b = w0 - 0.5j * g - s / 2
    dark, bright = (p_a, p_b) if abs(p_a.imag) <= abs(p_b.imag) else (p_b, p_a)
    eps = pair.separation_phase - math.pi
    dark_x = complex(w0 - 0.5 * g * eps)
    bright_x = complex(w0 + 0.5 * g * eps, -g)
    return PoleSet(dark=dark, bright=bright,
                   dark_expansion=dark_x, bright_expansion=bright_x)


def delta_opt(k0L: float, gamma: float = 1.0) -> float:
    """Detuning that puts the second emitter's resonance on the dark pole.

    Driving at k = center - delta/2 hits the dark pole when
    delta = gamma * (k0L - pi); this is the ridge along which two-photon
    rectification is maximal for separations near half a wavelength.
    """
    return gamma * (k0L - math.pi)


def time_delay(chain: EmitterChain, k: float, mode: Mode = "markovian",
               h: float = 1e-4) -> float:
    """Wigner delay d arg t / dk by Richardson-extrapolated central differences.

    Raises UndefinedPhaseError where the transmission vanishes (the phase has
    no meaning there).
    """
    t0 = chain_amplitudes(chain, [k], mode).t[0]
    if abs(t0) ** 2 < 1e-10:
        raise UndefinedPhaseError(f"T(k) vanishes at k={k}; delay undefined")

    def phase_slope(step):
        sol = chain_amplitudes(chain, [k - step, k + step], mode)
        tm, tp = sol.t
        if abs(tm) < 1e-12 or abs(tp) < 1e-12:
            raise UndefinedPhaseError(f"T(k) vanishes near k={k}; delay undefined")
        return np.angle(tp / tm) / (2 * step)

    d1 = phase_slope(h)
    d2 = phase_slope(h / 2)
    return float((4 * d2 - d1) / 3)


def delay_232_formula(delta: float, rabi: float, gamma: float = 1.0) -> float:
    """Resonant delay of the 2LS/3LS/2LS chain.

    The product term comes from interference between the subsystems: the delay
    is not just the sum of the pair delay 4 gamma/delta^2 and the driven-3LS
    delay 2 gamma/rabi^2.
    """
    pair_term = 4 * gamma / delta ** 2
    lambda_term = 2 * gamma / rabi ** 2
    return pair_term + lambda_term + gamma * pair_term * lambda_term


def identical_array_delay(gamma: float = 1.0) -> float:
    """Characteristic delay 2/gamma of an array of identical resonant emitters.

    This is the per-emitter dipole coherence time, the known correlation
    timescale for identical-emitter arrays; it is used as the annotation for
    zero-detuning correlation traces, where the EIT-like formulas above do not
    apply.
    """
    return 2.0 / gamma
