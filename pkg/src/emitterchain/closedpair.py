"""Closed forms for the two-photon response of the detuned pair.

Everything here is algebraic in the incident momentum k: the single-excitation
Green matrix and the stationary emitter amplitudes it generates, the
contour-integral functions that propagate one photon past an excited emitter,
the bound-state correction to the coherent transmission amplitude, and the
assembled nonlinear transmitted intensity used for rectification.

All two-photon formulas are evaluated with markovian propagation phases
(frozen at k0), which is what makes the contour integrals rational and the
pole structure finite.

Normalization dictionary (coherent drive of amplitude A, photon flux A^2,
versus a delta-normalized two-photon input):

* nonlinear intensity:  X = I4 / (2 pi^2), with I4 the O(A^4) coefficient of
  the transmitted photon flux beyond the linear |t|^2 A^2 term;
* inelastic flux:       F = n4 / pi, with n4 the O(A^4) coefficient of the
  incoherent (mean-subtracted) output flux.

Both constants follow from expanding the coherent state over photon-number
sectors; photon-number conservation forbids cross-sector interference, so the
O(A^4) intensity is exactly the two-photon-sector intensity with the squared
norm of the delta-normalized pair mapped onto (flux * quantization length)^2.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from .model import InvalidParameterError, PairGeometry
from .singlephoton import Mode, t_pair

__all__ = [
    "GreenReconstructionError",
    "QubitWavefunctions",
    "GreenMatrix",
    "IntensityDecomposition",
    "COHERENT_TO_PAIR_INTENSITY",
    "COHERENT_TO_PAIR_FLUX",
    "green_matrix",
    "qubit_wavefunctions",
    "printed_wavefunctions",
    "reflection_amplitude",
    "rr_integral",
    "rr_integral_quadrature",
    "bound_amplitude",
    "interference_term",
    "transmitted_intensity_X",
    "rectification_factor",
]

SQRT_PI = math.sqrt(math.pi)

# Dictionary constants between the coherent-drive O(A^4) coefficients and the
# delta-normalized two-photon observables (see module docstring).
COHERENT_TO_PAIR_INTENSITY = 1.0 / (2.0 * math.pi ** 2)
COHERENT_TO_PAIR_FLUX = 1.0 / math.pi


class GreenReconstructionError(ArithmeticError):
    """The reconstructed Green matrix failed to reproduce the emitter amplitudes."""


@dataclass(frozen=True)
class QubitWavefunctions:
    """Stationary emitter amplitudes for both drive directions at one momentum."""

    e_fw: tuple[complex, complex]  # (emitter at -L/2, emitter at +L/2), left drive
    e_bw: tuple[complex, complex]  # same emitters, right drive
    r_fw: complex
    r_bw: complex


@dataclass(frozen=True)
class GreenMatrix:
    """Single-excitation inverse propagator G and drive vector d, with e = G^{-1} d."""

    matrix: np.ndarray
    drive: np.ndarray

    def amplitudes(self) -> np.ndarray:
        return np.linalg.solve(self.matrix, self.drive)

    def determinant(self) -> complex:
        m = self.matrix
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


@dataclass(frozen=True)
class IntensityDecomposition:
    """Transmitted two-photon intensity split into its divergent and finite parts.

    `elastic_coefficient` multiplies the divergent delta(0)/pi plane-wave term
    and is reported separately, never added to the finite part. `nonlinear`
    is the finite intensity X = flux/(2 pi) + interference.
    """

    elastic_coefficient: float
    nonlinear: float
    flux_part: float
    interference_part: float


def _phases(pair: PairGeometry, k, mode: Mode):
    """Half-separation propagation phase and its square at the mode's wavevector."""
    if mode == "markovian":
        kl = pair.separation_phase
    else:
        kl = np.asarray(k, dtype=float) * pair.separation
    return kl


def green_matrix(k: float, pair: PairGeometry, mode: Mode = "markovian",
                 direction: str = "left") -> GreenMatrix:
    """Single-excitation matrix G(k) and drive vector for the pair.

    G_ii = k - omega_i + i(gamma + loss)/2, G_ij = i gamma/2 e^{i kL}, and the
    drive carries sqrt(gamma/4pi) e^{+-i k x_i}. Solving G e = d reproduces the
    closed-form emitter amplitudes; `verify_green_reconstruction` in the test
    suite enforces this, which pins down both the sign convention (the
    +detuning/2 emitter sits at -L/2) and the drive normalization.
    """
    kl = _phases(pair, k, mode)
    g = pair.gamma
    f_left, f_right = pair.frequencies
    m = np.array([
        [k - f_left + 0.5j * (g + pair.loss), 0.5j * g * np.exp(1j * kl)],
        [0.5j * g * np.exp(1j * kl), k - f_right + 0.5j * (g + pair.loss)],
    ])
    sgn = 1.0 if direction == "left" else -1.0
    d = math.sqrt(g / (4 * math.pi)) * np.exp(sgn * 0.5j * kl * np.array([-1.0, 1.0]))
    return GreenMatrix(matrix=m, drive=d)


def qubit_wavefunctions(k: float, pair: PairGeometry,
                        mode: Mode = "markovian") -> QubitWavefunctions:
    """Emitter amplitudes and reflection amplitudes for both drive directions."""
    e_fw = green_matrix(k, pair, mode, "left").amplitudes()
    e_bw = green_matrix(k, pair, mode, "right").amplitudes()
    return QubitWavefunctions(
        e_fw=(complex(e_fw[0]), complex(e_fw[1])),
        e_bw=(complex(e_bw[0]), complex(e_bw[1])),
        r_fw=reflection_amplitude(k, pair, mode, "left"),
        r_bw=reflection_amplitude(k, pair, mode, "right"),
    )


def printed_wavefunctions(k, pair: PairGeometry, mode: Mode = "markovian"):
    """Left-drive emitter amplitudes in their explicit closed form.

    Independent of the Green-matrix solve; used to validate it. Only the
    lossless expressions are printed here, so loss must be zero.
    """
    if pair.loss != 0:
        raise InvalidParameterError("printed forms are lossless; use qubit_wavefunctions")
    k = np.asarray(k, dtype=float)
    g, d = pair.gamma, pair.detuning
    w0 = pair.center
    kl = _phases(pair, k, mode)
    den = (2 * k - 2 * w0 + 1j * g) ** 2 + g * g * np.exp(2j * kl) - d * d
    e1 = (np.sqrt(g) * np.exp(-0.5j * kl)
          * (1j * (2 * k - 2 * w0 + d) - g * (1 - np.exp(2j * kl)))
          / (1j * SQRT_PI * den))
    e2 = np.sqrt(g) * np.exp(0.5j * kl) * (2 * k - 2 * w0 - d) / (SQRT_PI * den)
    return e1, e2


def reflection_amplitude(k, pair: PairGeometry, mode: Mode = "markovian",
                         direction: str = "left"):
    """Pair reflection amplitude; unlike t, it depends on which emitter is hit first.

    The right-drive amplitude is the left-drive one of the mirrored pair
    (detuning sign flipped).
    """
    k = np.asarray(k, dtype=float)
    g = pair.gamma
    d = pair.detuning if direction == "left" else -pair.detuning
    w0 = pair.center
    kl = _phases(pair, k, mode)
    gt = g + pair.loss
    den = (2 * k - 2 * w0 + 1j * gt) ** 2 + g * g * np.exp(2j * kl) - d * d
    return -1j * g * (4 * (k - w0 + 0.5j * pair.loss) * np.cos(kl)
                      + 2 * (g - 1j * d) * np.sin(kl)) / den


# ----------------------------------------------------------------------------
# rational-function machinery for the contour integrals
# ----------------------------------------------------------------------------

def _pair_rationals(pair: PairGeometry, direction: str):
    """Polynomial coefficient arrays (low-to-high) of the pair amplitudes.

    Polynomials are in the shifted variable u = q - center, which keeps the
    coefficients order one; with the raw momentum (~100 rate units) the
    near-cancelling pole residues would lose eight digits. The emitter
    frequencies are fixed by the geometry (+detuning/2 at -L/2); the drive
    direction only flips the drive phases, which for the reflection amplitude
    is equivalent to flipping the detuning sign.
    """
    g = pair.gamma
    gt = g + pair.loss
    kl = pair.separation_phase
    d = pair.detuning
    dsign = 1.0 if direction == "left" else -1.0
    beta = cmath.exp(2j * kl)

    # det G = (u - d/2 + i gt/2)(u + d/2 + i gt/2) + (g^2/4) beta
    g11 = np.array([-d / 2 + 0.5j * gt, 1.0])
    g22 = np.array([+d / 2 + 0.5j * gt, 1.0])
    det = P.polyadd(P.polymul(g11, g22), np.array([(g * g / 4) * beta]))

    off = 0.5j * g * cmath.exp(1j * kl)
    drv = math.sqrt(g / (4 * math.pi)) * np.exp(dsign * 0.5j * kl * np.array([-1.0, 1.0]))
    # adjugate solve: e1 = (G22 d1 - G12 d2)/det, e2 = (G11 d2 - G21 d1)/det
    e1 = P.polyadd(drv[0] * g22, np.array([-off * drv[1]]))
    e2 = P.polyadd(drv[1] * g11, np.array([-off * drv[0]]))

    # t = n1 n2 / det with n_i = u -+ d/2 + i loss/2
    tnum = P.polymul(np.array([-d / 2 + 0.5j * pair.loss, 1.0]),
                     np.array([+d / 2 + 0.5j * pair.loss, 1.0]))
    # r for this drive direction, numerator over det
    c, s = math.cos(kl), math.sin(kl)
    rnum = -0.25j * g * P.polyadd(
        4 * c * np.array([0.5j * pair.loss, 1.0]),
        np.array([2 * (g - 1j * dsign * d) * s]),
    )
    return {"det": det, "e": (e1, e2), "tnum": tnum, "rnum": rnum}


def _conj_poly(p):
    return np.conjugate(np.asarray(p))


def _poly_roots(p):
    # numpy.polynomial expects low-to-high; np.roots wants high-to-low
    return np.roots(np.asarray(p)[::-1])


def _deflate_common_roots(num, den, tol: float = 1e-8):
    """Divide out denominator roots that the numerator (nearly) shares.

    A decoupled collective mode (e.g. the dark mode of a colocated identical
    pair) appears as a common factor; cancelling it keeps the rational form
    meromorphic-stable instead of 0/0 at that point.
    """
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    scale = np.abs(num).max()
    for p in _poly_roots(den):
        if abs(P.polyval(p, num)) < tol * scale and len(den) > 1:
            num = P.polydiv(num, np.array([-p, 1.0]))[0]
            den = P.polydiv(den, np.array([-p, 1.0]))[0]
    return num, den


def rr_integrand_rational(i: int, pair: PairGeometry, direction: str = "left"):
    """Numerator/denominator of t(q) e_i*(q) + r_back(q) e_i_back*(q).

    The starred amplitudes are continued off the real axis by conjugating
    their coefficients only, keeping the integration variable real-analytic,
    so the integrand is a meromorphic rational function (of u = q - center).
    Common numerator/denominator roots from decoupled modes are cancelled.
    """
    fw = _pair_rationals(pair, direction)
    back = "right" if direction == "left" else "left"
    bw = _pair_rationals(pair, back)
    e_fw_c = _conj_poly(fw["e"][i])
    det_c = _conj_poly(fw["det"])
    e_bw_c = _conj_poly(bw["e"][i])
    num = P.polyadd(P.polymul(fw["tnum"], e_fw_c), P.polymul(bw["rnum"], e_bw_c))
    den = P.polymul(fw["det"], det_c)
    num, den = _deflate_common_roots(num, den)
    return num, den, fw, det_c


def rr_integral(k: float, x: float, i: int, pair: PairGeometry,
                direction: str = "left") -> complex:
    """Propagation integral of emitter i's conjugated scattering amplitudes.

    Evaluates  e_i*(k)/sqrt(pi) * Int dq e^{iqx} [t(q) e_i*(q) +
    r_back(q) e_i_back*(q)] / (k - q + i0+)  for x > 0 by closing the contour
    in the upper half plane and summing residues. The i0+ pole contributes the
    x-oscillation-free term; the conjugate-continued amplitude poles lie in
    the upper half plane but their residues cancel by flux conservation, which
    `rr_integral_quadrature` verifies independently.
    """
    if x <= 0:
        raise InvalidParameterError("transmitted-side integral requires x > 0")
    num, den, fw, det_c = rr_integrand_rational(i, pair, direction)
    ku = k - pair.center

    # residues at the surviving upper-half poles (conjugate-continued amplitudes)
    poles = _poly_roots(den)
    for a_idx in range(len(poles)):
        for b_idx in range(a_idx + 1, len(poles)):
            if abs(poles[a_idx] - poles[b_idx]) < 1e-9 * pair.gamma:
                warnings.warn("near-degenerate pole pair; perturbing by 1e-9 for residues")
                poles[a_idx] += 1e-9j * pair.gamma
                poles[b_idx] -= 1e-9j * pair.gamma
    total = 0.0 + 0.0j
    dden = P.polyder(den)
    for p in poles:
        if p.imag <= 0:
            continue
        res = P.polyval(p, num) / P.polyval(p, dden)
        total += res * cmath.exp(1j * (pair.center + p) * x) / (ku - p)
    # pole at q = k + i0+ (residue of 1/(k - q) is -1)
    gk = P.polyval(ku, num) / P.polyval(ku, den)
    total -= gk * cmath.exp(1j * k * x)

    e_k = P.polyval(ku, fw["e"][i]) / P.polyval(ku, fw["det"])
    return complex(np.conjugate(e_k) / SQRT_PI * 2j * math.pi * total)


def rr_integral_quadrature(k: float, x: float, i: int, pair: PairGeometry,
                           direction: str = "left", window: float = 60.0,
                           limit: int = 800) -> complex:
    """Adaptive-quadrature oracle for `rr_integral`.

    Splits off the i0+ pole exactly: the remainder [g(q) - g(k)]/(k - q) is
    regular on the real axis and is integrated with adaptive quadrature on a
    central window plus oscillatory-weighted tails to infinity.
    """
    if x <= 0:
        raise InvalidParameterError("transmitted-side integral requires x > 0")
    num, den, fw, _ = rr_integrand_rational(i, pair, direction)
    ku = k - pair.center
    gk = P.polyval(ku, num) / P.polyval(ku, den)

    dnum, dden = P.polyder(num), P.polyder(den)

    def regular(u):
        if abs(u - ku) > 1e-8:
            gq = P.polyval(u, num) / P.polyval(u, den)
            return (gq - gk) / (ku - u)
        d0 = P.polyval(u, den)
        gprime = (P.polyval(u, dnum) * d0 - P.polyval(u, num) * P.polyval(u, dden)) / d0 ** 2
        return -gprime

    a, b = ku - window, ku + window

    def osc_quad(lo, hi):
        # Int regular(q) e^{iqx} dq over a finite real window, oscillatory weights
        kw = dict(wvar=x, limit=limit)
        rc = integrate.quad(lambda q: regular(q).real, lo, hi, weight="cos", **kw)[0]
        ic = integrate.quad(lambda q: regular(q).imag, lo, hi, weight="cos", **kw)[0]
        rs = integrate.quad(lambda q: regular(q).real, lo, hi, weight="sin", **kw)[0]
        im_s = integrate.quad(lambda q: regular(q).imag, lo, hi, weight="sin", **kw)[0]
        return (rc - im_s) + 1j * (rs + ic)

    def vertical(edge):
        # Int_0^inf regular(edge + i s) e^{-s x} ds, exponentially damped
        re = integrate.quad(lambda s: (regular(edge + 1j * s) * math.exp(-s * x)).real,
                            0, np.inf, limit=limit)[0]
        im = integrate.quad(lambda s: (regular(edge + 1j * s) * math.exp(-s * x)).imag,
                            0, np.inf, limit=limit)[0]
        return re + 1j * im

    # split the window at the near-axis pole projections: the integrand has
    # spikes of width |Im p| there that a blind adaptive pass can miss
    cuts = {a, b}
    for p in _poly_roots(den):
        w = max(abs(p.imag), 1e-12)
        for c in (3.0, 30.0):
            for s in (-1.0, 1.0):
                q = p.real + s * c * w
                if a < q < b:
                    cuts.add(q)
    cuts = sorted(cuts)
    core = sum(osc_quad(lo, hi) for lo, hi in zip(cuts, cuts[1:]))

    # tails rotated onto vertical contours: no poles beyond the window edges,
    # so Int_b^inf = +i e^{ibx} vertical(b) and Int_-inf^a = -i e^{iax} vertical(a)
    integral = core \
        + 1j * cmath.exp(1j * b * x) * vertical(b) \
        - 1j * cmath.exp(1j * a * x) * vertical(a)
    # everything above is in u = q - center; restore the carrier phase
    integral *= cmath.exp(1j * pair.center * x)
    integral += -2j * math.pi * gk * cmath.exp(1j * k * x)

    e_k = P.polyval(ku, fw["e"][i]) / P.polyval(ku, fw["det"])
    return complex(np.conjugate(e_k) / SQRT_PI * integral)


# ----------------------------------------------------------------------------
# bound-state correction and assembled intensity
# ----------------------------------------------------------------------------

def bound_amplitude(k: float, pair: PairGeometry, direction: str = "left") -> complex:
    """Third-order coherent-amplitude correction from the two-photon bound state.

    Coefficient of A^3 in the transmitted coherent amplitude under a coherent
    drive of amplitude A. Closed form from the stationary weak-drive hierarchy
    of the pair: the singly-excited amplitudes X1 source the doubly-excited
    amplitude through the propagator P2, which feeds back into the coherences
    both through the drive and through the collective-decay cross terms.
    """
    g = pair.gamma
    kl = pair.separation_phase
    sgn = 1.0 if direction == "left" else -1.0
    f = np.array(pair.frequencies)
    phase = np.exp(sgn * 0.5j * kl * np.array([-1.0, 1.0]))
    v = math.sqrt(g / 2) * phase                 # drive vector (unit amplitude)
    c_out = -1j * math.sqrt(g / 2) * np.conjugate(phase)  # transmitted-side weights

    gm = green_matrix(k, pair, "markovian", "left" if sgn > 0 else "right").matrix
    X1 = np.linalg.solve(gm, v)

    width_total = 2 * (g + pair.loss)
    P2 = 2 * k - f[0] - f[1] + 0.5j * width_total
    XD = (v[1] * X1[0] + v[0] * X1[1]) / P2
    Z = np.outer(X1, np.conjugate(X1))
    trZ = float(np.trace(Z).real)

    # doubly-excited/singly-excited coherences Y: Y (G^dag - P2 I) = XD (v* - P2 X1*)
    MY = gm.conj().T - P2 * np.eye(2)
    rhs = XD * (np.conjugate(v) - P2 * np.conjugate(X1))
    Y = np.linalg.solve(MY.T, rhs)

    # decay feed from Y into the single-excitation coherences
    gam = g * np.array([[1.0, math.cos(kl)], [math.cos(kl), 1.0]])
    gam = gam + pair.loss * np.eye(2)
    jump = np.array([Y[0] * gam[0, 1] + Y[1] * gam[1, 1],
                     Y[0] * gam[0, 0] + Y[1] * gam[1, 0]])

    v_swap_c = np.conjugate(v[::-1])
    src = 1j * v * trZ - 1j * v_swap_c * XD + 1j * (Z @ v) + jump
    X3 = np.linalg.solve(1j * gm, -src)

    return complex(np.sum(c_out * X3) + c_out[0] * Y[1] + c_out[1] * Y[0])


def interference_term(k: float, pair: PairGeometry, direction: str = "left") -> float:
    """Finite weight of the elastic spectral line beyond |t|^2: bound-state
    interference with the plane-wave component, in two-photon-intensity units.
    """
    t = complex(t_pair(k, pair, "markovian"))
    b3 = bound_amplitude(k, pair, direction)
    return COHERENT_TO_PAIR_INTENSITY * 2.0 * (np.conjugate(t) * b3).real


def transmitted_intensity_X(k: float, pair: PairGeometry, direction: str,
                            flux: float) -> IntensityDecomposition:
    """Nonlinear transmitted intensity X = flux/(2 pi) + interference.

    `flux` is the transmitted inelastic flux for the same drive direction (in
    the delta-normalized units produced by the engine after calibration). The
    divergent elastic term is reported as its coefficient |t|^2, never added.
    """
    if flux is None:
        raise InvalidParameterError("transmitted inelastic flux is required")
    t = complex(t_pair(k, pair, "markovian"))
    interf = interference_term(k, pair, direction)
    flux_part = flux / (2 * math.pi)
    return IntensityDecomposition(
        elastic_coefficient=float(abs(t) ** 2),
        nonlinear=flux_part + interf,
        flux_part=flux_part,
        interference_part=interf,
    )


def rectification_factor(k: float, pair: PairGeometry, flux_fw: float,
                         flux_bw: float) -> float:
    """Unnormalized rectification |X_fw - X_bw| at one incident momentum.

    The delta-normalized scattering states leave an overall system-volume
    divergence in the raw intensities, so only the difference of the finite
    parts is meaningful.
    """
    x_fw = transmitted_intensity_X(k, pair, "left", flux_fw).nonlinear
    x_bw = transmitted_intensity_X(k, pair, "right", flux_bw).nonlinear
    return abs(x_fw - x_bw)
