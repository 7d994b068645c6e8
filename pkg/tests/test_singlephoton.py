import cmath
import math

import numpy as np
import pytest

from emitterchain.model import (
    DrivenLambdaEmitter,
    EmitterChain,
    PairGeometry,
    TwoLevelEmitter,
    build_232,
    build_pair,
    build_lambda,
    map_pair_to_lambda,
    mapping_rules,
)
from emitterchain.singlephoton import (
    UndefinedPhaseError,
    chain_amplitudes,
    delay_232_formula,
    delta_opt,
    identical_array_delay,
    pole_analysis,
    t_lambda,
    t_pair,
    time_delay,
)

W0 = 100.0
PAIR = PairGeometry(W0, 0.35, 1.0, math.pi)


def random_chain(rng):
    kind = rng.integers(0, 3)
    delta = float(rng.uniform(-1.8, 1.8))
    k0L = float(rng.uniform(0.2, 6.5))
    if kind == 0:
        return build_pair(W0, delta, float(rng.uniform(0.5, 2.0)), k0L)
    if kind == 1:
        return build_lambda(W0, float(rng.uniform(0.5, 2.0)), float(rng.uniform(0, 4)),
                            float(rng.uniform(-1, 1)))
    return build_232(W0, delta, 1.0, float(rng.uniform(0, 4)),
                     float(rng.uniform(-1, 1)), k0L / 2)


# ---------------------------------------------------------------- pair closed form

def test_pair_transparency_peak():
    assert abs(t_pair(W0, PAIR)) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_pair_zeros_at_emitter_frequencies():
    assert t_pair(W0 + 0.175, PAIR) == 0
    assert t_pair(W0 - 0.175, PAIR) == 0


def test_identical_pair_is_broadened_lorentzian():
    pair0 = PairGeometry(W0, 0.0, 1.0, math.pi)
    # width-2 dip: T(w0 + 1) = 0.5
    assert abs(t_pair(W0 + 1.0, pair0)) ** 2 == pytest.approx(0.5, abs=1e-12)


def test_lossy_pair_peak_value():
    lossy = PairGeometry(W0, 0.35, 1.0, math.pi, 0.02)
    t0 = t_pair(W0, lossy)
    # algebraic value (d^2 + l^2) / (d^2 + l^2 + 2 l) at the peak
    expected = (0.35 ** 2 + 0.02 ** 2) / (0.35 ** 2 + 0.02 ** 2 + 2 * 0.02)
    assert t0.real == pytest.approx(expected, abs=1e-12)
    assert abs(t0) ** 2 == pytest.approx(0.56920, abs=5e-5)


# ---------------------------------------------------------------- lambda closed form

def test_lambda_transparent_at_metastable_resonance():
    lam = DrivenLambdaEmitter(100.0, 1.3, 2.0, 1.0)
    assert t_lambda(lam.metastable, lam) == pytest.approx(1.0)


def test_lambda_without_drive_reflects_at_resonance():
    lam = DrivenLambdaEmitter(100.0, 0.0, 0.0, 1.0)
    assert t_lambda(100.0, lam) == 0


def test_lossy_mapped_lambda_matches_lossy_pair():
    lossy_pair = PairGeometry(W0, 0.35, 1.0, math.pi, 0.02)
    lam = map_pair_to_lambda(lossy_pair)
    t0 = t_lambda(W0, lam)
    rabi, g_e, loss = 0.35, 2.0, 0.02
    expected = (loss ** 2 + rabi ** 2) / (loss * (g_e + loss) + rabi ** 2)
    assert t0 == pytest.approx(expected, abs=1e-12)
    assert abs(t0) ** 2 == pytest.approx(0.569, abs=5e-4)
    ks = np.linspace(W0 - 5, W0 + 5, 301)
    assert np.max(np.abs(t_pair(ks, lossy_pair) - t_lambda(ks, lam))) < 1e-12


def test_mapping_identity_all_k():
    # pair (markovian) == mapped driven 3LS for k0L multiple of pi
    ks = np.linspace(W0 - 5, W0 + 5, 1001)
    for k0L in (0.0, math.pi, 2 * math.pi):
        for delta in (0.35, 1.5):
            pair = PairGeometry(W0, delta, 1.0, k0L if k0L > 0 else 1e-15)
            lam = map_pair_to_lambda(pair)
            err = np.max(np.abs(t_pair(ks, pair) - t_lambda(ks, lam)))
            assert err < 1e-12, (k0L, delta, err)


def test_mapping_identity_unequal_decay_rates():
    ks = np.linspace(W0 - 5, W0 + 5, 401)
    lam = mapping_rules(W0, 0.6, 2.0, 1.0)
    chain = EmitterChain((
        TwoLevelEmitter(W0 + 0.3, 2.0, 0.0, -math.pi / (2 * W0)),
        TwoLevelEmitter(W0 - 0.3, 1.0, 0.0, +math.pi / (2 * W0)),
    ))
    sol = chain_amplitudes(chain, ks, "markovian")
    assert np.max(np.abs(sol.t - t_lambda(ks, lam))) < 1e-12


# ---------------------------------------------------------------- composer

def test_composer_matches_pair_closed_form_both_modes():
    rng = np.random.default_rng(7)
    ks = W0 + rng.uniform(-5, 5, 1000)
    for mode in ("markovian", "exact"):
        for delta, k0L in ((0.35, math.pi), (-0.8, 2.3), (1.5, 0.6)):
            pair = PairGeometry(W0, delta, 1.0, k0L)
            chain = build_pair(W0, delta, 1.0, k0L)
            sol = chain_amplitudes(chain, ks, mode)
            assert np.max(np.abs(sol.t - t_pair(ks, pair, mode))) < 1e-12


def test_composer_matches_lambda_closed_form():
    lam = DrivenLambdaEmitter(W0, 0.4, 2.5, 1.3, 0.05, 0.01)
    chain = EmitterChain((lam,))
    ks = np.linspace(W0 - 6, W0 + 6, 301)
    sol = chain_amplitudes(chain, ks, "markovian")
    assert np.max(np.abs(sol.t - t_lambda(ks, lam))) < 1e-14


def test_single_emitter_point_scatterer_identity():
    chain = EmitterChain((TwoLevelEmitter(W0, 1.0, 0.0, 0.0),))
    sol = chain_amplitudes(chain, [W0], "markovian")
    assert sol.t[0] == 0
    assert sol.r_fw[0] == pytest.approx(-1.0)


def test_232_transparency_and_zeros():
    chain = build_232(W0, 0.35, 1.0, 3.0)
    ks = [W0, W0 + 0.175, W0 - 0.175, W0 + 1.5, W0 - 1.5]
    sol = chain_amplitudes(chain, ks, "markovian")
    assert sol.T[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(sol.T[1:] == 0.0)


def test_reciprocity_via_reversed_chain():
    # transmission must not depend on which side the photon comes from:
    # compare against the spatially reversed chain
    rng = np.random.default_rng(11)
    for _ in range(100):
        chain = random_chain(rng)
        rev = EmitterChain(tuple(
            type(e)(**{**{f.name: getattr(e, f.name) for f in e.__dataclass_fields__.values()},
                       "position": -e.position})
            for e in reversed(chain.emitters)))
        k = float(W0 + rng.uniform(-4, 4))
        for mode in ("markovian", "exact"):
            t1 = chain_amplitudes(chain, [k], mode).t[0]
            t2 = chain_amplitudes(rev, [k], mode).t[0]
            assert abs(t1 - t2) < 1e-12


def test_lossless_unitarity_random_chains():
    rng = np.random.default_rng(3)
    for _ in range(100):
        chain = random_chain(rng)
        ks = W0 + rng.uniform(-6, 6, 20)
        for mode in ("markovian", "exact"):
            sol = chain_amplitudes(chain, ks, mode)
            assert np.max(np.abs(sol.T + sol.R_fw - 1)) < 1e-10
            assert np.max(np.abs(sol.T + sol.R_bw - 1)) < 1e-10


def test_lossy_flux_defect_positive():
    chain = build_pair(W0, 0.35, 1.0, math.pi, 0.05)
    sol = chain_amplitudes(chain, np.linspace(W0 - 3, W0 + 3, 101), "markovian")
    defect = sol.flux_defect()
    assert np.all(defect > -1e-12)
    assert defect.max() > 0.01


def test_markovian_halfwave_periodicity():
    rng = np.random.default_rng(19)
    ks = W0 + rng.uniform(-4, 4, 50)
    for _ in range(100):
        delta = float(rng.uniform(-1.5, 1.5))
        k0L = float(rng.uniform(0.3, 4.0))
        a = build_pair(W0, delta, 1.0, k0L)
        b = build_pair(W0, delta, 1.0, k0L + math.pi)
        sa = chain_amplitudes(a, ks, "markovian")
        sb = chain_amplitudes(b, ks, "markovian")
        assert np.max(np.abs(sa.T - sb.T)) < 1e-12
        assert np.max(np.abs(sa.R_fw - sb.R_fw)) < 1e-12


def test_transmission_asymptotics():
    ks = np.array([W0 - 5e4, W0 + 5e4])
    assert np.max(np.abs(t_pair(ks, PAIR) - 1)) < 1e-3


# ---------------------------------------------------------------- poles

def test_pole_values_detuned_pair():
    poles = pole_analysis(PAIR)
    # independent evaluation of the two roots
    root = cmath.sqrt(0.35 ** 2 - 1.0)
    expected = {W0 - 0.5j + root / 2, W0 - 0.5j - root / 2}
    assert min(abs(poles.dark - p) for p in expected) < 1e-12
    assert poles.dark.imag == pytest.approx(-(0.5 - 0.5 * math.sqrt(1 - 0.35 ** 2)), abs=1e-12)
    assert poles.dark.imag == pytest.approx(-0.0316, abs=5e-5)
    assert poles.bright.imag == pytest.approx(-0.9684, abs=5e-5)
    assert poles.dark.imag <= 0 and poles.bright.imag <= 0


def test_dark_pole_position_offset_separation():
    poles = pole_analysis(PairGeometry(W0, -0.06, 1.0, 0.98 * math.pi))
    assert poles.dark.real == pytest.approx(100.03, abs=2e-3)
    assert poles.dark_expansion.real == pytest.approx(W0 + 0.5 * 0.02 * math.pi, abs=1e-12)


def test_identical_pair_dark_pole_exactly_real():
    poles = pole_analysis(PairGeometry(W0, 0.0, 1.0, math.pi))
    assert poles.dark == pytest.approx(W0 + 0j, abs=1e-12)
    assert poles.bright == pytest.approx(W0 - 1j, abs=1e-12)


def test_pole_expansion_consistency():
    # exact poles approach the first-order expansion near k0L = pi, small detuning
    for eps, delta in ((0.01, 0.05), (0.02, 0.08)):
        poles = pole_analysis(PairGeometry(W0, delta, 1.0, math.pi + eps))
        assert abs(poles.dark - poles.dark_expansion) < 2 * (eps ** 2 + delta ** 2)
        assert abs(poles.bright - poles.bright_expansion) < 2 * (eps ** 2 + delta ** 2)


def test_delta_opt_values():
    assert delta_opt(0.98 * math.pi) == pytest.approx(-0.0628, abs=5e-5)
    assert delta_opt(math.pi) == 0
    assert delta_opt(1.02 * math.pi) == pytest.approx(+0.0628, abs=5e-5)


# ---------------------------------------------------------------- time delay

def test_delay_detuned_pair_at_resonance():
    chain = build_pair(W0, 0.35, 1.0, math.pi)
    tau = time_delay(chain, W0)
    assert tau == pytest.approx(4 / 0.35 ** 2, rel=1e-6)


def test_delay_232_at_resonance_matches_formula():
    chain = build_232(W0, 0.35, 1.0, 3.0)
    tau = time_delay(chain, W0)
    assert tau == pytest.approx(delay_232_formula(0.35, 3.0, 1.0), rel=1e-6)
    assert tau == pytest.approx(40.13, abs=0.01)


def test_delay_identical_pair_profile():
    # the identical pair reduces to one emitter of doubled width: its Wigner
    # delay is gamma/((k-w0)^2 + gamma^2); the 2/gamma array value quoted for
    # correlation traces is the per-emitter coherence time, not this curve
    chain = build_pair(W0, 0.0, 1.0, math.pi)
    for dk in (0.5, 1.0, 2.0):
        tau = time_delay(chain, W0 + dk)
        assert tau == pytest.approx(1.0 / (dk ** 2 + 1.0), rel=1e-6)
    assert identical_array_delay(1.0) == 2.0


def test_delay_undefined_at_transmission_zero():
    chain = build_pair(W0, 0.35, 1.0, math.pi)
    with pytest.raises(UndefinedPhaseError):
        time_delay(chain, W0 + 0.175)
