"""Physical parameter types and canonical system builders.

Units: hbar = c = 1. All frequencies and rates are dimensionless multiples of a
reference decay rate, times are in inverse units of it, and emitter separations
are stored as dimensionless phases k0*L accumulated at the resonance wavevector
k0 (linear dispersion, so k0 equals the resonance frequency).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Union

__all__ = [
    "InvalidParameterError",
    "UnitsConvention",
    "TwoLevelEmitter",
    "DrivenLambdaEmitter",
    "PairGeometry",
    "EmitterChain",
    "build_pair",
    "build_lambda",
    "build_232",
    "mapping_rules",
    "map_pair_to_lambda",
]


class InvalidParameterError(ValueError):
    """A physical parameter violates its constraint (e.g. non-positive decay rate)."""


@dataclass(frozen=True)
class UnitsConvention:
    """Reference decay rate that sets the unit system."""

    reference_rate: float = 1.0

    def __post_init__(self):
        if self.reference_rate <= 0:
            raise InvalidParameterError("reference_rate must be positive")


@dataclass(frozen=True)
class TwoLevelEmitter:
    """Two-level emitter side-coupled to the waveguide.

    `loss` is the decay rate into non-waveguide channels; it broadens the
    excited level without feeding the transmitted or reflected fields.
    """

    frequency: float
    waveguide_decay: float
    loss: float = 0.0
    position: float = 0.0

    def __post_init__(self):
        if self.waveguide_decay <= 0:
            raise InvalidParameterError("waveguide_decay must be positive")
        if self.loss < 0:
            raise InvalidParameterError("loss must be non-negative")

    @property
    def kind(self) -> str:
        return "2ls"


@dataclass(frozen=True)
class DrivenLambdaEmitter:
    """Lambda-type three-level emitter with a classical beam on the e-s leg.

    The waveguide couples only the ground-excited transition. In the rotating
    frame the metastable level sits at ``excited - classical_detuning``; it is
    exposed as the derived attribute `metastable`.
    """

    excited: float
    classical_detuning: float
    rabi: float
    waveguide_decay: float
    loss_excited: float = 0.0
    loss_metastable: float = 0.0
    position: float = 0.0

    def __post_init__(self):
        if self.waveguide_decay <= 0:
            raise InvalidParameterError("waveguide_decay must be positive")
        if self.loss_excited < 0 or self.loss_metastable < 0:
            raise InvalidParameterError("losses must be non-negative")

    @property
    def metastable(self) -> float:
        return self.excited - self.classical_detuning

    @property
    def kind(self) -> str:
        return "3ls"


Emitter = Union[TwoLevelEmitter, DrivenLambdaEmitter]


@dataclass(frozen=True)
class PairGeometry:
    """Two detuned two-level emitters at positions -L/2 and +L/2.

    Frequencies are center +- detuning/2. The emitter carrying the +detuning/2
    frequency sits at -L/2 and is the first one hit by left-incident photons;
    this sign pairing is the one consistent with the closed-form pair
    amplitudes (see closedpair.green_matrix, which machine-checks it).
    """

    center: float
    detuning: float
    gamma: float
    separation_phase: float  # k0 * L
    loss: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise InvalidParameterError("gamma must be positive")
        if self.loss < 0:
            raise InvalidParameterError("loss must be non-negative")
        if self.center <= 0:
            raise InvalidParameterError("center frequency must be positive (it sets k0)")

    @property
    def k0(self) -> float:
        return self.center

    @property
    def separation(self) -> float:
        return self.separation_phase / self.k0

    @property
    def frequencies(self) -> tuple[float, float]:
        """(frequency at -L/2, frequency at +L/2)."""
        return (self.center + self.detuning / 2, self.center - self.detuning / 2)

    def mirrored(self) -> "PairGeometry":
        """The spatially mirrored pair: identical to flipping the detuning sign."""
        return PairGeometry(self.center, -self.detuning, self.gamma,
                            self.separation_phase, self.loss)


@dataclass(frozen=True)
class EmitterChain:
    """Ordered chain of emitters along the waveguide."""

    emitters: tuple[Emitter, ...]
    units: UnitsConvention = field(default_factory=UnitsConvention)

    def __post_init__(self):
        if len(self.emitters) == 0:
            raise InvalidParameterError("chain needs at least one emitter")
        pos = [e.position for e in self.emitters]
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise InvalidParameterError("emitter positions must be strictly increasing")

    @property
    def k0(self) -> float:
        """Resonance wavevector: mean transition frequency of the waveguide-coupled legs."""
        freqs = [e.frequency if isinstance(e, TwoLevelEmitter) else e.excited
                 for e in self.emitters]
        return sum(freqs) / len(freqs)

    def to_dict(self) -> dict:
        return {
            "units": asdict(self.units),
            "emitters": [{"kind": e.kind, **asdict(e)} for e in self.emitters],
        }

    @staticmethod
    def from_dict(data: dict) -> "EmitterChain":
        emitters = []
        for entry in data["emitters"]:
            entry = dict(entry)
            kind = entry.pop("kind")
            cls = TwoLevelEmitter if kind == "2ls" else DrivenLambdaEmitter
            emitters.append(cls(**entry))
        return EmitterChain(tuple(emitters), UnitsConvention(**data["units"]))


def build_pair(omega0: float, delta: float, gamma: float, k0L: float,
               loss: float = 0.0) -> EmitterChain:
    """Chain of two 2LS at -L/2 and +L/2 with frequencies omega0 +- delta/2.

    The +delta/2 emitter sits at -L/2 (hit first from the left); k0L is the
    phase accumulated between them at k0 = omega0.
    """
    geom = PairGeometry(omega0, delta, gamma, k0L, loss)  # validates parameters
    half = geom.separation / 2
    f_left, f_right = geom.frequencies
    return EmitterChain((
        TwoLevelEmitter(f_left, gamma, loss, -half),
        TwoLevelEmitter(f_right, gamma, loss, +half),
    ))


def build_lambda(omega0: float, gamma: float, rabi: float, drive_detuning: float = 0.0,
                 loss_excited: float = 0.0, loss_metastable: float = 0.0) -> EmitterChain:
    """Single driven Lambda-type emitter at the origin."""
    return EmitterChain((
        DrivenLambdaEmitter(omega0, drive_detuning, rabi, gamma,
                            loss_excited, loss_metastable, 0.0),
    ))


def build_232(omega0: float, delta: float, gamma: float, rabi: float,
              drive_detuning: float = 0.0, k0L_neighbor: float = None,
              loss: float = 0.0, loss_metastable: float = 0.0) -> EmitterChain:
    """2LS / driven-3LS / 2LS chain with equal neighbor spacing.

    `k0L_neighbor` is the phase between adjacent emitters (the outer pair then
    spans twice that). Defaults to pi/2, i.e. quarter-wavelength neighbors and
    a half-wavelength outer pair. The outer 2LS carry omega0 +- delta/2 with
    the same sign convention as `build_pair`.
    """
    import math
    if k0L_neighbor is None:
        k0L_neighbor = math.pi / 2
    geom = PairGeometry(omega0, delta, gamma, 2 * k0L_neighbor, loss)
    half = geom.separation / 2
    f_left, f_right = geom.frequencies
    return EmitterChain((
        TwoLevelEmitter(f_left, gamma, loss, -half),
        DrivenLambdaEmitter(omega0, drive_detuning, rabi, gamma,
                            loss, loss_metastable, 0.0),
        TwoLevelEmitter(f_right, gamma, loss, +half),
    ))


def mapping_rules(omega0: float, delta: float, gamma1: float,
                  gamma2: float, loss: float = 0.0) -> DrivenLambdaEmitter:
    """Effective driven 3LS equivalent to a detuned pair at half-wavelength spacing.

    The detuning plays the role of the classical drive: with emitter decay
    rates gamma1, gamma2 the equivalent emitter has

        excited    = omega0 + delta (gamma1 - gamma2) / (2 (gamma1 + gamma2))
        metastable = omega0 - delta (gamma1 - gamma2) / (2 (gamma1 + gamma2))
        rabi       = 2 delta sqrt(gamma1 gamma2) / (gamma1 + gamma2)
        decay      = gamma1 + gamma2

    For delta = 0 this degenerates to a single 2LS with the decay rate doubled.
    A non-waveguide loss rate carries over to both effective levels.
    """
    import math
    if gamma1 <= 0 or gamma2 <= 0:
        raise InvalidParameterError("decay rates must be positive")
    shift = delta * (gamma1 - gamma2) / (2 * (gamma1 + gamma2))
    rabi = 2 * delta * math.sqrt(gamma1 * gamma2) / (gamma1 + gamma2)
    # excited - classical_detuning must equal the mirrored (metastable) frequency
    return DrivenLambdaEmitter(
        excited=omega0 + shift,
        classical_detuning=2 * shift,
        rabi=rabi,
        waveguide_decay=gamma1 + gamma2,
        loss_excited=loss,
        loss_metastable=loss,
        position=0.0,
    )


def map_pair_to_lambda(pair: PairGeometry) -> DrivenLambdaEmitter:
    """`mapping_rules` for an equal-decay pair, carrying its loss rate along."""
    return mapping_rules(pair.center, pair.detuning, pair.gamma, pair.gamma, pair.loss)
