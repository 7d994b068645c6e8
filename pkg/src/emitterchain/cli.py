"""Config-driven command line front end.

`simulate --preset fig3 --out out/` reproduces a named sweep; `simulate
--config my.cfg` runs a custom system described in a plain sectioned
key=value file (see `CONFIG_REFERENCE`). All outputs are CSV files with a
`#`-prefixed metadata header; identical inputs produce byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 calibration failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, engine, scenarios
from .model import EmitterChain, InvalidParameterError, build_232, build_lambda, build_pair
from .singlephoton import NumericFailure, UndefinedPhaseError, chain_amplitudes
from .engine import CalibrationError

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "run_scenario",
    "emit_csv",
    "preset_text",
    "PRESETS",
    "CONFIG_REFERENCE",
    "main",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CALIBRATION = 4

_NUMERIC_ERRORS = (NumericFailure, UndefinedPhaseError, engine.EngineModelError,
                   engine.WeakDriveViolation, engine.IllDefinedCorrelation,
                   engine.DegenerateSteadyState, scenarios.ScenarioError)

CONFIG_REFERENCE = """\
[system]
type = pair | lambda | two_three_two
omega0 = <frequency>          # resonance frequency, also the phase reference k0
gamma = <rate>                # waveguide decay per emitter
delta = <frequency>           # pair/two_three_two only: frequency splitting
k0L = <phase>                 # pair: full separation phase; two_three_two: neighbor phase
rabi = <frequency>            # lambda/two_three_two only: classical drive
drive_detuning = <frequency>  # lambda/two_three_two, optional (default 0)
gamma_prime = <rate>          # optional non-waveguide loss (default 0)
loss_metastable = <rate>      # lambda/two_three_two, optional (default 0)

[grid]
kmin, kmax, nk                # momentum grid (transmission/flux/rectification)
k_probe = <frequency>         # g2/spectrum probe momentum
tmax, nt                      # g2 time grid
wmin, wmax, nw                # spectrum frequency grid

[run]
mode = markovian | exact      # exact supports the transmission observable only
drive = left | right | both   # both is only meaningful for rectification
observables = transmission,flux,g2,spectrum,rectification
out = <file stem>
"""

_SYSTEM_KEYS = {
    "pair": {"required": {"type", "omega0", "gamma", "delta", "k0L"},
             "optional": {"gamma_prime"}},
    "lambda": {"required": {"type", "omega0", "gamma", "rabi"},
               "optional": {"drive_detuning", "gamma_prime", "loss_metastable"}},
    "two_three_two": {"required": {"type", "omega0", "gamma", "delta", "k0L", "rabi"},
                      "optional": {"drive_detuning", "gamma_prime", "loss_metastable"}},
}
_GRID_KEYS = {"kmin", "kmax", "nk", "k_probe", "tmax", "nt", "wmin", "wmax", "nw"}
_RUN_KEYS = {"mode", "drive", "observables", "out"}
_OBSERVABLES = {"transmission", "flux", "g2", "spectrum", "rectification"}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration; carries a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass
class RunConfig:
    """Validated custom-run description."""

    system: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    def build_chain(self) -> EmitterChain:
        s = self.system
        kind = s["type"]
        if kind == "pair":
            return build_pair(s["omega0"], s["delta"], s["gamma"], s["k0L"],
                              s.get("gamma_prime", 0.0))
        if kind == "lambda":
            return build_lambda(s["omega0"], s["gamma"], s["rabi"],
                                s.get("drive_detuning", 0.0),
                                s.get("gamma_prime", 0.0),
                                s.get("loss_metastable", 0.0))
        return build_232(s["omega0"], s["delta"], s["gamma"], s["rabi"],
                         s.get("drive_detuning", 0.0), s["k0L"],
                         s.get("gamma_prime", 0.0), s.get("loss_metastable", 0.0))


def _parse_number(key: str, raw: str, line: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"malformed number for {key!r}: {raw!r}", line) from None
    if not math.isfinite(value):
        raise ConfigError(f"non-finite value for {key!r}", line)
    return value


def parse_config(text: str) -> RunConfig:
    """Parse and validate a sectioned key=value config; errors carry line numbers."""
    sections: dict[str, dict] = {}
    lines_of: dict[tuple, int] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in ("system", "grid", "run"):
                raise ConfigError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        if current is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, _, raw_value = line.partition("=")
        key, raw_value = key.strip(), raw_value.strip()
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        sections[current][key] = raw_value
        lines_of[(current, key)] = lineno

    for required in ("system", "grid", "run"):
        if required not in sections:
            raise ConfigError(f"missing section [{required}]")

    cfg = RunConfig()

    sys_raw = sections["system"]
    kind = sys_raw.get("type")
    if kind is None:
        raise ConfigError("missing key 'type' in [system]")
    if kind not in _SYSTEM_KEYS:
        raise ConfigError(f"unknown system type {kind!r}",
                          lines_of.get(("system", "type")))
    schema = _SYSTEM_KEYS[kind]
    for key in sys_raw:
        if key not in schema["required"] | schema["optional"]:
            raise ConfigError(f"key {key!r} is not applicable to system type {kind!r}",
                              lines_of.get(("system", key)))
    for key in schema["required"]:
        if key not in sys_raw:
            raise ConfigError(f"missing key {key!r} in [system] for type {kind!r}")
    cfg.system["type"] = kind
    for key, raw_value in sys_raw.items():
        if key == "type":
            continue
        cfg.system[key] = _parse_number(key, raw_value, lines_of[("system", key)])

    for key, raw_value in sections["grid"].items():
        if key not in _GRID_KEYS:
            raise ConfigError(f"unknown key {key!r} in [grid]", lines_of[("grid", key)])
        value = _parse_number(key, raw_value, lines_of[("grid", key)])
        cfg.grid[key] = int(value) if key in ("nk", "nt", "nw") else value

    run_raw = sections["run"]
    for key in run_raw:
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown key {key!r} in [run]", lines_of[("run", key)])
    cfg.run["mode"] = run_raw.get("mode", "markovian")
    if cfg.run["mode"] not in ("markovian", "exact"):
        raise ConfigError(f"unknown mode {cfg.run['mode']!r}", lines_of.get(("run", "mode")))
    cfg.run["drive"] = run_raw.get("drive", "left")
    if cfg.run["drive"] not in ("left", "right", "both"):
        raise ConfigError(f"unknown drive {cfg.run['drive']!r}", lines_of.get(("run", "drive")))
    obs_raw = run_raw.get("observables", "transmission")
    obs = tuple(o.strip() for o in obs_raw.split(",") if o.strip())
    for o in obs:
        if o not in _OBSERVABLES:
            raise ConfigError(f"unknown observable {o!r}",
                              lines_of.get(("run", "observables")))
    if not obs:
        raise ConfigError("empty observables list", lines_of.get(("run", "observables")))
    cfg.run["observables"] = obs
    cfg.run["out"] = run_raw.get("out", "run")

    _validate_cross(cfg, lines_of)
    return cfg


def _validate_cross(cfg: RunConfig, lines_of) -> None:
    obs = cfg.run["observables"]
    needs_kgrid = {"transmission", "flux", "rectification"} & set(obs)
    if needs_kgrid:
        for key in ("kmin", "kmax", "nk"):
            if key not in cfg.grid:
                raise ConfigError(f"missing key {key!r} in [grid] for {sorted(needs_kgrid)}")
        if not (cfg.grid["kmin"] < cfg.grid["kmax"]) or cfg.grid["nk"] < 2:
            raise ConfigError("momentum grid must satisfy kmin < kmax and nk >= 2")
    if "g2" in obs:
        for key in ("k_probe", "tmax", "nt"):
            if key not in cfg.grid:
                raise ConfigError(f"missing key {key!r} in [grid] for g2")
    if "spectrum" in obs:
        for key in ("k_probe", "wmin", "wmax", "nw"):
            if key not in cfg.grid:
                raise ConfigError(f"missing key {key!r} in [grid] for spectrum")
    two_photon = {"flux", "g2", "spectrum", "rectification"} & set(obs)
    if cfg.run["mode"] == "exact" and two_photon:
        raise ConfigError(
            f"exact mode supports only the transmission observable, not {sorted(two_photon)}")
    if cfg.run["drive"] == "both" and set(obs) - {"rectification"}:
        raise ConfigError("drive = both is only meaningful for rectification")
    if "rectification" in obs and cfg.system["type"] == "lambda":
        raise ConfigError("rectification needs a spatially extended system")


# ----------------------------------------------------------------------------
# CSV emission
# ----------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def emit_csv(table: dict, path, metadata: dict | None = None) -> None:
    """Write a column table as CSV with `# key=value` metadata lines.

    Deterministic format: 12-significant-digit shortest decimals, newline
    terminated, no timestamps, so identical inputs give identical bytes.
    """
    columns = {k: np.atleast_1d(np.asarray(v)) for k, v in table.items()
               if k != "annotations"}
    if not columns:
        raise ValueError("empty table")
    lengths = {len(v) for v in columns.values()}
    if len(lengths) != 1:
        raise ValueError(f"ragged columns: {sorted((k, len(v)) for k, v in columns.items())}")
    lines = []
    meta = dict(metadata or {})
    for key, value in table.get("annotations", {}).items():
        meta[key] = value
    for key in meta:
        lines.append(f"# {key}={_fmt(meta[key]) if isinstance(meta[key], (int, float, np.floating)) else meta[key]}")
    lines.append(",".join(columns))
    n = lengths.pop()
    for i in range(n):
        lines.append(",".join(_fmt(col[i]) for col in columns.values()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _base_metadata(extra: dict | None = None) -> dict:
    cal = _calibration()
    meta = {
        "version": __version__,
        "kappa": cal.kappa,
        "kappa_prime": cal.kappa_prime,
        "amplitude": engine.DEFAULT_AMPLITUDE,
        "g2_amplitude": engine.G2_AMPLITUDE,
    }
    if extra:
        meta.update(extra)
    return meta


_CAL_CACHE = None


def _calibration():
    global _CAL_CACHE
    if _CAL_CACHE is None:
        _CAL_CACHE = engine.calibrate_normalization()
    return _CAL_CACHE


# ----------------------------------------------------------------------------
# presets
# ----------------------------------------------------------------------------

def preset_text(name: str) -> str:
    """Representative config text for a preset (the full preset may run several)."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return PRESETS[name]["config"]


def _sanitize(label: str) -> str:
    return label.replace("=", "").replace(" ", "_").replace(".", "p").replace("-", "m")


def _run_fig3(outdir: Path, threads: int, meta: dict) -> list[Path]:
    tables = scenarios.reproduce_spectra("fig3", threads=threads)
    return _emit_many(tables, outdir, "fig3", meta)


def _run_fig6(outdir: Path, threads: int, meta: dict) -> list[Path]:
    tables = scenarios.reproduce_spectra("fig6", threads=threads)
    return _emit_many(tables, outdir, "fig6", meta)


def _emit_many(tables: dict, outdir: Path, stem: str, meta: dict) -> list[Path]:
    paths = []
    for label, table in tables.items():
        path = outdir / f"{stem}_{_sanitize(label)}.csv"
        emit_csv(table, path, {**meta, "case": label})
        paths.append(path)
    return paths


def _run_fig4(outdir: Path, threads: int, meta: dict) -> list[Path]:
    return _emit_many(scenarios.reproduce_g2("fig4"), outdir, "fig4", meta)


def _run_fig7(outdir: Path, threads: int, meta: dict) -> list[Path]:
    return _emit_many(scenarios.reproduce_g2("fig7"), outdir, "fig7", meta)


def _run_fig5(outdir: Path, threads: int, meta: dict) -> list[Path]:
    paths = []
    ks = np.linspace(scenarios.OMEGA0 - 0.3, scenarios.OMEGA0 + 0.3, 301)
    for delta in scenarios.FIG5_DETUNINGS:
        chain = build_pair(scenarios.OMEGA0, delta, 1.0, 0.98 * math.pi)
        f_r, f_l, f = scenarios._flux_columns(chain, ks, threads)
        path = outdir / f"fig5_flux_{_sanitize(f'delta={delta:g}')}.csv"
        emit_csv({"k": ks, "F_R": f_r, "F_L": f_l, "F": f}, path,
                 {**meta, "case": f"k0L=0.98pi delta={delta:g}"})
        paths.append(path)
    for mult, delta in scenarios.FIG5_QUADS:
        chain = build_pair(scenarios.OMEGA0, delta, 1.0, mult * math.pi)
        rows = scenarios._parallel(
            lambda k: engine.nonlinear_intensity(chain, float(k)), ks, threads)
        kp = _calibration().kappa_prime
        x_lr = np.array([kp * r[0] for r in rows])
        x_rl = np.array([kp * r[1] for r in rows])
        diff = np.array([r[2] for r in rows])
        path = outdir / f"fig5_rect_{_sanitize(f'{mult:g}pi_delta={delta:g}')}.csv"
        emit_csv({"k": ks, "X_lr": x_lr, "X_rl": x_rl, "absdiff": diff}, path,
                 {**meta, "case": f"k0L={mult:g}pi delta={delta:g}",
                  "note": "X columns keep the direction-independent constant; absdiff is |X_lr-X_rl|"})
        paths.append(path)
    k0Ls = np.linspace(0.96, 1.04, 9) * math.pi
    deltas = np.linspace(-0.16, 0.16, 33)
    rmap = scenarios.rectification_map(k0Ls, deltas, threads=threads)
    fit = scenarios.ridge_fit(rmap)
    delta_max = [rmap.delta[int(np.argmax(rmap.value[i]))] for i in range(len(k0Ls))]
    path = outdir / "fig5_ridge.csv"
    emit_csv({"k0L_over_pi": k0Ls / math.pi,
              "delta_max": delta_max,
              "line_fit": fit.slope * (k0Ls / math.pi - 1) + fit.intercept},
             path, {**meta, "slope": fit.slope, "intercept": fit.intercept,
                    "residual": fit.residual, "analytic_slope": math.pi,
                    "literature_slope": fit.literature_slope})
    paths.append(path)
    return paths


def _run_fig8(outdir: Path, threads: int, meta: dict) -> list[Path]:
    chain = build_232(scenarios.OMEGA0, 0.35, 1.0, 3.0)
    ks = np.linspace(scenarios.OMEGA0 - 2.0, scenarios.OMEGA0 + 2.0, 201)

    def one(k):
        fw = engine.fourth_order_response(chain, float(k), "left")
        bw = engine.fourth_order_response(chain, float(k), "right")
        cal = _calibration()
        return (cal.kappa * fw.n4, cal.kappa * bw.n4,
                cal.kappa_prime * fw.I4, cal.kappa_prime * bw.I4)

    rows = scenarios._parallel(one, ks, threads)
    f_fw = np.array([r[0] for r in rows])
    f_bw = np.array([r[1] for r in rows])
    x_lr = np.array([r[2] for r in rows])
    x_rl = np.array([r[3] for r in rows])
    path = outdir / "fig8.csv"
    emit_csv({"k": ks, "F_fw": f_fw, "F_bw": f_bw, "Fdiff": f_fw - f_bw,
              "X_lr": x_lr, "X_rl": x_rl, "absdiff": np.abs(x_lr - x_rl)},
             path, meta)
    return [path]


def _run_fig9(outdir: Path, threads: int, meta: dict) -> list[Path]:
    path = outdir / "fig9.csv"
    emit_csv(scenarios.loss_markov_compare(), path, meta)
    return [path]


PRESETS = {
    "fig3": {"runner": _run_fig3, "config": (
        "[system]\ntype = pair\nomega0 = 100.0\ndelta = 0.35\ngamma = 1.0\n"
        "k0L = 3.141592653589793\n\n[grid]\nkmin = 98.0\nkmax = 102.0\nnk = 201\n\n"
        "[run]\nmode = markovian\ndrive = left\nobservables = transmission,flux\nout = fig3\n")},
    "fig4": {"runner": _run_fig4, "config": (
        "[system]\ntype = pair\nomega0 = 100.0\ndelta = 0.35\ngamma = 1.0\n"
        "k0L = 3.141592653589793\n\n[grid]\nk_probe = 99.9\ntmax = 120.0\nnt = 401\n\n"
        "[run]\nmode = markovian\ndrive = left\nobservables = g2\nout = fig4\n")},
    "fig5": {"runner": _run_fig5, "config": (
        "[system]\ntype = pair\nomega0 = 100.0\ndelta = -0.06\ngamma = 1.0\n"
        "k0L = 3.078760800517997\n\n[grid]\nkmin = 99.7\nkmax = 100.3\nnk = 301\n\n"
        "[run]\nmode = markovian\ndrive = both\nobservables = rectification\nout = fig5\n")},
    "fig6": {"runner": _run_fig6, "config": (
        "[system]\ntype = two_three_two\nomega0 = 100.0\ndelta = 0.35\ngamma = 1.0\n"
        "rabi = 3.0\nk0L = 1.5707963267948966\n\n[grid]\nkmin = 98.0\nkmax = 102.0\nnk = 201\n\n"
        "[run]\nmode = markovian\ndrive = left\nobservables = transmission,flux\nout = fig6\n")},
    "fig7": {"runner": _run_fig7, "config": (
        "[system]\ntype = two_three_two\nomega0 = 100.0\ndelta = 0.35\ngamma = 1.0\n"
        "rabi = 3.0\nk0L = 1.5707963267948966\n\n[grid]\nk_probe = 100.0\ntmax = 120.0\nnt = 401\n"
        "wmin = 88.0\nwmax = 112.0\nnw = 241\n\n"
        "[run]\nmode = markovian\ndrive = left\nobservables = g2,spectrum\nout = fig7\n")},
    "fig8": {"runner": _run_fig8, "config": (
        "[system]\ntype = two_three_two\nomega0 = 100.0\ndelta = 0.35\ngamma = 1.0\n"
        "rabi = 3.0\nk0L = 1.5707963267948966\n\n[grid]\nkmin = 98.0\nkmax = 102.0\nnk = 201\n\n"
        "[run]\nmode = markovian\ndrive = both\nobservables = rectification\nout = fig8\n")},
    "fig9": {"runner": _run_fig9, "config": (
        "[system]\ntype = pair\nomega0 = 100.0\ndelta = 0.35\ngamma = 1.0\n"
        "k0L = 3.141592653589793\ngamma_prime = 0.02\n\n[grid]\nkmin = 98.0\nkmax = 102.0\nnk = 801\n\n"
        "[run]\nmode = exact\ndrive = left\nobservables = transmission\nout = fig9\n")},
}


# ----------------------------------------------------------------------------
# custom config runs
# ----------------------------------------------------------------------------

def run_scenario(cfg: RunConfig, outdir: Path, threads: int = 1,
                 mode_override: str | None = None,
                 drive_override: str | None = None) -> list[Path]:
    """Execute a validated custom config; returns the written files."""
    if mode_override:
        cfg.run["mode"] = mode_override
    if drive_override:
        cfg.run["drive"] = drive_override
    _validate_cross(cfg, {})
    chain = cfg.build_chain()
    mode = cfg.run["mode"]
    drive = cfg.run["drive"]
    obs = cfg.run["observables"]
    stem = cfg.run["out"]
    meta = _base_metadata({"system": cfg.system["type"], "mode": mode, "drive": drive})
    for key, value in sorted(cfg.system.items()):
        if key != "type":
            meta[f"system_{key}"] = value
    paths = []

    if {"transmission", "flux"} & set(obs):
        ks = np.linspace(cfg.grid["kmin"], cfg.grid["kmax"], cfg.grid["nk"])
        direction = "left" if drive == "both" else drive
        sol = chain_amplitudes(chain, ks, mode, direction)
        table = {"k": ks, "Re_t": sol.t.real, "Im_t": sol.t.imag,
                 "T": sol.T, "R": sol.R_fw}
        if "flux" in obs:
            def one(k):
                return engine.inelastic_flux(chain, float(k), direction)
            rows = scenarios._parallel(one, ks, threads)
            table["F_R"] = np.array([r[0] for r in rows])
            table["F_L"] = np.array([r[1] - r[0] for r in rows])
            table["F"] = np.array([r[1] for r in rows])
        path = outdir / f"{stem}_spectrum.csv"
        emit_csv(table, path, meta)
        paths.append(path)

    if "g2" in obs:
        times = np.linspace(0.0, cfg.grid["tmax"], cfg.grid["nt"])
        direction = "left" if drive == "both" else drive
        g2 = engine.g2_transmitted(chain, cfg.grid["k_probe"], direction, times)
        path = outdir / f"{stem}_g2.csv"
        emit_csv({"t": times, "g2": g2}, path,
                 {**meta, "k_probe": cfg.grid["k_probe"]})
        paths.append(path)

    if "spectrum" in obs:
        omegas = np.linspace(cfg.grid["wmin"], cfg.grid["wmax"], cfg.grid["nw"])
        direction = "left" if drive == "both" else drive
        s = engine.incoherent_spectrum(chain, cfg.grid["k_probe"], direction, omegas)
        path = outdir / f"{stem}_fluorescence.csv"
        emit_csv({"w": omegas, "S_R": s}, path,
                 {**meta, "k_probe": cfg.grid["k_probe"]})
        paths.append(path)

    if "rectification" in obs:
        ks = np.linspace(cfg.grid["kmin"], cfg.grid["kmax"], cfg.grid["nk"])
        kp = _calibration().kappa_prime

        def one(k):
            return engine.nonlinear_intensity(chain, float(k))
        rows = scenarios._parallel(one, ks, threads)
        path = outdir / f"{stem}_rectification.csv"
        emit_csv({"k": ks,
                  "X_lr": np.array([kp * r[0] for r in rows]),
                  "X_rl": np.array([kp * r[1] for r in rows]),
                  "absdiff": np.array([r[2] for r in rows])},
                 path, meta)
        paths.append(path)
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Few-photon waveguide scattering sweeps (CSV output).",
        epilog="Config file format:\n\n" + CONFIG_REFERENCE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=sorted(PRESETS), help="named sweep bundle")
    source.add_argument("--config", type=Path, help="custom run config file")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--mode", choices=("markovian", "exact"),
                        help="override the propagation-phase convention")
    parser.add_argument("--drive", choices=("left", "right", "both"),
                        help="override the drive direction")
    args = parser.parse_args(argv)

    try:
        args.out.mkdir(parents=True, exist_ok=True)
        meta = _base_metadata()
        if args.preset:
            if args.mode or args.drive:
                raise ConfigError("--mode/--drive overrides apply to --config runs only")
            meta["preset"] = args.preset
            paths = PRESETS[args.preset]["runner"](args.out, args.threads, meta)
        else:
            try:
                text = args.config.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            cfg = parse_config(text)
            paths = run_scenario(cfg, args.out, args.threads, args.mode, args.drive)
        for path in paths:
            print(path)
        return EXIT_OK
    except (ConfigError, InvalidParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as exc:
        print(f"calibration failure: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
