"""Command-line front end: ``lqed run | scan | crosscheck``.

Configurations are INI files with the sections ``[bath]``, ``[emitters]``,
``[initial]``, ``[evolution]``, ``[loss]``, ``[output]`` and, for
``crosscheck``, ``[crosscheck]``. Unknown sections or keys are rejected.
Every run writes ``trajectory.csv``, optional snapshot files and a
``manifest.ini`` that is itself a valid configuration.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .bath import BathModel
from .evolve import (
    EvolveConfig,
    Trajectory,
    WraparoundError,
    freq_binned_evolve,
    snapshot,
    split_step_evolve,
)
from .resolvent import (
    PoleSearchError,
    axis_poles,
    decompose,
    find_bound_states,
    find_unstable_poles,
    markov_rate,
)
from .scenarios import EmitterConfig, InitialStateSpec, initial_amplitudes, preset_runs, _square_index
from .selfenergy import QuadratureError, RecursionError_, SelfEnergyKind

__all__ = ["main", "ConfigError", "NumericalError", "RunConfig", "load_config", "parse_config"]

METHODS = ("splitstep", "freqbin", "resolvent")
QUANTITIES = ("selfenergy", "poles", "contributions")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


class NumericalError(RuntimeError):
    """A computation failed to converge or a strict check failed."""


# ----------------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------------


def _positions(text):
    rows = [r.strip() for r in text.replace("\n", ";").split(";") if r.strip()]
    return tuple(tuple(int(v) for v in r.split(",")) for r in rows)


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _words(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> parser
_SCHEMA = {
    "bath": {"dim": int, "N": int, "J": float},
    "emitters": {"g": float, "delta": float, "positions": _positions, "preset": str, "variant": str},
    "initial": {"state": str},
    "evolution": {
        "dt": float,
        "t_max": float,
        "snapshot_times": _floats,
        "method": _words,
        "splitting": str,
        "backend": str,
        "sample_every": int,
        "bin_width": float,
    },
    "loss": {"kappa": float, "gamma_star": float},
    "output": {"directory": str, "formats": _words},
    "crosscheck": {"tolerance": float},
    "run": {"lqed_version": str, "numpy_version": str, "scipy_version": str, "python_version": str, "wall_time": str},
}


@dataclass
class RunConfig:
    """Validated run parameters."""

    bath: BathModel
    emitters: EmitterConfig
    state: InitialStateSpec
    dt: float
    t_max: float
    snapshot_times: tuple
    methods: tuple
    splitting: str
    backend: str
    sample_every: int
    bin_width: Optional[float]
    kappa: float
    gamma_star: float
    directory: str
    formats: tuple
    tolerance: float

    def evolve_config(self, strict=False, **overrides) -> EvolveConfig:
        kw = dict(
            bath=self.bath,
            emitters=self.emitters,
            initial=initial_amplitudes(self.emitters, self.state),
            dt=self.dt,
            t_max=self.t_max,
            snapshot_times=self.snapshot_times,
            kappa=self.kappa,
            gamma_star=self.gamma_star,
            backend=self.backend,
            splitting=self.splitting,
            sample_every=self.sample_every,
            strict=strict,
        )
        kw.update(overrides)
        return EvolveConfig(**kw)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["bath"] = {"dim": str(self.bath.dim), "N": str(self.bath.N), "J": repr(self.bath.J)}
        cp["emitters"] = {
            "g": repr(self.emitters.g),
            "delta": repr(self.emitters.delta),
            "positions": "; ".join(",".join(str(c) for c in p) for p in self.emitters.positions),
        }
        cp["initial"] = {"state": self.state.tag}
        ev = {
            "dt": repr(self.dt),
            "t_max": repr(self.t_max),
            "method": ",".join(self.methods),
            "splitting": self.splitting,
            "backend": self.backend,
            "sample_every": str(self.sample_every),
        }
        if self.snapshot_times:
            ev["snapshot_times"] = ",".join(repr(float(t)) for t in self.snapshot_times)
        if self.bin_width is not None:
            ev["bin_width"] = repr(self.bin_width)
        cp["evolution"] = ev
        cp["loss"] = {"kappa": repr(self.kappa), "gamma_star": repr(self.gamma_star)}
        cp["output"] = {"directory": self.directory, "formats": ",".join(self.formats)}
        cp["crosscheck"] = {"tolerance": repr(self.tolerance)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _read_ini(text: str) -> Dict[str, Dict[str, object]]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    out: Dict[str, Dict[str, object]] = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        out[section] = {}
        for key, raw in cp[section].items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            try:
                out[section][key] = _SCHEMA[section][key](raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"invalid value for {section}.{key}: {raw!r} ({exc})") from None
    return out


def _need(raw, section, key, default=None):
    value = raw.get(section, {}).get(key, default)
    if value is None:
        raise ConfigError(f"missing key {section}.{key}")
    return value


def parse_config(text: str, need_time: bool = True) -> RunConfig:
    """Validate an INI document and resolve presets.

    `need_time` makes ``evolution.t_max`` mandatory; scans do not evolve
    and default it to zero.

    Raises
    ------
    ConfigError
        With the offending ``section.key`` in the message.
    """
    raw = _read_ini(text)
    base = {}
    em_raw = raw.get("emitters", {})
    if "preset" in em_raw:
        try:
            runs = preset_runs(em_raw["preset"])
        except KeyError as exc:
            raise ConfigError(f"emitters.preset: {exc.args[0]}") from None
        variant = em_raw.get("variant", "0")
        match = [r for r in runs if r.label == variant]
        if not match:
            try:
                match = [runs[int(variant)]]
            except (ValueError, IndexError):
                raise ConfigError(f"emitters.variant: preset has no variant {variant!r}") from None
        run = match[0]
        cfg = run.config
        base = {
            ("bath", "dim"): cfg.bath.dim,
            ("bath", "N"): cfg.bath.N,
            ("bath", "J"): cfg.bath.J,
            ("emitters", "g"): run.emitters.g,
            ("emitters", "delta"): run.emitters.delta,
            ("emitters", "positions"): run.emitters.positions,
            ("initial", "state"): run.state.tag,
            ("evolution", "dt"): cfg.dt,
            ("evolution", "t_max"): cfg.t_max,
            ("evolution", "snapshot_times"): tuple(cfg.snapshot_times),
            ("evolution", "sample_every"): cfg.sample_every,
            ("loss", "kappa"): cfg.kappa,
        }
    for (section, key), value in base.items():
        raw.setdefault(section, {}).setdefault(key, value)

    try:
        bath = BathModel(int(_need(raw, "bath", "dim")), int(_need(raw, "bath", "N")), float(_need(raw, "bath", "J", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"bath: {exc}") from None
    try:
        emitters = EmitterConfig(
            float(_need(raw, "emitters", "g")),
            float(_need(raw, "emitters", "delta")),
            _need(raw, "emitters", "positions"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"emitters.positions: {exc}") from None
    if emitters.dim != bath.dim:
        raise ConfigError("emitters.positions: dimension does not match bath.dim")
    try:
        state = InitialStateSpec(str(_need(raw, "initial", "state", "SingleExcited")))
        state.validate(emitters)
    except ValueError as exc:
        raise ConfigError(f"initial.state: {exc}") from None

    ev = raw.get("evolution", {})
    methods = tuple(ev.get("method", ("splitstep",)))
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"evolution.method: unknown method {m!r}; expected {METHODS}")
    if not methods:
        raise ConfigError("evolution.method: empty")
    splitting = ev.get("splitting", "strang")
    backend = ev.get("backend", "kernel")
    rc = RunConfig(
        bath=bath,
        emitters=emitters,
        state=state,
        dt=float(ev.get("dt", 0.05)),
        t_max=float(_need(raw, "evolution", "t_max", None if need_time else 0.0)),
        snapshot_times=tuple(ev.get("snapshot_times", ())),
        methods=methods,
        splitting=splitting,
        backend=backend,
        sample_every=int(ev.get("sample_every", 1)),
        bin_width=ev.get("bin_width"),
        kappa=float(raw.get("loss", {}).get("kappa", 0.0)),
        gamma_star=float(raw.get("loss", {}).get("gamma_star", 0.0)),
        directory=str(raw.get("output", {}).get("directory", "lqed_out")),
        formats=tuple(raw.get("output", {}).get("formats", ("csv",))),
        tolerance=float(raw.get("crosscheck", {}).get("tolerance", 1e-3)),
    )
    for fmt in rc.formats:
        if fmt not in ("csv", "snapshots"):
            raise ConfigError(f"output.formats: unknown format {fmt!r}")
    if rc.tolerance <= 0:
        raise ConfigError("crosscheck.tolerance: must be positive")
    try:
        rc.evolve_config()
    except ValueError as exc:
        key = _guess_key(str(exc))
        raise ConfigError(f"{key}: {exc}") from None
    return rc


def _guess_key(message):
    for needle, key in (
        ("power of two", "bath.N"),
        ("dt", "evolution.dt"),
        ("t_max", "evolution.t_max"),
        ("loss", "loss.kappa"),
        ("backend", "evolution.backend"),
        ("splitting", "evolution.splitting"),
        ("sample_every", "evolution.sample_every"),
        ("position", "emitters.positions"),
    ):
        if needle in message:
            return key
    return "configuration"


def load_config(path: str, need_time: bool = True) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path!r}: {exc.strerror}") from None
    return parse_config(text, need_time)


# ----------------------------------------------------------------------------
# Self-energy kinds for the analytic methods
# ----------------------------------------------------------------------------


def _kind_for(rc: RunConfig, n12=None) -> SelfEnergyKind:
    """Self-energy governing the configured initial state, when separable."""
    em, tag, dim = rc.emitters, rc.state.tag, rc.bath.dim
    suffix = "1D" if dim == 1 else "2D"
    if em.count == 1:
        return SelfEnergyKind("Single" + suffix, em.g, rc.bath.J)
    if tag in ("PlusPair", "MinusPair"):
        if n12 is None:
            d = np.subtract(em.positions[1], em.positions[0])
            n12 = int(d[0]) if dim == 1 else tuple(int(v) for v in d)
        return SelfEnergyKind("PlusMinus" + suffix, em.g, rc.bath.J, n12=n12, sign=1 if tag == "PlusPair" else -1)
    if tag == "FourB":
        return SelfEnergyKind("Four2D", em.g, rc.bath.J, n=_square_index(em.positions))
    raise ConfigError(f"initial.state: {tag} with {em.count} emitters has no single self-energy")


def _resolvent_ready(rc: RunConfig):
    kind = _kind_for(rc)
    if not kind.closed_form:
        raise ConfigError("evolution.method: the resolvent method is not available for FourB")
    if rc.kappa != rc.gamma_star:
        raise ConfigError("loss.kappa: the resolvent method supports equal loss rates only")
    if kind.g == 0:
        return kind
    return kind


# ----------------------------------------------------------------------------
# Methods
# ----------------------------------------------------------------------------


def _times(rc: RunConfig):
    cfg = rc.evolve_config()
    M = cfg.n_steps
    idx = list(range(0, M + 1, rc.sample_every))
    if idx[-1] != M:
        idx.append(M)
    return np.asarray(idx) * rc.dt


def _run_method(rc: RunConfig, method: str, strict: bool):
    """Returns ``(times, state_amplitude, emitter_amplitudes, trajectory)``."""
    amps0 = initial_amplitudes(rc.emitters, rc.state)
    if method == "splitstep":
        tr = split_step_evolve(rc.evolve_config(strict=strict))
        return tr.times, tr.overlap(amps0), tr.emitters, tr
    if method == "freqbin":
        if rc.emitters.count != 1:
            raise ConfigError("evolution.method: freqbin supports a single emitter")
        tr = freq_binned_evolve(rc.evolve_config(backend="kernel", snapshot_times=()), rc.bin_width)
        return tr.times, tr.overlap(amps0), tr.emitters, tr
    kind = _resolvent_ready(rc)
    t = _times(rc)
    if kind.g == 0:
        c = np.exp(-1j * rc.emitters.delta * t)
    else:
        c = decompose(kind, rc.emitters.delta).amplitude(t)
    c = c * np.exp(-0.5 * rc.kappa * t)
    # the state keeps its emitter pattern: C_j(t) = C(t) * a_j
    return t, c, np.outer(c, amps0), None


# ----------------------------------------------------------------------------
# Output
# ----------------------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _trajectory_csv(path, t, c_state, c_emitters):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["t", "abs2_state", "phase_state"]
        for j in range(c_emitters.shape[1]):
            header += [f"abs2_e{j + 1}", f"phase_e{j + 1}"]
        w.writerow(header)
        for i, ti in enumerate(t):
            row = [_fmt(ti), _fmt(abs(c_state[i]) ** 2), _fmt(np.angle(c_state[i]))]
            for c in c_emitters[i]:
                row += [_fmt(abs(c) ** 2), _fmt(np.angle(c))]
            w.writerow(row)


def _write_snapshots(directory, tr: Trajectory):
    paths = []
    for st in tr.snapshots:
        for space in ("position", "momentum"):
            snap = snapshot(st, space)
            name = f"snapshot_{space}_t{snap.time:.6g}.txt"
            path = os.path.join(directory, name)
            dims = ",".join(str(s) for s in snap.grid.shape)
            grid = snap.grid if snap.grid.ndim == 2 else snap.grid[None, :]
            np.savetxt(path, grid, fmt="%.17g", header=f"dims={dims} space={space} time={_fmt(snap.time)}")
            paths.append(path)
    return paths


def _manifest(directory, rc: RunConfig, wall):
    text = rc.to_ini()
    text += (
        "[run]\n"
        f"lqed_version = {__version__}\n"
        f"numpy_version = {np.__version__}\n"
        f"scipy_version = {scipy.__version__}\n"
        f"python_version = {platform.python_version()}\n"
        f"wall_time = {wall:.3f}\n"
    )
    with open(os.path.join(directory, "manifest.ini"), "w", encoding="utf-8") as fh:
        fh.write(text)


def _out_dir(rc: RunConfig, override: Optional[str]):
    if override:
        return override
    return os.environ.get("LQED_OUT") or rc.directory


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------


def cmd_run(args) -> int:
    rc = load_config(args.config)
    method = rc.methods[0]
    if method == "resolvent":
        _resolvent_ready(rc)
    start = time.perf_counter()
    t, c, ce, tr = _run_method(rc, method, args.strict)
    out = _out_dir(rc, args.out)
    os.makedirs(out, exist_ok=True)
    if "csv" in rc.formats:
        _trajectory_csv(os.path.join(out, "trajectory.csv"), t, c, ce)
    if tr is not None and tr.snapshots:
        _write_snapshots(out, tr)
    if tr is not None:
        for msg in tr.warnings:
            print(f"warning: {msg}", file=sys.stderr)
    _manifest(out, rc, time.perf_counter() - start)
    print(f"wrote {out}")
    return 0


def _parse_range(text):
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"--range: expected START:STOP[:COUNT], got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2]) if len(parts) == 3 else None
    except ValueError:
        raise ConfigError(f"--range: not numeric: {text!r}") from None
    return start, stop, count


def _scan_point(payload):
    quantity, kind, delta, label = payload
    try:
        if quantity == "selfenergy":
            m = markov_rate(kind, delta)
            return [[label, _fmt(delta), _fmt(m.delta_omega), _fmt(m.gamma), str(int(m.divergent))]]
        if quantity == "poles":
            rows = []
            for p in find_bound_states(kind, delta) + find_unstable_poles(kind, delta):
                tag = p.kind if p.kind != "UP" else f"UP-{p.sheet.value}"
                rows.append([label, _fmt(delta), tag, _fmt(p.z.real), _fmt(p.z.imag), _fmt(abs(p.residue))])
            # subradiant poles on the middle cut are reported but not part of the decomposition
            for p in axis_poles(kind, delta):
                rows.append([label, _fmt(delta), f"AXIS-{p.sheet.value}", "0", _fmt(p.z.imag), _fmt(abs(p.residue))])
            return rows
        dec = decompose(kind, delta)
        parts = dec.contributions_at(0.0)
        cols = [abs(parts.get(k, 0.0)) for k in ("LBS", "UBS", "UP-II", "UP-III", "LBC", "MBC", "UBC")]
        total = abs(dec.completeness() - 1.0)
        return [[label, _fmt(delta)] + [_fmt(v) for v in cols] + [_fmt(total)]]
    except (PoleSearchError, QuadratureError, RecursionError_) as exc:
        raise NumericalError(f"scan point {label} delta={delta}: {exc}") from None


_SCAN_HEADERS = {
    "selfenergy": ["point", "delta", "delta_omega", "gamma", "divergent"],
    "poles": ["point", "delta", "pole", "re_z", "im_z", "abs_residue"],
    "contributions": ["point", "delta", "LBS", "UBS", "UP_II", "UP_III", "LBC", "MBC", "UBC", "completeness_error"],
}


def cmd_scan(args) -> int:
    rc = load_config(args.config, need_time=False)
    start, stop, count = _parse_range(args.range)
    if args.variable == "delta":
        count = 41 if count is None else count
        if count < 1 or stop < start:
            raise ConfigError("--range: empty range")
        values = np.linspace(start, stop, count) if count > 1 else np.array([start])
        payloads = [(args.quantity, _kind_for(rc), float(v), str(i)) for i, v in enumerate(values)]
    else:
        if rc.emitters.count != 2:
            raise ConfigError("--variable n needs a two-emitter configuration")
        lo, hi = int(math.ceil(start)), int(math.floor(stop))
        if hi < lo:
            raise ConfigError("--range: empty range")
        d = np.subtract(rc.emitters.positions[1], rc.emitters.positions[0])
        unit = d // np.gcd.reduce(np.abs(d))
        payloads = []
        for n in range(lo, hi + 1):
            n12 = int(n * unit[0]) if rc.bath.dim == 1 else tuple(int(v) for v in n * unit)
            payloads.append((args.quantity, _kind_for(rc, n12), rc.emitters.delta, f"n={n}"))
    if args.quantity != "selfenergy" and payloads and not payloads[0][1].closed_form:
        raise ConfigError("--quantity: poles and contributions are not available for FourB")
    threads = args.threads or os.cpu_count() or 1
    if threads > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_scan_point, payloads))
    else:
        results = [_scan_point(p) for p in payloads]
    out = _out_dir(rc, args.out)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"scan_{args.quantity}.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_SCAN_HEADERS[args.quantity])
        for rows in results:
            w.writerows(rows)
    print(f"wrote {path}")
    return 0


def cmd_crosscheck(args) -> int:
    rc = load_config(args.config)
    if len(rc.methods) < 2:
        raise ConfigError("evolution.method: crosscheck needs at least two methods")
    if "resolvent" in rc.methods:
        _resolvent_ready(rc)
    results = {m: _run_method(rc, m, False) for m in rc.methods}
    ref = rc.methods[0]
    t_ref, c_ref = results[ref][0], results[ref][1]
    lines, worst = [], 0.0
    for m in rc.methods[1:]:
        t, c = results[m][0], results[m][1]
        n = min(len(t), len(t_ref))
        if not np.allclose(t[:n], t_ref[:n], rtol=0, atol=1e-9 * max(1.0, rc.t_max)):
            raise NumericalError(f"methods {ref} and {m} sample different times")
        dev = float(np.max(np.abs(c[:n] - c_ref[:n])))
        worst = max(worst, dev)
        verdict = "pass" if dev < rc.tolerance else "FAIL"
        lines.append(f"{ref} vs {m}: max |dC| = {dev:.3e} over t in [0, {t[n - 1]:g}] tolerance {rc.tolerance:g} {verdict}")
    out = _out_dir(rc, args.out)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "crosscheck.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    if worst >= rc.tolerance and args.strict:
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lqed", description="Quantum emitters in tight-binding lattices.")
    parser.add_argument("--version", action="version", version=f"lqed {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides LQED_OUT and the config)")
    common.add_argument("--threads", type=int, default=None, help="worker processes for scans")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one simulation or analytic evaluation")
    p.add_argument("config")
    p.add_argument("--strict", action="store_true", help="abort on lattice wraparound")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scan", parents=[common], help="scan analytic quantities over detuning or distance")
    p.add_argument("config")
    p.add_argument("--quantity", choices=QUANTITIES, required=True)
    p.add_argument("--range", required=True, help="START:STOP[:COUNT]")
    p.add_argument("--variable", choices=("delta", "n"), default="delta")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("crosscheck", parents=[common], help="compare two or more methods")
    p.add_argument("config")
    p.add_argument("--strict", action="store_true", help="exit 2 when the tolerance is exceeded")
    p.set_defaults(func=cmd_crosscheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    raw = list(sys.argv[1:] if argv is None else argv)
    # accept "--range -6:6:13" as well as "--range=-6:6:13"
    argv, i = [], 0
    while i < len(raw):
        if raw[i] == "--range" and i + 1 < len(raw):
            argv.append(f"--range={raw[i + 1]}")
            i += 2
        else:
            argv.append(raw[i])
            i += 1
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, WraparoundError, PoleSearchError, QuadratureError, RecursionError_, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
