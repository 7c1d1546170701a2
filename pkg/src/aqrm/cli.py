"""Command-line front end.

Every subcommand resolves a :class:`RunConfig` (defaults, then ``--config``,
then command-line overrides), writes it to ``<out>/config.json`` and stamps
each CSV with ``# config-hash: <sha256>`` of its canonical JSON form.

Exit codes: 0 success, 2 configuration error, 3 degenerate fit, 4 quantum
solver failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, fluctuations, meanfield, quantum, wigner
from .errors import DegenerateSteadyState, FitDegenerate, InvalidParams, NoSolution, TruncationUnsafe
from .lines import Line, dashed_line, epsilon_min_ray, g_grid, ray, tangent_line
from .params import ModelParams, params_from_dict, renormalize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIT = 3
EXIT_QUANTUM = 4

COMMANDS = ("phase-diagram", "line-scan", "exponents", "trajectory", "basin", "quantum")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class SweepSpec:
    """Either a 2-D grid over ``(g_r, g_cr)`` or a 1-D scan along a line.

    A line is given as ``{"slope", "intercept"}`` or by name: ``"dashed"``,
    ``"eps_min"``, ``"ray:<eps>"`` or ``"tangent:<eps>"``.
    """

    kind: str = "grid"
    g_r: tuple = (0.0, 2.5)
    g_cr: tuple = (0.0, 2.5)
    g: tuple = (0.01, 3.0)
    resolution: tuple = (200, 200)
    log: bool = False
    line: object = None
    kappa_bar: float = 0.5
    eta: float | None = None

    def validate(self) -> None:
        if self.kind not in ("grid", "line"):
            raise ConfigError(f"sweep kind must be 'grid' or 'line', got {self.kind!r}")
        ranges = (self.g_r, self.g_cr) if self.kind == "grid" else (self.g,)
        res = tuple(self.resolution)
        if len(res) < len(ranges):
            raise ConfigError("one resolution per axis")
        for (lo, hi), n in zip(ranges, res):
            if not hi > lo:
                raise ConfigError(f"empty range [{lo}, {hi}]")
            if int(n) < 2:
                raise ConfigError("resolution must be >= 2")
            if self.log and lo <= 0:
                raise ConfigError("log range needs a positive start")
        if not self.kappa_bar >= 0:
            raise ConfigError("kappa_bar >= 0")
        if self.eta is not None and not self.eta > 0:
            raise ConfigError("eta > 0")
        if self.kind == "line":
            resolve_line(self.line, self.kappa_bar)

    def axes(self):
        if self.kind == "grid":
            return (g_grid(*self.g_r, int(self.resolution[0]), self.log),
                    g_grid(*self.g_cr, int(self.resolution[1]), self.log))
        return (g_grid(*self.g, int(self.resolution[0]), self.log),)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "g_r": list(self.g_r),
            "g_cr": list(self.g_cr),
            "g": list(self.g),
            "resolution": list(self.resolution),
            "log": self.log,
            "line": self.line,
            "kappa_bar": self.kappa_bar,
            "eta": self.eta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown sweep keys {sorted(extra)}")
        spec = cls(**d)
        for name in ("g_r", "g_cr", "g", "resolution"):
            setattr(spec, name, tuple(getattr(spec, name)))
        return spec


def resolve_line(spec, kappa_bar: float) -> Line:
    if spec is None:
        raise ConfigError("line sweep needs a 'line'")
    if isinstance(spec, dict):
        try:
            return Line.from_dict(spec)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad line {spec!r}: {exc}") from exc
    if not isinstance(spec, str):
        raise ConfigError(f"bad line {spec!r}")
    name, _, arg = spec.partition(":")
    try:
        if name == "dashed":
            return dashed_line()
        if name == "eps_min":
            return epsilon_min_ray(kappa_bar)
        if name == "ray":
            return ray(float(arg))
        if name == "tangent":
            return tangent_line(float(arg), kappa_bar)[0]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown line {spec!r}")


def _default_sections(command: str) -> dict:
    if command == "phase-diagram":
        return {"sweep": SweepSpec().to_dict()}
    if command == "line-scan":
        return {"sweep": SweepSpec(kind="line", line="dashed", g=(0.01, 3.0), resolution=(600,)).to_dict()}
    if command == "exponents":
        return {"kappa_bar": 0.5, "targets": default_exponent_targets(),
                "window": [1e-4, 1e-2], "n_samples": 16}
    if command == "trajectory":
        return {"model": {"g_r": 0.5, "g_cr": 0.8, "kappa_bar": 0.5},
                "initial": [{"re": 0.1, "im": 0.0}], "n_random": 0, "radius": 1.0}
    if command == "basin":
        return {"model": {"g_r": 0.6, "g_cr": 1.854, "kappa_bar": 0.5},
                "re": [-1.5, 1.5, 31], "im": [-1.5, 1.5, 31]}
    if command == "quantum":
        return {"model": {"g_r": 0.3, "g_cr": 0.488, "kappa_bar": 0.5, "eta": 50.0},
                "dim_fock": 120, "wigner": {"n_points": 121, "extent": None},
                "check_gap": False}
    raise ConfigError(f"unknown command {command!r}")


def _default_solver() -> dict:
    return {"t_max": 300.0, "rtol": 1e-9, "atol": 1e-12, "adiabatic": True, "eta": None,
            "sz_sign": -1, "step": 0.02}


@dataclass
class RunConfig:
    """Everything needed to reproduce one run. Round-trips through JSON."""

    command: str
    sections: dict = field(default_factory=dict)
    solver: dict = field(default_factory=_default_solver)
    seed: int = 0

    @classmethod
    def default(cls, command: str) -> "RunConfig":
        return cls(command, _default_sections(command))

    def to_dict(self) -> dict:
        return {"command": self.command, "seed": self.seed, "solver": dict(self.solver), **self.sections}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = copy.deepcopy(d)
        command = d.pop("command", None)
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        seed = d.pop("seed", 0)
        solver = _default_solver()
        solver.update(d.pop("solver", {}))
        if not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return cls(command, d, solver, seed)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc

    def merged(self, overrides: dict) -> "RunConfig":
        d = self.to_dict()
        for key, value in overrides.items():
            d[key] = _deep_merge(d.get(key), value) if isinstance(value, dict) else value
        return RunConfig.from_dict(d)

    @property
    def hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _deep_merge(base, new: dict) -> dict:
    out = dict(base or {})
    for k, v in new.items():
        out[k] = _deep_merge(out.get(k), v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


# ---------------------------------------------------------------------------
# output


def fmt(value) -> str:
    """Locale-independent, full-precision field formatting; ``None`` is an empty field."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows, config: RunConfig) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config-hash: {config.hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, obj, config: RunConfig) -> Path:
    payload = {"config_hash": config.hash, **_json_safe(obj)} if isinstance(obj, dict) else obj
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def pmap(fn, items, threads: int):
    """Ordered map, optionally over a process pool."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


# ---------------------------------------------------------------------------
# phase diagram


def _phase_row(args):
    g_r, g_cr, kb = args
    phase = meanfield.classify_phase(g_r, g_cr, kb).phase
    a_np = float(meanfield.np_stability_A_gr(g_r, g_cr, kb))
    s_z = x = y = a_sp = None
    if g_r > 0:
        try:
            sol = meanfield.sp_solution(g_r, g_cr / g_r, kb, 1)
            s_z, x, y, a_sp = sol.s_z, sol.x_bar, sol.y_bar, sol.stability_A
        except NoSolution:
            pass
    return [g_r, g_cr, kb, phase, s_z, x, y, a_np, a_sp]


def boundary_points(gr_axis, gcr_axis, kb) -> list[tuple]:
    """Sub-grid crossings of the NP stability boundary and of the SP existence boundary.

    NP crossings interpolate ``A_np`` linearly along grid edges. SP crossings
    interpolate the existence discriminant where it changes sign, else the
    edge midpoint.
    """
    GR, GCR = np.meshgrid(gr_axis, gcr_axis, indexing="ij")
    A = meanfield.np_stability_A_gr(GR, GCR, kb)
    D = meanfield._discriminant(GR, GCR, kb)
    sp = meanfield.classify_grid(GR, GCR, kb)
    has_sp = (sp == "SP") | (sp == "Bistable")
    out = []

    def edges(axis):
        sl0 = (slice(None, -1), slice(None)) if axis == 0 else (slice(None), slice(None, -1))
        sl1 = (slice(1, None), slice(None)) if axis == 0 else (slice(None), slice(1, None))
        return sl0, sl1

    for axis in (0, 1):
        s0, s1 = edges(axis)
        a0, a1 = A[s0], A[s1]
        for i, j in zip(*np.nonzero(np.sign(a0) * np.sign(a1) < 0)):
            t = a0[i, j] / (a0[i, j] - a1[i, j])
            p0 = (GR[s0][i, j], GCR[s0][i, j])
            p1 = (GR[s1][i, j], GCR[s1][i, j])
            out.append(("np_stability", p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])))
        h0, h1 = has_sp[s0], has_sp[s1]
        d0, d1 = D[s0], D[s1]
        for i, j in zip(*np.nonzero(h0 != h1)):
            t = d0[i, j] / (d0[i, j] - d1[i, j]) if d0[i, j] * d1[i, j] < 0 else 0.5
            p0 = (GR[s0][i, j], GCR[s0][i, j])
            p1 = (GR[s1][i, j], GCR[s1][i, j])
            out.append(("sp_existence", p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])))
    return sorted(out)


def cmd_phase_diagram(cfg: RunConfig, out: Path, threads: int) -> dict:
    spec = SweepSpec.from_dict(cfg.sections["sweep"])
    spec.validate()
    if spec.kind != "grid":
        raise ConfigError("phase-diagram needs a grid sweep")
    gr_axis, gcr_axis = spec.axes()
    kb = spec.kappa_bar
    pts = [(float(a), float(b), kb) for a in gr_axis for b in gcr_axis]
    rows = pmap(_phase_row, pts, threads)
    write_csv(out / "phase_diagram.csv",
              ["g_r", "g_cr", "kappa_bar", "phase", "s_z_sp", "x_bar", "y_bar", "A_np", "A_sp"], rows, cfg)
    write_csv(out / "boundaries.csv", ["kind", "g_r", "g_cr"], boundary_points(gr_axis, gcr_axis, kb), cfg)
    counts = {}
    for r in rows:
        counts[r[3]] = counts.get(r[3], 0) + 1
    tri = meanfield.tricritical_points(kb)
    tri_doc = {"kappa_bar": kb, "points": [{"g_r": p[0], "g_cr": p[1]} for p in tri or ()],
               "cell_counts": dict(sorted(counts.items()))}
    write_json(out / "tricritical.json", tri_doc, cfg)
    return tri_doc


# ---------------------------------------------------------------------------
# line scan


def _total_occupation(n_fluct, alpha_bar, eta):
    if eta is None or n_fluct is None or not math.isfinite(n_fluct):
        return None
    return n_fluct + eta * abs(alpha_bar) ** 2


def _scan_row(args):
    g, line, kb, eta = args
    g_r, g_cr = line.point(g)
    phase = meanfield.classify_phase(g_r, g_cr, kb).phase
    npf = fluctuations.np_fluctuations(g_r, g_cr, kb)
    np_stable = npf.eigenvalues[0].real < 0
    row = {"g": g, "g_r": g_r, "g_cr": g_cr, "phase": phase,
           "alpha_np": 0.0 if np_stable else None, "alpha_sp": None,
           "re_l_np": npf.eigenvalues[0].real, "im_l_np": npf.eigenvalues[0].imag,
           "re_l_sp": None, "im_l_sp": None,
           "n_np": npf.excitation_number if np_stable else None, "n_sp": None,
           "n_total_np": None, "n_total_sp": None}
    row["n_total_np"] = _total_occupation(row["n_np"], 0.0, eta)
    sweep = []
    if np_stable:
        sweep.append([g, "NP", npf.eigenvalues[0].real, npf.eigenvalues[0].imag, npf.adr, npf.excitation_number])
    if g_r > 0:
        try:
            sol = meanfield.sp_solution(g_r, g_cr / g_r, kb, 1)
            spf = fluctuations.sp_fluctuations(g_r, g_cr, kb)
        except NoSolution:
            sol = None
        if sol is not None:
            l = spf.eigenvalues[0]
            row["re_l_sp"], row["im_l_sp"] = l.real, l.imag
            if l.real < 0:
                row["alpha_sp"] = abs(sol.alpha_bar)
                row["n_sp"] = spf.excitation_number
                row["n_total_sp"] = _total_occupation(spf.excitation_number, sol.alpha_bar, eta)
                sweep.append([g, "SP", l.real, l.imag, spf.adr, spf.excitation_number])
    return row, sweep


LINE_SCAN_HEADER = ["g", "g_r", "g_cr", "phase", "alpha_np", "alpha_sp", "re_l_np", "im_l_np",
                    "re_l_sp", "im_l_sp", "n_np", "n_sp", "n_total_np", "n_total_sp"]


def cmd_line_scan(cfg: RunConfig, out: Path, threads: int) -> dict:
    spec = SweepSpec.from_dict(cfg.sections["sweep"])
    if cfg.solver.get("eta") is not None and spec.eta is None:
        spec.eta = float(cfg.solver["eta"])
    spec.kind = "line"
    spec.validate()
    line = resolve_line(spec.line, spec.kappa_bar)
    (gs,) = spec.axes()
    results = pmap(_scan_row, [(float(g), line, spec.kappa_bar, spec.eta) for g in gs], threads)
    write_csv(out / "line_scan.csv", LINE_SCAN_HEADER,
              ([r[k] for k in LINE_SCAN_HEADER] for r, _ in results), cfg)
    write_csv(out / "sweep.csv", ["g", "phase", "re_l_plus", "im_l_plus", "adr", "n_excitation"],
              (row for _, rows in results for row in rows), cfg)
    trans = meanfield.line_transitions(line, spec.kappa_bar, g_min=max(spec.g[0], 1e-3), g_max=spec.g[1])
    doc = {"line": line.to_dict(), "kappa_bar": spec.kappa_bar,
           "transitions": [{"g": t.g, "kind": t.kind, "epsilon": t.epsilon} for t in trans]}
    write_json(out / "transitions.json", doc, cfg)
    return doc


# ---------------------------------------------------------------------------
# exponents

# (boundary, side) -> phase whose ADR and excitation number are fitted
_FIT_PHASE = {
    ("g_c_minus", "below"): "NP",
    ("g_c_minus", "above"): "SP",
    ("g_c_plus", "above"): "NP",
    ("g_c_plus", "below"): "NP",
    ("g_eps_min", "below"): "SP",
    ("g_eps_max", "above"): "SP",
    ("touch", "below"): "NP",
    ("touch", "above"): "NP",
}


def default_exponent_targets() -> list[dict]:
    targets = [
        {"line": "dashed", "boundary": "g_c_minus", "side": "below"},
        {"line": "dashed", "boundary": "g_c_minus", "side": "above"},
        {"line": "dashed", "boundary": "g_c_plus", "side": "above"},
        {"line": "dashed", "boundary": "g_eps_min", "side": "below"},
    ]
    for side in ("below", "above"):
        targets.append({"line": "eps_min", "boundary": "touch", "side": side})
    for eps in (0.5, 2.0, 0.8):
        for side in ("below", "above"):
            targets.append({"line": f"tangent:{eps}", "boundary": "touch", "side": side})
    return targets


def locate_boundary(line: Line, boundary: str, line_spec, kb: float) -> float:
    if boundary == "touch":
        if line_spec == "eps_min":
            return meanfield.tricritical_points(kb)[0][0]
        if isinstance(line_spec, str) and line_spec.startswith("tangent:"):
            return tangent_line(float(line_spec.split(":", 1)[1]), kb)[1]
        raise ConfigError("boundary 'touch' needs an 'eps_min' or 'tangent:<eps>' line")
    hits = [t.g for t in meanfield.line_transitions(line, kb) if t.kind == boundary]
    if not hits:
        raise FitDegenerate(f"no {boundary} crossing on line {line.name or line.to_dict()}")
    return hits[0]


def run_exponent_target(target: dict, kb: float, window, n: int) -> list[dict]:
    boundary, side = target.get("boundary"), target.get("side")
    if (boundary, side) not in _FIT_PHASE:
        raise ConfigError(f"unsupported boundary/side {boundary!r}/{side!r}")
    line = resolve_line(target.get("line"), kb)
    g_c = locate_boundary(line, boundary, target.get("line"), kb)
    phase = target.get("phase", _FIT_PHASE[(boundary, side)])
    out = []
    for quantity, label in (("adr", "nu_adr"), ("n", "nu_x")):
        fit = fluctuations.scaling_fit(line, kb, g_c, side, phase, quantity, tuple(window), n)
        out.append({**fit.to_dict(), "exponent": label, "quantity": quantity, "phase": phase,
                    "boundary": boundary, "line": target.get("line")})
    return out


def cmd_exponents(cfg: RunConfig, out: Path, threads: int) -> dict:
    s = cfg.sections
    kb = float(s.get("kappa_bar", 0.5))
    window = s.get("window", [1e-4, 1e-2])
    n = int(s.get("n_samples", 16))
    if len(window) != 2 or not 0 < window[0] < window[1]:
        raise ConfigError("window must be [lo, hi] with 0 < lo < hi")
    fits = []
    for target in s.get("targets", []):
        fits.extend(run_exponent_target(target, kb, window, n))
    doc = {"kappa_bar": kb, "fits": fits}
    write_json(out / "exponents.json", doc, cfg)
    return doc


# ---------------------------------------------------------------------------
# trajectories and basins


def _model_renormalized(section: dict):
    try:
        if "g_r" in section:
            return float(section["g_r"]), float(section["g_cr"]), float(section["kappa_bar"])
        r = renormalize(params_from_dict(section))
        return r.g_r, r.g_cr, r.kappa_bar
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad model block: {exc}") from exc


def _solver_args(solver: dict):
    adiabatic = bool(solver.get("adiabatic", True))
    eta = solver.get("eta")
    if not adiabatic and eta is None:
        raise ConfigError("full (non-adiabatic) integration needs --eta")
    if not float(solver["t_max"]) > 0:
        raise ConfigError("t_max > 0")
    sz = int(solver.get("sz_sign", -1))
    if sz not in (-1, 1):
        raise ConfigError("sz_sign must be -1 or +1")
    return adiabatic, (None if eta is None else float(eta)), sz


def _run_trajectory(args):
    start, g_r, g_cr, kb, solver = args
    adiabatic, eta, sz = _solver_args(solver)
    init = dynamics.initial_state(complex(start[0], start[1]), g_r, g_cr, start[2] if len(start) > 2 else sz)
    return dynamics.integrate(init, g_r, g_cr, kb, float(solver["t_max"]), eta=eta, adiabatic=adiabatic,
                              rtol=float(solver["rtol"]), atol=float(solver["atol"]),
                              step=float(solver.get("step", 0.02)),
                              n_samples=int(solver.get("n_samples", 2001)))


def sample_initial(rng: np.random.Generator, n: int, radius: float) -> list[tuple]:
    """Uniform points in the disk ``|alpha_bar| < radius``."""
    r = radius * np.sqrt(rng.random(n))
    phi = 2 * np.pi * rng.random(n)
    return [(float(a), float(b)) for a, b in zip(r * np.cos(phi), r * np.sin(phi))]


def cmd_trajectory(cfg: RunConfig, out: Path, threads: int) -> dict:
    s = cfg.sections
    g_r, g_cr, kb = _model_renormalized(s["model"])
    _solver_args(cfg.solver)
    starts = []
    for ic in s.get("initial", []):
        start = (float(ic["re"]), float(ic.get("im", 0.0)))
        starts.append(start + ((int(ic["sz_sign"]),) if "sz_sign" in ic else ()))
    n_random = int(s.get("n_random", 0))
    if n_random:
        starts += sample_initial(np.random.default_rng(cfg.seed), n_random, float(s.get("radius", 1.0)))
    if not starts:
        raise ConfigError("no initial conditions")
    trajs = pmap(_run_trajectory, [(st, g_r, g_cr, kb, cfg.solver) for st in starts], threads)
    summary = []
    write_full = bool(s.get("write_trajectories", True))
    for i, (st, tr) in enumerate(zip(starts, trajs)):
        if write_full:
            write_csv(out / f"trajectory_{i:04d}.csv", ["t_bar", "re_alpha", "im_alpha", "s_x", "s_y", "s_z"],
                      ([t, a.real, a.imag, *sp] for t, a, sp in zip(tr.t_bar, tr.alpha_bar, tr.spin)), cfg)
        summary.append([i, st[0], st[1], tr.attractor, tr.spin_norm_drift(), tr.note])
    write_csv(out / "attractors.csv", ["index", "re_alpha0", "im_alpha0", "attractor", "spin_norm_drift", "note"],
              summary, cfg)
    counts = {}
    for row in summary:
        counts[row[3]] = counts.get(row[3], 0) + 1
    doc = {"counts": dict(sorted(counts.items())), "unresolved": counts.get(dynamics.UNRESOLVED, 0),
           "n": len(summary)}
    write_json(out / "trajectory_summary.json", doc, cfg)
    return doc


def _axis(spec, name):
    try:
        lo, hi, n = spec
        return g_grid(float(lo), float(hi), int(n)) if hi > lo else None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} axis must be [lo, hi, n] with n >= 2: {exc}") from exc


def _basin_row(args):
    im, re_axis, g_r, g_cr, kb, solver = args
    solver = {**solver, "n_samples": 201}
    return [_run_trajectory(((float(re), float(im)), g_r, g_cr, kb, solver)).attractor for re in re_axis]


def cmd_basin(cfg: RunConfig, out: Path, threads: int) -> dict:
    s = cfg.sections
    g_r, g_cr, kb = _model_renormalized(s["model"])
    _solver_args(cfg.solver)
    re_axis, im_axis = _axis(s["re"], "re"), _axis(s["im"], "im")
    if re_axis is None or im_axis is None:
        raise ConfigError("empty basin axis")
    labels = pmap(_basin_row, [(im, re_axis, g_r, g_cr, kb, cfg.solver) for im in im_axis], threads)
    rows = [[re, im, lab] for im, row in zip(im_axis, labels) for re, lab in zip(re_axis, row)]
    write_csv(out / "basin.csv", ["re_alpha0", "im_alpha0", "attractor"], rows, cfg)
    counts = {}
    for r in rows:
        counts[r[2]] = counts.get(r[2], 0) + 1
    doc = {"counts": dict(sorted(counts.items())), "unresolved": counts.get(dynamics.UNRESOLVED, 0)}
    write_json(out / "basin_summary.json", doc, cfg)
    return doc


# ---------------------------------------------------------------------------
# quantum


def _model_params(section: dict, eta_override) -> ModelParams:
    section = dict(section)
    if eta_override is not None:
        if "eta" in section or "g_r" in section:
            section["eta"] = eta_override
        else:
            section["Omega"] = float(eta_override) * float(section.get("omega0", 1.0))
    try:
        return params_from_dict(section)
    except InvalidParams as exc:
        raise ConfigError(str(exc)) from exc


def cmd_quantum(cfg: RunConfig, out: Path, threads: int) -> dict:
    s = cfg.sections
    p = _model_params(s["model"], cfg.solver.get("eta"))
    N = int(s.get("dim_fock", 120))
    if N < 2:
        raise ConfigError("dim_fock >= 2")
    wcfg = s.get("wigner", {}) or {}
    L = quantum.liouvillian(p, N)
    state = quantum.steady_state(L, N, check_gap=bool(s.get("check_gap", False)))
    block, weight = quantum.project_spin_down(state)
    n_points = int(wcfg.get("n_points", 121))
    extent = wcfg.get("extent")
    axis = np.linspace(-extent, extent, n_points) if extent else None
    grid = wigner.wigner(block, axis, axis, n_points=n_points)
    write_csv(out / "wigner.csv", ["re_alpha", "im_alpha", "w"],
              ([x, y, grid.values[j, i]] for j, y in enumerate(grid.im_axis) for i, x in enumerate(grid.re_axis)),
              cfg)
    d = state.diagnostics
    r = renormalize(p)
    doc = {
        "trace": d["trace"],
        "min_eig": d["min_eig"],
        "top_fock_pop": d["top_fock_pop"],
        "n_expect": d["n_expect"],
        "gap_estimate": d["gap_estimate"],
        "hermiticity_error": d["hermiticity_error"],
        "spin_down_weight": weight,
        "modality": grid.modality(),
        "maxima": [list(m) for m in grid.maxima()],
        "wigner_grid": grid.header(),
        "wigner_integral": grid.integral(),
        "mean_field_phase": meanfield.classify_phase(r.g_r, r.g_cr, r.kappa_bar).phase,
        "eta": p.eta,
        "dim_fock": N,
    }
    write_json(out / "diagnostics.json", doc, cfg)
    return doc


HANDLERS = {
    "phase-diagram": cmd_phase_diagram,
    "line-scan": cmd_line_scan,
    "exponents": cmd_exponents,
    "trajectory": cmd_trajectory,
    "basin": cmd_basin,
    "quantum": cmd_quantum,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON RunConfig file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, help="RNG seed for sampled initial conditions (u64)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--t-max", type=float, dest="t_max")
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)
    common.add_argument("--adiabatic", action=argparse.BooleanOptionalAction, default=None,
                        help="integrate the cavity-only equation (default) or the full system")
    common.add_argument("--eta", type=float, help="frequency ratio Omega/omega0")
    common.add_argument("--sz-sign", type=int, choices=(-1, 1), dest="sz_sign")
    common.add_argument("--g-r", type=float, dest="g_r")
    common.add_argument("--g-cr", type=float, dest="g_cr")
    common.add_argument("--kappa-bar", type=float, dest="kappa_bar")
    common.add_argument("--gamma-spin", type=float, dest="gamma_spin", help="spin damping rate (absolute)")
    common.add_argument("--dim-fock", type=int, dest="dim_fock")
    common.add_argument("--print-config", action="store_true", help="print the resolved config and exit")

    parser = argparse.ArgumentParser(prog="aqrm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.default(ns.command)
    if ns.config is not None:
        try:
            loaded = RunConfig.from_json(ns.config.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if loaded.command != ns.command:
            raise ConfigError(f"config is for {loaded.command!r}, not {ns.command!r}")
        cfg = cfg.merged(loaded.to_dict())
    over: dict = {}
    solver = {k: getattr(ns, k) for k in ("t_max", "rtol", "atol", "adiabatic", "eta", "sz_sign")
              if getattr(ns, k) is not None}
    if ns.eta is not None and "adiabatic" not in solver and ns.command in ("trajectory", "basin"):
        solver["adiabatic"] = False
    if solver:
        over["solver"] = solver
    if ns.seed is not None:
        over["seed"] = ns.seed
    model = {k: getattr(ns, k) for k in ("g_r", "g_cr", "kappa_bar", "gamma_spin") if getattr(ns, k) is not None}
    if ns.command in ("phase-diagram", "line-scan"):
        if "kappa_bar" in model:
            over["sweep"] = {"kappa_bar": model.pop("kappa_bar")}
        if ns.command == "line-scan" and ns.eta is not None:
            over.setdefault("sweep", {})["eta"] = ns.eta
    elif ns.command == "exponents":
        if "kappa_bar" in model:
            over["kappa_bar"] = model.pop("kappa_bar")
    elif model:
        over["model"] = model
    if ns.dim_fock is not None:
        over["dim_fock"] = ns.dim_fock
    return cfg.merged(over) if over else cfg


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        if ns.print_config:
            print(cfg.to_json())
            return EXIT_OK
        if ns.threads < 1:
            raise ConfigError("--threads >= 1")
        ns.out.mkdir(parents=True, exist_ok=True)
        (ns.out / "config.json").write_text(cfg.to_json() + "\n", encoding="utf-8")
        doc = HANDLERS[ns.command](cfg, ns.out, ns.threads)
    except (ConfigError, InvalidParams) as exc:
        print(f"aqrm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitDegenerate as exc:
        print(f"aqrm: degenerate fit: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (TruncationUnsafe, DegenerateSteadyState) as exc:
        print(f"aqrm: quantum solver failure: {exc}", file=sys.stderr)
        return EXIT_QUANTUM
    print(json.dumps(_json_safe(doc), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
