"""Batch pipeline driver: config ingestion, deterministic runs, artifact export.

A scene config bundles geometry, sample timing, platform motion, the
illumination pattern spec, the target description and a list of
reconstruction requests under one master seed. Subcommands drive single
stages so each algorithm is independently scriptable; ``run`` executes the
full pipeline (synthesize, spectral survey, reconstructions). Every
invocation writes a manifest listing each produced file with its SHA-256
content hash, per-stage timings and the computed metrics.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O failure.
"""

import argparse
import contextlib
import copy
import csv
import dataclasses
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass

import numpy as np
import scipy
from PIL import Image

from . import __version__
from .fieldgrid import ComplexGrid, SystemGeometry, desk_geometry, write_cgrd
from .forward import MotionConfig, TimingConfig, synthesize_echo, write_cech
from .patterns import (
    flat_schedule,
    hadamard_patterns,
    random_speckle_patterns,
    save_schedule,
)
from .recon import (
    CompensationSpec,
    complex_correlation,
    first_order_correlate,
    kspace,
    kspace_argmax,
    reconstruct_discrete_mode,
    reconstruct_type1,
    reconstruct_type2,
    residual_energy,
    save_recon_image,
    support_f1,
)
from .spectral import detect_frequencies, spectrogram
from .targets import (
    DiscreteTargetSet,
    PlateTarget,
    VibrationComponent,
    complex_target_snapshot,
    plate_eigenfrequency,
    single_mode_snapshot,
    target_from_json,
    target_to_json,
)
from . import presets

_CODINGS = ("hadamard", "flat", "speckle")
_METHODS = ("static", "discrete", "type1", "type2")
PRESET_NAMES = ("table2_discrete", "table3_plate_type1")


class StageError(Exception):
    """Pipeline failure tagged with the stage and parameter at fault."""

    def __init__(self, stage, parameter, message, exit_code):
        super().__init__(message)
        self.stage = stage
        self.parameter = parameter
        self.exit_code = exit_code

    def to_json(self):
        return json.dumps(
            {
                "stage": self.stage,
                "parameter": self.parameter,
                "error": str(self),
                "exit_code": self.exit_code,
            },
            sort_keys=True,
        )


def _require(cond, parameter, message):
    if not cond:
        raise ValueError(f"{parameter}: {message}")


def _distinct_modes(target):
    """Scene mode table: (components, supporting cells or None) per mode.

    For discrete scenes modes are distinct component tuples in scatterer
    order, which gives ground-truth support for the F1 metric. Plate modes
    are taken as declared; their support is a continuous shape, so None.
    """
    if isinstance(target, DiscreteTargetSet):
        table = []
        for s in target.scatterers:
            for comps, cells in table:
                if comps == s.components:
                    cells.append((s.row, s.col))
                    break
            else:
                table.append((s.components, [(s.row, s.col)]))
        return table
    return [(m.components, None) for m in target.modes]


def _request_components(req, mode_table):
    """Compensation components for a discrete request, resolved or inline."""
    if "components" in req:
        return tuple(
            VibrationComponent(c["amplitude"], c["frequency"], c.get("phase", 0.0))
            for c in req["components"]
        ), None
    k = req["mode_index"]
    comps, cells = mode_table[k]
    return comps, cells


def _validate_request(i, req, mode_table, timing):
    param = f"recon[{i}]"
    method = req.get("method")
    _require(method in _METHODS, f"{param}.method", f"must be one of {_METHODS}")
    if method == "discrete":
        has_inline = "components" in req
        has_index = "mode_index" in req
        _require(
            has_inline or has_index,
            param,
            "needs 'components' or a 'mode_index' into the scene mode table",
        )
        if has_index:
            k = req["mode_index"]
            _require(
                isinstance(k, int) and 0 <= k < len(mode_table),
                f"{param}.mode_index",
                f"must index the {len(mode_table)} scene modes",
            )
        if has_inline:
            for c in req["components"]:
                VibrationComponent(c["amplitude"], c["frequency"], c.get("phase", 0.0))
        _require(req.get("filter_k", 350.0) > 0, f"{param}.filter_k", "must be > 0")
    elif method in ("type1", "type2"):
        key = "N_t" if method == "type1" else "N_i"
        n = req.get(key)
        _require(isinstance(n, int) and n >= 1, f"{param}.{key}", "must be an int >= 1")
        t0 = req.get("t0", 0)
        t0s = t0 if isinstance(t0, list) else [t0]
        _require(
            method == "type1" or not isinstance(t0, list),
            f"{param}.t0",
            "t0 sweeps apply to type1 only",
        )
        for v in t0s:
            _require(isinstance(v, int) and 0 <= v < timing.N_s, f"{param}.t0",
                     "every offset must be an int in [0, N_s)")
        if "mode_index" in req:
            k = req["mode_index"]
            _require(
                isinstance(k, int) and 0 <= k < len(mode_table),
                f"{param}.mode_index",
                f"must index the {len(mode_table)} scene modes",
            )


@dataclass(frozen=True)
class SceneConfig:
    """Everything one deterministic pipeline run needs.

    geometry/timing/motion are typed; the pattern spec, target description
    and reconstruction requests stay as JSON-shaped dicts so that
    parse(serialize(config)) == config holds exactly.
    """

    geometry: SystemGeometry
    timing: TimingConfig
    motion: MotionConfig
    patterns: dict
    target: dict
    recon: tuple
    seed: int
    spectral: dict = dataclasses.field(default_factory=dict)
    out_dir: str = "."

    def __post_init__(self):
        object.__setattr__(self, "patterns", dict(self.patterns))
        object.__setattr__(self, "target", copy.deepcopy(dict(self.target)))
        object.__setattr__(self, "spectral", dict(self.spectral))
        object.__setattr__(self, "recon", tuple(dict(r) for r in self.recon))
        _require(
            isinstance(self.seed, int) and 0 <= self.seed < 2**64,
            "seed", "must be an unsigned 64-bit int",
        )

        p = self.patterns
        _require(p.get("coding") in _CODINGS, "patterns.coding",
                 f"must be one of {_CODINGS}")
        side = p.get("side")
        _require(isinstance(side, int) and side >= 1, "patterns.side",
                 "must be an int >= 1")
        _require(p.get("samples_per_pattern", 1) >= 1,
                 "patterns.samples_per_pattern", "must be >= 1")
        _require(p.get("cycles", 1) >= 1, "patterns.cycles", "must be >= 1")
        if "pitch" in p:
            _require(p["pitch"] > 0, "patterns.pitch", "must be positive")
        if p["coding"] == "hadamard":
            n = side * side
            _require(n & (n - 1) == 0, "patterns.side",
                     "side^2 must be a power of two for Hadamard coding")
        if p["coding"] == "speckle":
            _require(
                isinstance(p.get("n_patterns"), int) and p["n_patterns"] >= 1,
                "patterns.n_patterns", "required for speckle coding",
            )
        _require(
            self.timing.N_s <= self.schedule_samples(),
            "timing.N_s",
            f"exceeds the {self.schedule_samples()} samples the pattern "
            "schedule covers",
        )

        try:
            built = target_from_json(self.target)
        except Exception as exc:
            raise ValueError(f"target: {exc}") from exc
        mode_table = _distinct_modes(built)
        for i, req in enumerate(self.recon):
            _validate_request(i, req, mode_table, self.timing)

        n_sound, window, hop = _spectral_params(self)
        _require(n_sound >= 1, "spectral.n_samples", "must be >= 1")
        _require(1 <= window <= n_sound, "spectral.window_len",
                 "must be in [1, n_samples]")
        _require(hop is None or hop >= 1, "spectral.hop", "must be >= 1")

    def schedule_samples(self):
        """Total samples the configured pattern schedule spans."""
        p = self.patterns
        if p["coding"] == "hadamard":
            n_patterns = p["side"] * p["side"]
        elif p["coding"] == "flat":
            n_patterns = 1
        else:
            n_patterns = p["n_patterns"]
        return p.get("cycles", 1) * n_patterns * p.get("samples_per_pattern", 1)


def _spectral_params(config):
    n = int(config.spectral.get("n_samples", config.timing.N_s))
    window = int(config.spectral.get("window_len", min(4096, n)))
    hop = config.spectral.get("hop")
    return n, window, (int(hop) if hop is not None else None)


def config_to_dict(config):
    g = config.geometry
    t = config.timing
    m = config.motion
    return {
        "geometry": {
            "lambda_c": g.lambda_c, "Z1": g.Z1, "Z2": g.Z2, "Zd": g.Zd,
            "D": g.D, "alpha": g.alpha, "beta": g.beta, "x_r": g.x_r,
        },
        "timing": {"T_p": t.T_p, "N_s": t.N_s, "f_IF": t.f_IF,
                   "t_start": t.t_start},
        "motion": {"v": m.v, "theta": m.theta, "gamma": m.gamma,
                   "noise_sigma": m.noise_sigma},
        "patterns": dict(config.patterns),
        "target": copy.deepcopy(config.target),
        "spectral": dict(config.spectral),
        "recon": [dict(r) for r in config.recon],
        "seed": config.seed,
        "out_dir": config.out_dir,
    }


def config_from_dict(doc):
    try:
        geometry = SystemGeometry(**doc["geometry"])
        timing = TimingConfig(**doc["timing"])
        motion = MotionConfig(**doc.get("motion", {}))
        return SceneConfig(
            geometry=geometry,
            timing=timing,
            motion=motion,
            patterns=doc["patterns"],
            target=doc["target"],
            recon=tuple(doc.get("recon", ())),
            seed=doc["seed"],
            spectral=doc.get("spectral", {}),
            out_dir=doc.get("out_dir", "."),
        )
    except KeyError as exc:
        raise ValueError(f"missing config key {exc}") from exc
    except TypeError as exc:
        raise ValueError(str(exc)) from exc


def serialize_config(config):
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n"


def parse_config(text):
    return config_from_dict(json.loads(text))


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def _child_seed(master, index):
    """Independent per-stage seed split off the master by counter."""
    ss = np.random.SeedSequence(master, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def preset_config(name, seed=20260818, out_dir="."):
    """Bundled bench scenes, named after the parameter tables they realize."""
    if name == "table2_discrete":
        side, cycles = 32, 20
        return SceneConfig(
            geometry=desk_geometry(side=side)[0],
            timing=presets.table2_timing(cycles=cycles, side=side),
            motion=MotionConfig(),
            patterns={"coding": "hadamard", "side": side,
                      "samples_per_pattern": 1, "cycles": cycles},
            target=target_to_json(presets.table2_discrete_target(side=side)),
            spectral={"n_samples": 20480, "window_len": 2048, "hop": 1024},
            recon=(
                {"method": "discrete", "mode_index": 0, "filter_k": 350.0},
                {"method": "discrete", "mode_index": 1, "filter_k": 350.0},
                {"method": "discrete", "mode_index": 2, "filter_k": 350.0},
            ),
            seed=seed,
            out_dir=out_dir,
        )
    if name == "table3_plate_type1":
        side, cycles, spp = 16, 6, 80
        n_samples = cycles * side * side * spp
        return SceneConfig(
            geometry=desk_geometry(side=side)[0],
            timing=presets.table3_timing(n_samples),
            motion=MotionConfig(),
            patterns={"coding": "hadamard", "side": side,
                      "samples_per_pattern": spp, "cycles": cycles},
            target=target_to_json(presets.table3_plate_target(side=side)),
            spectral={"n_samples": 8000, "window_len": 4000, "hop": 2000},
            recon=(
                {"method": "type1", "N_t": 400, "t0": [0, 80, 160, 240],
                 "kspace": True},
            ),
            seed=seed,
            out_dir=out_dir,
        )
    raise ValueError(
        f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
    )


def build_schedule(config):
    p = config.patterns
    side = p["side"]
    spp = p.get("samples_per_pattern", 1)
    pitch = p.get("pitch")
    total = config.schedule_samples()
    if p["coding"] == "hadamard":
        return hadamard_patterns(
            side, pitch=pitch, samples_per_pattern=spp, total_samples=total
        )
    if p["coding"] == "flat":
        return flat_schedule(side, pitch=pitch, total_samples=total)
    return random_speckle_patterns(
        side, p["n_patterns"], seed=_child_seed(config.seed, 0),
        pitch=pitch, samples_per_pattern=spp, total_samples=total,
    )


def export_png(grid, mapping, path):
    """Render a complex grid to an 8-bit grayscale PNG.

    magnitude/real use a linear min-max stretch (a constant grid renders
    black); phase maps (-pi, pi] onto the cyclic byte range so wrapped
    values stay continuous across the branch cut.
    """
    data = grid.data if isinstance(grid, ComplexGrid) else np.asarray(grid)
    data = np.asarray(data)
    if not np.all(np.isfinite(data)):
        raise ValueError("grid contains non-finite values")
    if mapping == "phase":
        ang = np.angle(data)
        levels = np.floor((ang + np.pi) / (2.0 * np.pi) * 256.0) % 256.0
    elif mapping in ("magnitude", "real"):
        vals = np.abs(data) if mapping == "magnitude" else data.real.astype(float)
        lo = vals.min()
        span = vals.max() - lo
        if span == 0.0:
            levels = np.zeros_like(vals)
        else:
            levels = np.floor((vals - lo) / span * 255.0)
    else:
        raise ValueError(f"unknown mapping {mapping!r}")
    img = Image.fromarray(np.clip(levels, 0, 255).astype(np.uint8), mode="L")
    img.save(path, format="PNG")


class _Artifacts:
    """Output-directory bookkeeping: every written file and its hash."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files = {}

    def path(self, rel):
        full = os.path.join(self.out_dir, rel)
        parent = os.path.dirname(full)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return full

    def record(self, rel):
        with open(self.path(rel), "rb") as fh:
            self.files[rel] = hashlib.sha256(fh.read()).hexdigest()


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_spectrum_csv(path, spec):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "frequency", "magnitude"])
        freqs = spec.frequencies()
        for fi in range(spec.n_frames):
            t = fi * spec.time_step
            for b in range(spec.n_freqs):
                writer.writerow(
                    [repr(float(t)), repr(float(freqs[b])),
                     repr(float(spec.magnitudes[fi, b]))]
                )


@contextlib.contextmanager
def _stage(timings, name, parameter):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except OSError as exc:
        raise StageError(name, parameter, str(exc), 4) from exc
    except Exception as exc:
        raise StageError(name, parameter, str(exc), 3) from exc
    finally:
        timings[name] = time.perf_counter() - start


@dataclass(frozen=True)
class _Plan:
    stages: frozenset
    methods: tuple = _METHODS
    kspace_only: bool = False


_PLANS = {
    "gen-patterns": _Plan(frozenset({"patterns"})),
    "simulate": _Plan(frozenset({"echo"})),
    "spectrum": _Plan(frozenset({"spectrum"})),
    "recon-static": _Plan(frozenset({"echo", "recon"}), methods=("static",)),
    "recon-discrete": _Plan(frozenset({"echo", "recon"}), methods=("discrete",)),
    "recon-type1": _Plan(frozenset({"echo", "recon"}), methods=("type1",)),
    "recon-type2": _Plan(frozenset({"echo", "recon"}), methods=("type2",)),
    "kspace": _Plan(frozenset({"echo", "recon"}), methods=("type1",),
                    kspace_only=True),
    "plate-modes": _Plan(frozenset({"plate"})),
    "run": _Plan(frozenset({"echo", "spectrum", "recon"})),
}


def _save_image(art, base, img):
    for written in save_recon_image(img, art.path(base)):
        art.record(os.path.relpath(written, art.out_dir))
    export_png(img.data, "magnitude", art.path(base + "_mag.png"))
    art.record(base + "_mag.png")
    export_png(img.data, "phase", art.path(base + "_phase.png"))
    art.record(base + "_phase.png")


def _execute_request(art, config, target, schedule, echo, idx, req, kspace_only):
    geo = config.geometry
    timing = config.timing
    method = req["method"]
    base = f"recon_{idx:02d}_{method}"
    mode_table = _distinct_modes(target)

    if method == "static":
        img = first_order_correlate(echo, schedule, geo, method="static")
        _save_image(art, base, img)
        snap = complex_target_snapshot(target, geo, timing.t_start)
        return {"complex_correlation": float(complex_correlation(img.data, snap))}

    if method == "discrete":
        comps, cells = _request_components(req, mode_table)
        img = reconstruct_discrete_mode(
            echo, schedule, geo, CompensationSpec("discrete_mode", comps),
            filter_k=req.get("filter_k", 350.0),
        )
        _save_image(art, base, img)
        out = {
            "mode_tag": img.mode_tag,
            "support": sorted(
                [int(r), int(c)]
                for r, c in zip(*np.nonzero(img.data.data))
            ),
        }
        if cells is not None:
            out["support_f1"] = float(support_f1(img, cells))
        return out

    if method == "type1":
        t0 = req.get("t0", 0)
        t0s = t0 if isinstance(t0, list) else [t0]
        frames = []
        frame_metrics = []
        for j, off in enumerate(t0s):
            img = reconstruct_type1(echo, schedule, geo, req["N_t"], off)
            frames.append(img)
            if not kspace_only:
                _save_image(art, f"{base}_frame_{j:02d}", img)
            snap = complex_target_snapshot(
                target, geo, timing.t_start + off * timing.T_p
            )
            frame_metrics.append({
                "t0": int(off),
                "complex_correlation": float(
                    complex_correlation(img.data, snap)
                ),
            })
        out = {"frames": frame_metrics}
        if not kspace_only:
            stack = {
                "frames": [
                    {"file": f"{base}_frame_{j:02d}.cgrd", "t0": int(off)}
                    for j, off in enumerate(t0s)
                ]
            }
            _write_json(art.path(base + "_stack.json"), stack)
            art.record(base + "_stack.json")
        if req.get("kspace") or kspace_only:
            argmax_sets = []
            for j, img in enumerate(frames):
                spec_img = kspace(img)
                kb = f"{base}_kspace_{j:02d}"
                write_cgrd(art.path(kb + ".cgrd"), spec_img)
                art.record(kb + ".cgrd")
                export_png(spec_img, "magnitude", art.path(kb + "_mag.png"))
                art.record(kb + "_mag.png")
                argmax_sets.append(sorted(
                    [int(r), int(c)]
                    for r, c in kspace_argmax(spec_img, rel_tol=0.05)
                ))
            out["kspace_argmax"] = argmax_sets
        return out

    # type2
    off = req.get("t0", 0)
    img = reconstruct_type2(
        echo, schedule, geo, req["N_i"], off, mode_tag=req.get("mode_tag")
    )
    _save_image(art, base, img)
    out = {}
    if "mode_index" in req:
        t_abs = timing.t_start + off * timing.T_p
        if isinstance(target, PlateTarget):
            oracle = single_mode_snapshot(target, req["mode_index"], geo, t_abs)
        else:
            comps, _ = mode_table[req["mode_index"]]
            sub = DiscreteTargetSet(
                target.rows, target.cols, target.pitch,
                [s for s in target.scatterers if s.components == comps],
            )
            oracle = complex_target_snapshot(sub, geo, t_abs)
        out = {
            "complex_correlation": float(complex_correlation(img.data, oracle)),
            "residual_energy": float(residual_energy(img, oracle)),
        }
    return out


def run(config, plan=None, command="run"):
    """Execute the selected pipeline stages and write the run manifest."""
    if plan is None:
        plan = _PLANS["run"]
    art = _Artifacts(config.out_dir)
    timings = {}
    metrics = {}
    target = target_from_json(config.target)

    requests = [
        (i, r) for i, r in enumerate(config.recon) if r["method"] in plan.methods
    ]
    if "recon" in plan.stages and command != "run" and not requests:
        raise StageError(
            "recon", "recon",
            f"config has no request with method in {plan.methods}", 2,
        )

    schedule = None
    if plan.stages & {"patterns", "echo", "recon"}:
        with _stage(timings, "patterns", "patterns"):
            schedule = build_schedule(config)
            if "patterns" in plan.stages:
                sched_dir = art.path("patterns")
                save_schedule(sched_dir, schedule)
                for name in os.listdir(sched_dir):
                    art.record(os.path.join("patterns", name))

    echo = None
    if plan.stages & {"echo", "recon"}:
        with _stage(timings, "echo", "timing"):
            echo = synthesize_echo(
                target, schedule, config.geometry, config.timing,
                motion=config.motion, seed=_child_seed(config.seed, 1),
            )
            if "echo" in plan.stages:
                write_cech(art.path("echo.cech"), echo)
                art.record("echo.cech")

    if "spectrum" in plan.stages:
        with _stage(timings, "spectrum", "spectral"):
            n_sound, window, hop = _spectral_params(config)
            sounding = flat_schedule(
                config.patterns["side"], pitch=target.pitch,
                total_samples=n_sound,
            )
            sound_timing = TimingConfig(
                T_p=config.timing.T_p, N_s=n_sound,
                f_IF=config.timing.f_IF, t_start=config.timing.t_start,
            )
            sound_echo = synthesize_echo(
                target, sounding, config.geometry, sound_timing,
                motion=config.motion, seed=_child_seed(config.seed, 2),
            )
            spec = spectrogram(sound_echo, window, hop)
            detected = detect_frequencies(spec, f_samp=1.0 / config.timing.T_p)
            _write_spectrum_csv(art.path("spectrum.csv"), spec)
            art.record("spectrum.csv")
            write_cgrd(
                art.path("spectrum.cgrd"),
                ComplexGrid(spec.n_frames, spec.n_freqs, spec.freq_step,
                            spec.magnitudes.astype(np.complex128)),
            )
            art.record("spectrum.cgrd")
            doc = {
                "modes": [
                    {"f_mn": m.f_mn, "N_mn": m.N_mn, "confidence": m.confidence}
                    for m in detected
                ]
            }
            _write_json(art.path("detected_modes.json"), doc)
            art.record("detected_modes.json")
            metrics["spectrum"] = doc

    if "recon" in plan.stages:
        for idx, req in requests:
            name = f"recon_{idx:02d}_{req['method']}"
            with _stage(timings, name, f"recon[{idx}]"):
                m = _execute_request(
                    art, config, target, schedule, echo, idx, req,
                    plan.kspace_only,
                )
                if m:
                    metrics[name] = m

    if "plate" in plan.stages:
        with _stage(timings, "plate-modes", "target"):
            if not isinstance(target, PlateTarget):
                raise StageError(
                    "plate-modes", "target.type",
                    "plate-modes requires a plate target", 2,
                )
            with open(art.path("eigenfrequencies.csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["i", "j", "omega_rad_per_s", "f_hz"])
                for i in range(1, 5):
                    for j in range(1, 5):
                        w = plate_eigenfrequency(
                            i, j, target.a, target.b, target.material
                        )
                        writer.writerow(
                            [i, j, repr(float(w)),
                             repr(float(w / (2.0 * np.pi)))]
                        )
            art.record("eigenfrequencies.csv")
            for k, mode in enumerate(target.modes):
                g = ComplexGrid(target.rows, target.cols, target.pitch,
                                mode.W.astype(np.complex128))
                write_cgrd(art.path(f"mode_{k:02d}.cgrd"), g)
                art.record(f"mode_{k:02d}.cgrd")
                export_png(g, "real", art.path(f"mode_{k:02d}_real.png"))
                art.record(f"mode_{k:02d}_real.png")
            metrics["plate-modes"] = {
                "omega_11": float(plate_eigenfrequency(
                    1, 1, target.a, target.b, target.material
                ))
            }

    manifest = {
        "command": command,
        "config_sha256": hashlib.sha256(
            serialize_config(config).encode()
        ).hexdigest(),
        "seed": config.seed,
        "versions": {
            "modescope": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "timings": timings,
        "metrics": metrics,
        "files": art.files,
    }
    _write_json(art.path("manifest.json"), manifest)
    return manifest


def _resolve_config(args):
    if args.preset and args.config:
        raise ValueError("pass either --preset or --config, not both")
    if args.preset:
        config = preset_config(args.preset)
    elif args.config:
        config = load_config(args.config)
    else:
        raise ValueError("a --config file or --preset name is required")
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.out:
        config = dataclasses.replace(config, out_dir=args.out)
    return config


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="modescope",
        description="Deterministic micro-vibration imaging pipeline runner.",
    )
    parser.add_argument("command", choices=sorted(_PLANS))
    parser.add_argument("--config", metavar="PATH",
                        help="JSON scene config")
    parser.add_argument("--preset", metavar="NAME",
                        help=f"bundled scene: {', '.join(PRESET_NAMES)}")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="master seed (overrides config)")
    parser.add_argument("--threads", type=int, metavar="N",
                        help="cap BLAS/FFT worker threads")
    args = parser.parse_args(argv)

    limiter = None
    if args.threads is not None:
        if args.threads < 1:
            print(
                json.dumps({"stage": "config", "parameter": "threads",
                            "error": "must be >= 1", "exit_code": 2},
                           sort_keys=True),
                file=sys.stderr,
            )
            return 2
        import threadpoolctl

        limiter = threadpoolctl.threadpool_limits(limits=args.threads)

    try:
        config = _resolve_config(args)
    except (ValueError, OSError) as exc:
        print(
            json.dumps({"stage": "config", "parameter": "config",
                        "error": str(exc), "exit_code": 2}, sort_keys=True),
            file=sys.stderr,
        )
        return 2

    try:
        run(config, _PLANS[args.command], command=args.command)
    except StageError as err:
        print(err.to_json(), file=sys.stderr)
        return err.exit_code
    finally:
        if limiter is not None:
            limiter.unregister()

    print(os.path.join(config.out_dir, "manifest.json"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
