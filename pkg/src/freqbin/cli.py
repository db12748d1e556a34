"""Command-line front end.

Subcommands:

    freqbin run MANIFEST.json [--seed N] [--out DIR] [--allow-nonstandard]
    freqbin list
    freqbin fit SPECTRUM.csv

``run`` parses a strict JSON manifest, executes the named experiment,
and writes result.json, sweep.csv, and report.txt into the output
directory.  The same manifest and seed always produce byte-identical
result.json.  ``fit`` reads a two-column CSV with header
``detuning_ghz,transmission`` and fits the coupled-resonator doublet.

The default output directory comes from the FREQBIN_OUTPUT_DIR
environment variable, falling back to the current directory.  CSV column
sets per experiment are listed in schemas/cli_csv_schema.json shipped
with the package.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import experiments as xp
from .errors import FitError, FreqbinError, ManifestError
from .experiments import ChipConfig, default_chip_config
from .resonator import fit_doublet

SCHEMA_VERSION = 1
ENV_OUTPUT_DIR = "FREQBIN_OUTPUT_DIR"

EXPERIMENTS = {
    "spectroscopy": "laser scans of the three double resonators and the filter bank,"
    " with doublet fits and the nearest-bin crosstalk figure",
    "fmzi": "frequency-domain Mach-Zehnder fringes, classical light or heralded"
    " single photons, four curves and their mean visibility",
    "hom": "two-photon interference dip versus beam-splitter reflectivity,"
    " with the analytic visibility law and count records",
    "cz": "post-selected controlled-phase gate truth tables in two complementary"
    " bases and the process-fidelity lower bound",
    "bell": "entangled-pair fringe curves versus the analysis phase and their"
    " average visibility",
}

# Device reference values the default configuration is expected to
# approach; printed alongside simulated metrics in report.txt.
REFERENCE_TARGETS = {
    "fmzi": {"visibility_avg": 0.972},
    "bell": {"visibility_avg": 0.969},
    "hom": {"visibility_at_balanced": 0.949},
    "cz": {"hofmann_bound_ideal_source": 0.989, "hofmann_bound": 0.914},
    "spectroscopy": {"fitted_splitting_ghz": 13.49, "nearest_bin_crosstalk": 0.03},
}


@dataclass
class RunManifest:
    """Validated run request."""

    experiment: str
    schema_version: int = SCHEMA_VERSION
    seed: int = 12345
    output_dir: str | None = None
    sweep: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    imperfections: list[str] = field(default_factory=list)
    mode: str = "classical"
    basis: str = "both"
    target: str = "all"
    allow_nonstandard: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False, indent=2)


def _err(msg: str, loc: str) -> ManifestError:
    return ManifestError(msg, loc)


def _expect_keys(obj: dict, allowed: dict[str, type | tuple], loc: str) -> None:
    for key in obj:
        if key not in allowed:
            raise _err(f"unknown key {key!r}", f"{loc}/{key}")
    for key, types in allowed.items():
        if key in obj and not isinstance(obj[key], types):
            raise _err(
                f"expected {types} value", f"{loc}/{key}"
            )


_NUM = (int, float)

_DR_KEYS = {
    "transmissivity_T": _NUM,
    "phase_theta": _NUM,
    "efficiency_eta": _NUM,
    "sideband_suppression_db": _NUM,
    "cavity": dict,
}
_CAVITY_KEYS = {
    "g_ghz": _NUM,
    "kappa1_ghz": _NUM,
    "kappa_ex_ghz": _NUM,
    "kappa2_ghz": _NUM,
    "thermal_detune_ghz": _NUM,
    "eo_coeff_ghz_per_v": _NUM,
    "omega0_thz": _NUM,
}
_FILTER_KEYS = {
    "linewidth_fwhm_ghz": _NUM,
    "fsr_ghz": _NUM,
    "drop_efficiency": _NUM,
    "resonance_offset_ghz": _NUM,
}
_SOURCE_KEYS = {
    "pair_rate_hz": _NUM,
    "car": _NUM,
    "indistinguishability": _NUM,
    "photon_linewidth_mhz": _NUM,
}
_DETECTOR_KEYS = {
    "efficiency": _NUM,
    "dark_rate_hz": _NUM,
    "coincidence_window_ps": _NUM,
    "integration_s": _NUM,
    "insertion_loss": _NUM,
}
_CONFIG_KEYS = {
    "global_efficiency": _NUM,
    "r1_transmission": _NUM,
    "r2_transmission": _NUM,
    "bin_spacing_ghz": _NUM,
    "dr1": dict,
    "dr2": dict,
    "dr3": dict,
    "filters": dict,
    "source": dict,
    "detector": dict,
}
_SWEEP_KEYS = {"start": _NUM, "stop": _NUM, "num": int}
_TOP_KEYS = {
    "schema_version": int,
    "experiment": str,
    "seed": int,
    "output_dir": (str, type(None)),
    "sweep": dict,
    "config": dict,
    "imperfections": list,
    "mode": str,
    "basis": str,
    "target": str,
    "allow_nonstandard": bool,
}


def parse_manifest(text: str) -> RunManifest:
    """Strictly parse and validate a manifest document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _err(f"malformed JSON: {exc}", "/")
    if not isinstance(raw, dict):
        raise _err("manifest must be a JSON object", "/")
    _expect_keys(raw, _TOP_KEYS, "")
    if "experiment" not in raw:
        raise _err("missing experiment name", "/experiment")
    experiment = raw["experiment"]
    if experiment not in EXPERIMENTS:
        raise _err(
            f"unknown experiment {experiment!r}; known: {sorted(EXPERIMENTS)}",
            "/experiment",
        )
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise _err(f"unsupported schema_version {version}", "/schema_version")

    config = raw.get("config", {})
    _expect_keys(config, _CONFIG_KEYS, "/config")
    for name in ("dr1", "dr2", "dr3"):
        if name in config:
            _expect_keys(config[name], _DR_KEYS, f"/config/{name}")
            if "cavity" in config[name]:
                _expect_keys(
                    config[name]["cavity"], _CAVITY_KEYS, f"/config/{name}/cavity"
                )
    if "filters" in config:
        _expect_keys(config["filters"], _FILTER_KEYS, "/config/filters")
    if "source" in config:
        _expect_keys(config["source"], _SOURCE_KEYS, "/config/source")
    if "detector" in config:
        _expect_keys(config["detector"], _DETECTOR_KEYS, "/config/detector")

    sweep = raw.get("sweep", {})
    _expect_keys(sweep, _SWEEP_KEYS, "/sweep")
    if sweep and any(k not in sweep for k in ("start", "stop", "num")):
        raise _err("sweep needs start, stop, and num", "/sweep")
    if sweep and sweep["num"] < 2:
        raise _err("sweep num must be at least 2", "/sweep/num")

    imperfections = raw.get("imperfections", [])
    for k, name in enumerate(imperfections):
        if name not in xp.IMPERFECTION_NAMES:
            raise _err(
                f"unknown imperfection {name!r}; known: {sorted(xp.IMPERFECTION_NAMES)}",
                f"/imperfections/{k}",
            )

    mode = raw.get("mode", "classical")
    if mode not in ("classical", "quantum"):
        raise _err("mode must be classical or quantum", "/mode")
    basis = raw.get("basis", "both")
    if basis not in ("both", "xz", "zx", "zz"):
        raise _err("basis must be both, xz, zx, or zz", "/basis")
    target = raw.get("target", "all")
    if target not in ("all", "dr1", "dr2", "dr3", "filters"):
        raise _err("target must be all, dr1, dr2, dr3, or filters", "/target")

    manifest = RunManifest(
        experiment=experiment,
        schema_version=version,
        seed=raw.get("seed", 12345),
        output_dir=raw.get("output_dir"),
        sweep=sweep,
        config=config,
        imperfections=list(imperfections),
        mode=mode,
        basis=basis,
        target=target,
        allow_nonstandard=raw.get("allow_nonstandard", False),
    )
    # Physical-consistency gate: the gate experiment demands its standard
    # splitting unless explicitly overridden.
    cfg = build_config(manifest)
    if experiment == "cz" and not manifest.allow_nonstandard:
        if abs(cfg.dr2.fbs.transmissivity_T - 1.0 / 3.0) > 1e-9:
            raise _err(
                "cz requires dr2 transmissivity 1/3 (use allow_nonstandard to override)",
                "/config/dr2/transmissivity_T",
            )
        if abs(cfg.r1_transmission - 1.0 / 3.0) > 1e-9:
            raise _err(
                "cz requires r1_transmission 1/3 (use allow_nonstandard to override)",
                "/config/r1_transmission",
            )
        if abs(cfg.r2_transmission - 1.0 / 3.0) > 1e-9:
            raise _err(
                "cz requires r2_transmission 1/3 (use allow_nonstandard to override)",
                "/config/r2_transmission",
            )
    return manifest


def build_config(manifest: RunManifest) -> ChipConfig:
    """Resolve the manifest's overrides against the device defaults."""
    cfg = default_chip_config()
    c = manifest.config
    try:
        if manifest.experiment == "bell" and "dr2" not in c:
            # Entanglement analysis runs DR2 balanced.
            cfg = replace(
                cfg, dr2=replace(cfg.dr2, fbs=replace(cfg.dr2.fbs, transmissivity_T=0.5))
            )
        for name in ("dr1", "dr2", "dr3"):
            if name not in c:
                continue
            dr = getattr(cfg, name)
            fbs_over = {k: v for k, v in c[name].items() if k != "cavity"}
            fbs = replace(dr.fbs, **fbs_over) if fbs_over else dr.fbs
            cavity = (
                replace(dr.cavity, **c[name]["cavity"])
                if "cavity" in c[name]
                else dr.cavity
            )
            cfg = replace(cfg, **{name: replace(dr, fbs=fbs, cavity=cavity)})
        if "filters" in c:
            filt = replace(cfg.r3, **c["filters"])
            cfg = replace(cfg, r3=filt, r4=filt, r5=filt, r6=filt)
        if "source" in c:
            cfg = replace(cfg, source=replace(cfg.source, **c["source"]))
        if "detector" in c:
            cfg = replace(cfg, detector=replace(cfg.detector, **c["detector"]))
        scalars = {
            k: c[k]
            for k in ("global_efficiency", "r1_transmission", "r2_transmission")
            if k in c
        }
        if scalars:
            cfg = replace(cfg, **scalars)
        if "bin_spacing_ghz" in c:
            cfg = replace(
                cfg,
                grid=replace(cfg.grid, bin_spacing_ghz=c["bin_spacing_ghz"]),
            )
    except FreqbinError as exc:
        raise ManifestError(str(exc), "/config")
    return cfg


def _sweep_values(manifest: RunManifest) -> np.ndarray:
    defaults = {
        "fmzi": (0.0, 2.0 * math.pi, 41),
        "bell": (0.0, 2.0 * math.pi, 41),
        "hom": (0.0, 1.0, 41),
        "spectroscopy": (-15.0, 15.0, 601),
    }
    if manifest.sweep:
        s = manifest.sweep
        return np.linspace(s["start"], s["stop"], s["num"])
    start, stop, num = defaults.get(manifest.experiment, (0.0, 1.0, 2))
    return np.linspace(start, stop, num)


def _execute(manifest: RunManifest) -> tuple[dict, list[dict], dict]:
    """Run the experiment; return (result payload, CSV rows, metrics)."""
    cfg = build_config(manifest)
    toggles = frozenset(manifest.imperfections)
    values = _sweep_values(manifest)
    exp = manifest.experiment

    if exp == "fmzi":
        res = xp.run_fmzi(cfg, values, mode=manifest.mode, seed=manifest.seed,
                          imperfections=toggles)
        rows = _series_rows(res.series)
        return {"experiment": exp, "result": res.to_jsonable()}, rows, _metric_map(res)

    if exp == "hom":
        res = xp.run_hom(cfg, values, seed=manifest.seed, imperfections=toggles,
                         sample=True)
        order = ["reflectivity", "p_cc", "visibility"]
        rest = [k for k in res.series if k not in order]
        rows = _series_rows({k: res.series[k] for k in order + rest})
        return {"experiment": exp, "result": res.to_jsonable()}, rows, _metric_map(res)

    if exp == "bell":
        res = xp.run_bell(cfg, values, seed=manifest.seed, imperfections=toggles,
                          sample=True)
        rows = _series_rows(res.series)
        return {"experiment": exp, "result": res.to_jsonable()}, rows, _metric_map(res)

    if exp == "cz":
        sample = "car" in toggles
        if manifest.basis == "both":
            char = xp.run_cz_characterization(
                cfg, toggles, manifest.seed, sample, manifest.allow_nonstandard
            )
            payload = {
                "experiment": exp,
                "xz": char["xz"].to_jsonable(),
                "zx": char["zx"].to_jsonable(),
                "f_xz": char["f_xz"],
                "f_zx": char["f_zx"],
                "hofmann_bound": char["hofmann_bound"],
                "hofmann_clamped": char["hofmann_clamped"],
            }
            rows = []
            for basis in ("xz", "zx"):
                res = char[basis]
                labels = res.extras["input_labels"]
                table = res.extras["table_normalized"]
                for r, label in enumerate(labels):
                    row = {"basis": basis, "input": label}
                    for c_idx in range(4):
                        row[f"p_out{c_idx}"] = table[r][c_idx]
                    row["success_probability"] = res.series["success_probability"][r]
                    rows.append(row)
            metrics = {
                "f_xz": char["f_xz"],
                "f_zx": char["f_zx"],
                "hofmann_bound": char["hofmann_bound"],
            }
            return payload, rows, metrics
        res = xp.run_cz(cfg, manifest.basis, toggles, manifest.seed, sample,
                        manifest.allow_nonstandard)
        rows = _series_rows(res.series)
        return {"experiment": exp, "result": res.to_jsonable()}, rows, _metric_map(res)

    # spectroscopy
    targets = ("dr1", "dr2", "dr3", "filters") if manifest.target == "all" else (
        manifest.target,
    )
    payload = {"experiment": exp}
    rows: list[dict] = []
    metrics: dict[str, float] = {}
    for target in targets:
        res = xp.run_spectroscopy(cfg, values, target=target)
        payload[target] = res.to_jsonable()
        for name, m in res.metrics.items():
            metrics[f"{target}_{name}"] = m.value
        for row in _series_rows(res.series):
            rows.append({"target": target, **row})
    if manifest.target != "all":
        metrics = {k.split("_", 1)[1]: v for k, v in metrics.items()}
    return payload, rows, metrics


def _series_rows(series: dict) -> list[dict]:
    names = list(series)
    length = len(series[names[0]]) if names else 0
    return [{n: series[n][i] for n in names} for i in range(length)]


def _metric_map(res) -> dict[str, float]:
    return {name: m.value for name, m in res.metrics.items()}


def _write_outputs(out_dir: Path, manifest: RunManifest, payload: dict,
                   rows: list[dict], metrics: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "manifest": asdict(manifest),
        **payload,
    }
    (out_dir / "result.json").write_text(
        json.dumps(payload, sort_keys=False, indent=2) + "\n"
    )

    if rows:
        fieldnames: list[str] = []
        for row in rows:
            for key, value in row.items():
                if key not in fieldnames:
                    fieldnames.append(key)
                if isinstance(value, float) and not math.isfinite(value):
                    raise FreqbinError(f"non-finite value in CSV column {key!r}")
        with open(out_dir / "sweep.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames, restval="")
            writer.writeheader()
            writer.writerows(rows)

    targets = REFERENCE_TARGETS.get(manifest.experiment, {})
    lines = [f"experiment: {manifest.experiment}", f"seed: {manifest.seed}", ""]
    lines.append(f"{'metric':<34}{'simulated':>14}{'reference':>12}")
    for name, value in metrics.items():
        ref = targets.get(name)
        if ref is None and "_" in name:
            ref = targets.get(name.split("_", 1)[1])
        ref_text = f"{ref:.4f}" if ref is not None else "-"
        lines.append(f"{name:<34}{value:>14.6f}{ref_text:>12}")
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n")


def list_experiments() -> str:
    lines = [f"{name:<14}{desc}" for name, desc in EXPERIMENTS.items()]
    return "\n".join(lines)


def _cmd_run(args) -> int:
    try:
        manifest = parse_manifest(Path(args.manifest).read_text())
    except OSError as exc:
        print(f"error: cannot read manifest: {exc}", file=sys.stderr)
        return 2
    except ManifestError as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        manifest.seed = args.seed
    if args.allow_nonstandard:
        manifest.allow_nonstandard = True
    out_dir = Path(
        args.out
        or manifest.output_dir
        or os.environ.get(ENV_OUTPUT_DIR, ".")
    )
    try:
        payload, rows, metrics = _execute(manifest)
        _write_outputs(out_dir, manifest, payload, rows, metrics)
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return 3
    except FreqbinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out_dir / 'result.json'}")
    print(f"wrote {out_dir / 'sweep.csv'}")
    print(f"wrote {out_dir / 'report.txt'}")
    for name, value in metrics.items():
        print(f"  {name} = {value:.6f}")
    return 0


def _cmd_fit(args) -> int:
    path = Path(args.spectrum)
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["detuning_ghz", "transmission"]:
                print(
                    "error: expected CSV header detuning_ghz,transmission",
                    file=sys.stderr,
                )
                return 2
            detuning, transmission = [], []
            for row in reader:
                detuning.append(float(row["detuning_ghz"]))
                transmission.append(float(row["transmission"]))
    except (OSError, ValueError) as exc:
        print(f"error: cannot read spectrum: {exc}", file=sys.stderr)
        return 2
    try:
        fit = fit_doublet(np.asarray(detuning), np.asarray(transmission))
    except FreqbinError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return 3
    print(f"mode splitting 2g : {fit.two_g_ghz:.4f} GHz")
    print(f"linewidths        : {fit.linewidths_ghz[0]:.4f}, "
          f"{fit.linewidths_ghz[1]:.4f} GHz")
    print(f"dip depths        : {fit.dip_depths[0]:.4f}, {fit.dip_depths[1]:.4f}")
    print(f"bus coupling      : {fit.kappa_ex_ghz:.4f} GHz")
    print(f"rms residual      : {fit.residual_rms:.3e}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="freqbin",
        description="Simulate an electro-optic frequency-bin photonic processor.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON manifest")
    p_run.add_argument("manifest", help="path to the manifest JSON file")
    p_run.add_argument("--seed", type=int, default=None, help="override the seed")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument(
        "--allow-nonstandard",
        action="store_true",
        help="permit physically inconsistent settings (e.g. gate without 1/3 splitting)",
    )
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list", help="list available experiments")
    p_list.set_defaults(func=lambda args: (print(list_experiments()), 0)[1])

    p_fit = sub.add_parser("fit", help="fit a resonator doublet spectrum CSV")
    p_fit.add_argument("spectrum", help="CSV with header detuning_ghz,transmission")
    p_fit.set_defaults(func=_cmd_fit)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
