"""Batch front-end: run configured scenarios and emit CSV/JSON artifacts.

Usage:

    photonloc <scenario> --config <path> --out <dir> [--seed N] [--threads N]

Scenarios: density (probability density on a fixed-t array), count
(photon counting over a fixed-x3 array), boost (boosted-observer geometry
and frame-invariance deviations), costheta (wrong-basis ratio), tail
(localized-potential tail exponent), validate (full acceptance suite).

Configs are TOML: flat key-value sections mirroring the library types
(grid, plane, packet, array, boost, ...).  Unknown keys are rejected with
the offending field named.  Exit codes: 0 success, 1 numerical failure
(an invariant breach at run time), 2 configuration error.

Given the same config and seed the emitted files are byte-identical;
floats are written with 17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python 3.10
    import tomli as _toml

__all__ = ["main", "run", "ConfigError", "NumericalFailure"]

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

SCENARIOS = ("density", "count", "boost", "costheta", "tail", "validate")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the failing field."""


class NumericalFailure(RuntimeError):
    """A scenario ran but breached a numerical invariant."""


# -- config schema -------------------------------------------------------------------

_SCHEMA = {
    "run": {"seed", "scenario", "n_events"},
    "grid": {"sizes", "spacings"},
    "plane": {"kind", "offset"},
    "packet": {"center", "widths", "lam", "eps", "origin"},
    "array": {"extents", "bounds"},
    "boost": {"beta"},
    "costheta": {"theta_deg", "size", "center_frequency", "widths"},
    "tail": {"sizes", "box", "lam", "eps"},
}

_REQUIRED = {
    "density": ("grid", "plane", "packet"),
    "count": ("grid", "plane", "packet"),
    "boost": ("grid", "plane", "packet", "boost"),
    "costheta": ("costheta",),
    "tail": ("tail",),
    "validate": (),
}

_ALLOWED = {
    "density": ("run", "grid", "plane", "packet", "array"),
    "count": ("run", "grid", "plane", "packet", "array"),
    "boost": ("run", "grid", "plane", "packet", "boost"),
    "costheta": ("run", "costheta"),
    "tail": ("run", "tail"),
    "validate": ("run",),
}


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as f:
            return _toml.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except _toml.TOMLDecodeError as e:
        raise ConfigError(f"config parse error in {path}: {e}")


def check_schema(cfg: dict, scenario: str) -> None:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    allowed = _ALLOWED[scenario]
    for section, body in cfg.items():
        if section not in allowed:
            raise ConfigError(
                f"section [{section}] is not allowed for scenario {scenario!r}"
            )
        if not isinstance(body, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key in body:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    for section in _REQUIRED[scenario]:
        if section not in cfg:
            raise ConfigError(f"scenario {scenario!r} requires section [{section}]")
    declared = cfg.get("run", {}).get("scenario")
    if declared is not None and declared != scenario:
        raise ConfigError(
            f"run.scenario = {declared!r} does not match requested {scenario!r}"
        )


def _triple(section: str, key: str, value, kind=float) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{section}.{key} must be a list of three values")
    try:
        return tuple(kind(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key} holds a non-numeric value")


def _build_grid(cfg: dict):
    from photonloc.kspace import HyperplaneGrid
    from photonloc.spacetime import Hyperplane

    plane_cfg = cfg.get("plane", {})
    kind = plane_cfg.get("kind", "spacelike")
    offset = float(plane_cfg.get("offset", 0.0))
    if kind == "spacelike":
        plane = Hyperplane.spacelike(offset)
    elif kind == "timelike":
        plane = Hyperplane.timelike(offset)
    else:
        raise ConfigError(f"plane.kind must be 'spacelike' or 'timelike', got {kind!r}")
    grid_cfg = cfg.get("grid", {})
    sizes = _triple("grid", "sizes", grid_cfg.get("sizes", [32, 32, 32]), int)
    spacings = _triple("grid", "spacings", grid_cfg.get("spacings", [0.8, 0.8, 0.8]))
    try:
        return HyperplaneGrid(plane, sizes, spacings)
    except ValueError as e:
        raise ConfigError(f"grid: {e}")


def _build_packet(cfg: dict, grid):
    from photonloc.spacetime import FourVector
    from photonloc.states import PacketSpec, PacketSupportError, make_gaussian_packet

    p = cfg["packet"]
    center = _triple("packet", "center", p.get("center"))
    widths = _triple("packet", "widths", p.get("widths"))
    lam = int(p.get("lam", 1))
    eps = int(p.get("eps", 1))
    if lam not in (1, 2):
        raise ConfigError(f"packet.lam must be 1 or 2, got {lam}")
    if eps not in (1, -1):
        raise ConfigError(f"packet.eps must be 1 or -1, got {eps}")
    origin = None
    if "origin" in p:
        o = p["origin"]
        if not isinstance(o, (list, tuple)) or len(o) != 4:
            raise ConfigError("packet.origin must be [t, x1, x2, x3]")
        origin = FourVector(*[float(v) for v in o])
    spec = PacketSpec(center=center, widths=widths, lam=lam, eps=eps, origin_event=origin)
    try:
        return make_gaussian_packet(spec, grid)
    except PacketSupportError as e:
        raise ConfigError(f"packet: {e}")


def _build_array(cfg: dict, grid):
    from photonloc.detectors import ArrayAlignmentError, DetectorArraySpec

    if "array" not in cfg:
        return DetectorArraySpec.full(grid)
    a = cfg["array"]
    extents = _triple("array", "extents", a.get("extents", list(grid.spacings)))
    bounds = None
    if "bounds" in a:
        raw = a["bounds"]
        if not isinstance(raw, (list, tuple)) or len(raw) != 3:
            raise ConfigError("array.bounds must be three [lo, hi] pairs")
        bounds = []
        for pair in raw:
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ConfigError("array.bounds must be three [lo, hi] pairs")
            bounds.append((float(pair[0]), float(pair[1])))
    try:
        return DetectorArraySpec.from_extents(grid, extents, bounds)
    except ArrayAlignmentError as e:
        raise ConfigError(f"array: {e}")


def _build_boost(cfg: dict):
    from photonloc.spacetime import BoostParameters

    beta = cfg["boost"].get("beta")
    if beta is None:
        raise ConfigError("boost.beta is required")
    try:
        return BoostParameters(float(beta))
    except ValueError as e:
        raise ConfigError(f"boost.beta: {e}")


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


# -- scenarios ---------------------------------------------------------------------


def _run_density_like(cfg: dict, out: str, seed: int, scenario: str) -> dict:
    import numpy as np

    from photonloc.detectors import (
        detection_probabilities,
        export_distribution_csv,
        export_events_jsonl,
        sample_events,
    )
    from photonloc.localization import (
        export_density_csv,
        spacelike_density,
        timelike_counting,
    )

    grid = _build_grid(cfg)
    want_kind = "spacelike" if scenario == "density" else "timelike"
    if grid.kind != want_kind:
        raise ConfigError(f"plane.kind must be {want_kind!r} for scenario {scenario!r}")
    psi = _build_packet(cfg, grid)
    dens = spacelike_density(psi) if scenario == "density" else timelike_counting(psi)
    csv_name = "density.csv" if scenario == "density" else "counting.csv"
    export_density_csv(grid, dens, os.path.join(out, csv_name))

    total = float(np.sum(dens)) * grid.dsigma
    centroid = []
    w = dens / np.sum(dens)
    for ax, shape in zip(grid.x_axes, [(-1, 1, 1), (1, -1, 1), (1, 1, -1)]):
        centroid.append(float(np.sum(w * np.broadcast_to(ax.reshape(shape), grid.sizes))))

    array = _build_array(cfg, grid)
    dist = detection_probabilities(psi, array)
    export_distribution_csv(dist, os.path.join(out, "distribution.csv"))

    n_events = int(cfg.get("run", {}).get("n_events", 0))
    if n_events > 0:
        events = sample_events(dist, n_events, seed)
        export_events_jsonl(events, os.path.join(out, "events.jsonl"))

    summary = {
        "scenario": scenario,
        "seed": seed,
        "total_probability": total,
        "centroid": centroid,
        "array_total": dist.total,
        "coverage_deficit": dist.coverage_deficit,
        "axes": list(grid.axis_names),
    }
    _write_json(summary, os.path.join(out, "summary.json"))
    if abs(total - 1.0) > 1e-3:
        raise NumericalFailure(
            f"full-grid {scenario} total {total} deviates from 1 beyond 1e-3"
        )
    return summary


def _run_boost(cfg: dict, out: str, seed: int) -> dict:
    from photonloc.detectors import (
        DetectorArraySpec,
        ObserverFrame,
        boosted_view,
        frame_invariance_check,
        norm_invariance_check,
    )

    grid = _build_grid(cfg)
    boost = _build_boost(cfg)
    frame = ObserverFrame(boost)
    array = DetectorArraySpec.full(grid)
    view = boosted_view(array, frame)
    report = {
        "scenario": "boost",
        "seed": seed,
        "beta": boost.beta,
        "gamma": boost.gamma,
        "plane_kind": grid.kind,
        "boosted_normal": list(view.plane.normal.as_tuple()),
        "boosted_offset": view.plane.offset,
        "world_line": {
            "form": "t' = intercept + slope * x3'"
            if grid.kind == "spacelike"
            else "x3' = intercept + slope * t'",
            "intercept": view.line_intercept,
            "slope": view.line_slope,
        },
        "world_line_angle": view.angle,
    }
    if grid.kind == "spacelike":
        psi = _build_packet(cfg, grid)
        report["probability_deviation"] = frame_invariance_check(psi, array, frame)
        report["norm_deviation"] = norm_invariance_check(psi, frame)
    _write_json(report, os.path.join(out, "boost.json"))
    return report


def _run_costheta(cfg: dict, out: str, seed: int) -> dict:
    import math

    from photonloc.detectors import BandwidthError
    from photonloc.validation import _COSTHETA_CASES, costheta_case

    c = cfg["costheta"]
    theta_deg = c.get("theta_deg")
    if theta_deg is None:
        raise ConfigError("costheta.theta_deg is required")
    theta_deg = float(theta_deg)
    defaults = {t: (n, om, w) for t, n, om, w, _ in _COSTHETA_CASES}
    n, om, widths = defaults.get(theta_deg, (64, 24.0, (0.6, 0.6, 0.24)))
    n = int(c.get("size", n))
    om = float(c.get("center_frequency", om))
    if "widths" in c:
        widths = _triple("costheta", "widths", c["widths"])
    try:
        ratio = costheta_case(theta_deg, n, om, widths)
    except BandwidthError as e:
        raise NumericalFailure(str(e))
    expected = math.cos(math.radians(theta_deg))
    report = {
        "scenario": "costheta",
        "seed": seed,
        "theta_deg": theta_deg,
        "ratio": ratio,
        "expected": expected,
        "tol": 0.01,
        "within_tol": abs(ratio - expected) <= 0.01 * expected,
    }
    _write_json(report, os.path.join(out, "costheta.json"))
    if not report["within_tol"]:
        raise NumericalFailure(
            f"costheta ratio {ratio} deviates from {expected} beyond 1%"
        )
    return report


def _run_tail(cfg: dict, out: str, seed: int) -> dict:
    import numpy as np

    from photonloc.kspace import HyperplaneGrid
    from photonloc.localization import (
        LocalizedStateSpec,
        fit_power_law,
        potential_of_localized,
        radial_magnitude_profile,
    )
    from photonloc.spacetime import Hyperplane

    t = cfg.get("tail", {})
    sizes = t.get("sizes", [32, 64])
    if not isinstance(sizes, (list, tuple)) or not all(
        isinstance(s, int) and s >= 8 for s in sizes
    ):
        raise ConfigError("tail.sizes must be a list of ints >= 8")
    box = float(t.get("box", 25.6))
    lam = int(t.get("lam", 1))
    eps = int(t.get("eps", 1))
    slopes = {}
    for n in sizes:
        grid = HyperplaneGrid(Hyperplane.spacelike(0.0), (n,) * 3, (box / n,) * 3)
        c = n // 2
        spec = LocalizedStateSpec(grid.event_at(c, c, c), lam=lam, eps=eps)
        field = potential_of_localized(spec, grid)
        r, m = radial_magnitude_profile(field, nbins=28, r_min=0.05 * box, r_max=0.5 * box)
        with open(os.path.join(out, f"tail_profile_N{n}.csv"), "w", encoding="ascii") as f:
            f.write("r,magnitude\n")
            for ri, mi in zip(r, m):
                f.write(f"{format(ri, '.17g')},{format(mi, '.17g')}\n")
        slopes[n] = fit_power_law(r, m, 0.05 * box, 0.5 * box)
    drift = max(slopes.values()) - min(slopes.values())
    report = {
        "scenario": "tail",
        "seed": seed,
        "box": box,
        "fitted_exponent": {str(k): v for k, v in slopes.items()},
        "refinement_drift": drift,
        "stable_within_0.2": drift <= 0.2,
    }
    _write_json(report, os.path.join(out, "tail.json"))
    if drift > 0.2:
        raise NumericalFailure(f"tail exponent drift {drift} exceeds 0.2")
    return report


def _run_validate(cfg: dict, out: str, seed: int) -> dict:
    from photonloc.validation import run_all

    results = run_all(echo=True)
    report = {
        "scenario": "validate",
        "seed": seed,
        "criteria": [
            {
                "criterion": r.criterion,
                "name": r.name,
                "passed": r.passed,
                "tolerance": r.tolerance,
                "measured": {k: _jsonable(v) for k, v in r.measured.items()},
                "runtime_s": round(r.runtime_s, 3),
            }
            for r in results
        ],
        "all_passed": all(r.passed for r in results),
    }
    _write_json(report, os.path.join(out, "validate_report.json"))
    if not report["all_passed"]:
        failed = [r.criterion for r in results if not r.passed]
        raise NumericalFailure(f"criteria failed: {failed}")
    return report


def _jsonable(v):
    if isinstance(v, (bool, int, float, str)):
        return v
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


def emit_report(results: dict, path: str) -> None:
    """Write a machine-readable summary of a finished run."""
    _write_json(results, path)


def run(scenario: str, config_path: str, out_dir: str, seed: int | None = None) -> dict:
    """Execute one scenario; returns its summary payload.

    An explicit ``seed`` argument (the --seed flag) overrides the config's
    run.seed; with neither, the seed is 0.
    """
    cfg = load_config(config_path)
    check_schema(cfg, scenario)
    if seed is None:
        seed = int(cfg.get("run", {}).get("seed", 0))
    os.makedirs(out_dir, exist_ok=True)
    if scenario in ("density", "count"):
        return _run_density_like(cfg, out_dir, seed, scenario)
    if scenario == "boost":
        return _run_boost(cfg, out_dir, seed)
    if scenario == "costheta":
        return _run_costheta(cfg, out_dir, seed)
    if scenario == "tail":
        return _run_tail(cfg, out_dir, seed)
    return _run_validate(cfg, out_dir, seed)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="photonloc",
        description="photon localization scenarios on spacetime hyperplanes",
    )
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--seed", type=int, default=None, help="sampling seed (overrides run.seed)"
    )
    parser.add_argument(
        "--threads", type=int, default=None, help="numeric kernel threads"
    )
    args = parser.parse_args(argv)

    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    try:
        summary = run(args.scenario, args.config, args.out, seed=args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
