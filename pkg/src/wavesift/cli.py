"""Command-line driver: synthesize data, run the multilevel inversion, export.

Examples::

    wavesift run --phantom twin_squares --preset paper --seed 1 --out runs/ex1
    wavesift run --config ex4.json
    wavesift synthesize --phantom annulus --xi 0.1 --seed 3 --out runs/data
    wavesift invert --data runs/data/data --phantom annulus --out runs/inv
    wavesift export --run runs/ex1 --iteration 3 --format vtk
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import export
from .errors import ConfigError, WavesiftError
from .forward import ScatterData, add_noise, load_data, save_data, synthesize
from .inversion import Iteration, ReconstructionResult, multilevel_run
from .mesh import SamplingBox, connected_components
from .physics import wavelength
from .scenarios import (PHANTOM_NAMES, SAMPLING_SETUPS, incidence_directions, load_phantom,
                        make_phantom, phantom_from_dict, receiver_positions)

log = logging.getLogger("wavesift")

PAPER = {"k": 2 * np.pi, "n_incidences": 6, "n_receivers": 30, "radius_wavelengths": 5.0,
         "big_m": 100.0, "eps": 1e-3, "xi": 0.1}


@dataclass
class RunConfig:
    """Parameters of one experiment; lengths are absolute (wavelength = 2 pi / k)."""

    phantom: str | None = None
    geometry: str | dict | None = None
    k: float = PAPER["k"]
    n_incidences: int = PAPER["n_incidences"]
    n_receivers: int = PAPER["n_receivers"]
    radius: float | None = None
    box_lower: list | None = None
    box_upper: list | None = None
    h0: float | None = None
    big_m: float = PAPER["big_m"]
    eps: float = PAPER["eps"]
    xi: float = PAPER["xi"]
    seed: int | None = None
    k_max: int = 12
    max_elements: int = 8000
    forward_h: float | None = None
    out: str = "wavesift-run"
    formats: list = field(default_factory=lambda: ["csv", "json"])

    @classmethod
    def from_dict(cls, raw: dict, source: str = "config") -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        raw = dict(raw)
        box = raw.pop("box", None)
        if isinstance(box, dict):
            raw.setdefault("box_lower", box.get("lower"))
            raw.setdefault("box_upper", box.get("upper"))
        elif box is not None:
            raise ConfigError(f"{source}: field 'box' must be an object with 'lower'/'upper'")
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"{source}: unknown field(s) {', '.join(unknown)}")
        return cls(**raw)

    def resolve(self) -> "RunConfig":
        """Fill geometry defaults from the phantom's set-up and validate."""
        cfg = dataclasses.replace(self)
        if cfg.phantom is None and cfg.geometry is None:
            raise ConfigError("field 'phantom': give a phantom name or a 'geometry'")
        if cfg.phantom is not None and cfg.phantom not in PHANTOM_NAMES:
            raise ConfigError(f"field 'phantom': unknown phantom {cfg.phantom!r}; "
                              f"choose from {', '.join(PHANTOM_NAMES)}")
        _positive(cfg.k, "k")
        lam = wavelength(cfg.k)
        if cfg.radius is None:
            cfg.radius = PAPER["radius_wavelengths"] * lam
        setup = SAMPLING_SETUPS.get(cfg.phantom)
        if cfg.box_lower is None or cfg.box_upper is None:
            if setup is None:
                raise ConfigError("field 'box': required for custom geometries")
            dim = self.phantom_obj().dim
            cfg.box_lower = [-setup[0] * lam] * dim
            cfg.box_upper = [setup[0] * lam] * dim
        if cfg.h0 is None:
            if setup is None:
                raise ConfigError("field 'h0': required for custom geometries")
            cfg.h0 = setup[1] * lam
        for name in ("radius", "h0", "eps"):
            _positive(getattr(cfg, name), name)
        if cfg.big_m <= 1:
            raise ConfigError(f"field 'big_m': must exceed 1, got {cfg.big_m}")
        if cfg.xi < 0:
            raise ConfigError(f"field 'xi': must be nonnegative, got {cfg.xi}")
        for name in ("n_incidences", "n_receivers", "k_max", "max_elements"):
            if int(getattr(cfg, name)) < 1:
                raise ConfigError(f"field '{name}': must be >= 1")
        bad = [f for f in cfg.formats if f not in export.FORMATS]
        if bad:
            raise ConfigError(f"field 'formats': unknown format(s) {bad}")
        try:
            SamplingBox(tuple(cfg.box_lower), tuple(cfg.box_upper))
        except ValueError as exc:
            raise ConfigError(f"field 'box': {exc}") from None
        return cfg

    def phantom_obj(self):
        lam = wavelength(self.k)
        if self.phantom is not None:
            return make_phantom(self.phantom, lam)
        if isinstance(self.geometry, dict):
            return phantom_from_dict(self.geometry, lam)
        return load_phantom(self.geometry, lam)

    @property
    def box(self) -> SamplingBox:
        return SamplingBox(tuple(self.box_lower), tuple(self.box_upper))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _positive(value, name):
    if value is None or not value > 0:
        raise ConfigError(f"field '{name}': must be positive, got {value}")


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return RunConfig.from_dict(raw, source=str(path))


def acquisition(cfg: RunConfig, dim: int):
    return (receiver_positions(cfg.n_receivers, cfg.radius, dim),
            incidence_directions(cfg.n_incidences, dim))


def synthesize_data(cfg: RunConfig) -> ScatterData:
    phantom = cfg.phantom_obj()
    receivers, incidences = acquisition(cfg, phantom.dim)
    clean = synthesize(phantom, receivers, incidences, cfg.k, cfg.forward_h)
    return add_noise(clean, cfg.xi, cfg.seed)


def write_result(result: ReconstructionResult, out: Path, formats) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    dim = result.box.dim
    for i in range(result.n_iterations):
        stem = out / f"iter_{i + 1:02d}"
        paths.append(export.export_grid(result, i, "csv", stem.with_suffix(".csv")))
        if "json" in formats:
            paths.append(export.export_grid(result, i, "json", stem.with_suffix(".json")))
        if "vtk" in formats or dim == 3:
            paths.append(export.export_grid(result, i, "vtk", stem.with_suffix(".vtk")))
    return paths


def invert(cfg: RunConfig, data: ScatterData) -> ReconstructionResult:
    return multilevel_run(data, cfg.box, cfg.h0, cfg.big_m, cfg.eps, cfg.k_max,
                          cfg.max_elements)


def run_pipeline(cfg: RunConfig, data: ScatterData | None = None):
    """Forward synthesis (unless ``data`` is given), inversion and all outputs."""
    cfg = cfg.resolve()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if data is None:
        data = synthesize_data(cfg)
        save_data(data, out / "data")
    t1 = time.perf_counter()
    result = invert(cfg, data)
    t2 = time.perf_counter()
    paths = write_result(result, out, cfg.formats)
    record = export.manifest(result, cfg.to_dict(), data,
                             {"forward_seconds": t1 - t0, "inversion_seconds": t2 - t1})
    paths.append(export.write_manifest(out / "manifest.json", record))
    return result, paths


def load_result(run_dir) -> ReconstructionResult:
    """Rebuild a result from a run directory's manifest and iteration dumps."""
    run_dir = Path(run_dir)
    record = json.loads((run_dir / "manifest.json").read_text())
    box = SamplingBox(tuple(record["box"]["lower"]), tuple(record["box"]["upper"]))
    params = record["parameters"]
    result = ReconstructionResult(box, params["big_m"], params["eps"],
                                  converged=record["converged"])
    for i in range(record["n_iterations"]):
        grid, chi = export.grid_from_csv(run_dir / f"iter_{i + 1:02d}.csv", box, i)
        result.iterations.append(Iteration(
            i, grid, chi, record["cutoffs"][i + 1], len(connected_components(grid)),
            record["op_counts"][i], record["timing"]["iteration_seconds"][i]))
    return result


def _limit_threads():
    n = os.environ.get("WAVESIFT_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(int(n))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavesift", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, inversion=True):
        sp.add_argument("--phantom", choices=PHANTOM_NAMES)
        sp.add_argument("--geometry", help="JSON phantom geometry file")
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--preset", choices=["paper"],
                        help="reference parameters (k=2pi, 6 incidences, 30 receivers, ...)")
        sp.add_argument("--xi", type=float, help="noise level")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--n-inc", dest="n_incidences", type=int)
        sp.add_argument("--n-rec", dest="n_receivers", type=int)
        sp.add_argument("--out")
        if inversion:
            sp.add_argument("--h0", type=float)
            sp.add_argument("--big-m", dest="big_m", type=float)
            sp.add_argument("--eps", type=float)
            sp.add_argument("--kmax", dest="k_max", type=int)
            sp.add_argument("--format", dest="formats", action="append",
                            choices=export.FORMATS)

    common(sub.add_parser("run", help="synthesize data and invert"))
    common(sub.add_parser("synthesize", help="forward data only"), inversion=False)
    inv = sub.add_parser("invert", help="invert a saved ScatterData file")
    common(inv)
    inv.add_argument("--data", required=True, help="data path without extension")
    exp = sub.add_parser("export", help="re-export one iteration of a finished run")
    exp.add_argument("--run", required=True, help="run output directory")
    exp.add_argument("--iteration", type=int, required=True, help="1-based iteration")
    exp.add_argument("--format", required=True, choices=export.FORMATS)
    exp.add_argument("--output")
    return p


OVERRIDES = ("phantom", "geometry", "xi", "seed", "n_incidences", "n_receivers", "out",
             "h0", "big_m", "eps", "k_max", "formats")


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.preset == "paper":
        cfg.k = PAPER["k"]
        cfg.n_incidences, cfg.n_receivers = PAPER["n_incidences"], PAPER["n_receivers"]
        cfg.big_m, cfg.eps, cfg.xi = PAPER["big_m"], PAPER["eps"], PAPER["xi"]
        cfg.radius = None
    for name in OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    limits = _limit_threads()
    try:
        if args.command == "export":
            result = load_result(args.run)
            i = args.iteration - 1
            target = args.output or Path(args.run) / f"iter_{args.iteration:02d}.{args.format}"
            print(export.export_grid(result, i, args.format, target))
            return 0
        cfg = config_from_args(args)
        if args.command == "synthesize":
            cfg = cfg.resolve()
            data = synthesize_data(cfg)
            out = Path(cfg.out)
            out.mkdir(parents=True, exist_ok=True)
            for p in save_data(data, out / "data"):
                print(p)
            return 0
        data = load_data(args.data) if args.command == "invert" else None
        result, paths = run_pipeline(cfg, data)
        print(f"{result.n_iterations} iteration(s), converged={result.converged}, "
              f"cut-offs={['%.6g' % c for c in result.cutoffs]}, "
              f"components={result.component_counts}")
        print(f"outputs in {Path(cfg.out).resolve()}")
        return 0
    except WavesiftError as exc:
        print(f"wavesift: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"wavesift: error: {exc}", file=sys.stderr)
        return 7
    finally:
        if limits is not None:
            limits.unregister()


if __name__ == "__main__":
    sys.exit(main())
