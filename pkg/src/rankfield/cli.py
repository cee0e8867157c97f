"""Batch command-line front end for the rank-function pipeline.

Subcommands: simulate | persist | rank | mean | pca | csr-fit | csr-test |
power | subsample.  Every command accepts --config with a JSON document
supplying the same parameters as its flags (explicit flags win, unknown
keys are rejected), writes files atomically, and prints a one-line JSON
summary to stdout.  Report commands also render PNG figures next to
their delimited outputs unless --no-figures is given.  Exit codes:
1 for data/contract failures, 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import csr as csrmod
from . import fpca as fpcamod
from .errors import ConfigError, RankfieldError
from .geometry import PointPattern, format_points, read_points
from .persistence import format_diagram, read_diagram
from .pointproc import DEFAULT_MAX_ATTEMPTS, ProcessSpec, derive_seed, sample
from .rankspace import (
    Grid,
    WeightFunction,
    format_rank,
    format_rank_matrix,
    mean as rank_mean,
    rank_from_diagram,
    read_rank,
)

log = logging.getLogger("rankfield")


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def parse_grid(text: str) -> Grid:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects a0,a1,M, got {text!r}")
    try:
        return Grid(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"bad --grid {text!r}: {exc}") from exc


def parse_phi(text: str) -> WeightFunction:
    try:
        return WeightFunction.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _merge_config(args: argparse.Namespace, allowed: dict[str, object]) -> None:
    """Fill unset flags from the --config JSON, then apply defaults.

    ``allowed`` maps config key -> default value; keys outside it are
    rejected so typos fail loudly before any work happens.
    """
    data = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
        unknown = set(data) - set(allowed)
        if unknown:
            raise ConfigError(f"{args.config}: unknown config keys {sorted(unknown)}")
    for key, default in allowed.items():
        if getattr(args, key, None) is None:
            value = data.get(key, default)
            setattr(args, key, value)
    required = [k for k, v in allowed.items() if v is ... and getattr(args, k) is ...]
    if required:
        raise ConfigError(f"missing required parameter(s): {required}")


def _summary(command: str, t0: float, **fields) -> None:
    out = {"command": command, **fields, "elapsed_s": round(time.time() - t0, 3)}
    print(json.dumps(out, sort_keys=True))


def _emit_rank_files(rank, phi, base: Path, figures: bool, provenance=None, title=None) -> list[str]:
    outputs = [str(base) + ".csv", str(base) + ".mat"]
    atomic_write_text(outputs[0], format_rank(rank, phi, provenance))
    atomic_write_text(outputs[1], format_rank_matrix(rank))
    if figures:
        from .plotting import save_rank_heatmap

        png = str(base) + ".png"
        save_rank_heatmap(rank, png, title=title)
        outputs.append(png)
    return outputs


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> None:
    t0 = time.time()
    _merge_config(args, {
        "model": ..., "count": ..., "seed": 0, "out": ..., "n_points": None,
        "rho": None, "interaction_radius": None, "gamma": None, "kappa": None,
        "offspring_mean": None, "cluster_radius": None, "max_attempts": DEFAULT_MAX_ATTEMPTS,
    })
    spec_fields = {
        "kind": args.model, "n": args.n_points, "rho": args.rho,
        "interaction_radius": args.interaction_radius, "gamma": args.gamma,
        "kappa": args.kappa, "offspring_mean": args.offspring_mean,
        "cluster_radius": args.cluster_radius,
    }
    try:
        spec = ProcessSpec(**{k: v for k, v in spec_fields.items() if v is not None})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out_dir = Path(args.out)
    outputs = []
    for i in range(int(args.count)):
        seed = derive_seed(args.seed, i)
        try:
            pattern = sample(spec, seed, max_attempts=int(args.max_attempts))
        except RankfieldError as exc:
            raise RankfieldError(f"pattern {i} (seed {seed}): {exc}") from exc
        path = out_dir / f"pattern_{i}.csv"
        atomic_write_text(path, format_points(pattern, {"seed": seed, "model": spec.label}))
        outputs.append(str(path))
    _summary("simulate", t0, count=len(outputs), model=spec.label, seed=args.seed,
             out_dir=str(out_dir), outputs=outputs[:3] + (["..."] if len(outputs) > 3 else []))


def cmd_persist(args) -> None:
    t0 = time.time()
    _merge_config(args, {"patterns": ..., "out": ..., "jobs": 1})
    out_dir = Path(args.out)
    diagrams = csrmod._map_ordered(_persist_one, [str(p) for p in args.patterns], int(args.jobs))
    outputs = []
    for src, text in zip(args.patterns, diagrams):
        path = out_dir / (Path(src).stem + ".pd.csv")
        atomic_write_text(path, text)
        outputs.append(str(path))
    _summary("persist", t0, count=len(outputs), out_dir=str(out_dir))


def _persist_one(path: str) -> str:
    pattern = read_points(path)
    diagram = csrmod.pattern_diagram(pattern)
    return format_diagram(diagram, {"source": Path(path).name})


def cmd_rank(args) -> None:
    t0 = time.time()
    _merge_config(args, {"diagrams": ..., "grid": ..., "phi": "indicator",
                         "dim": ..., "out": ..., "figures": True})
    grid = parse_grid(args.grid) if isinstance(args.grid, str) else Grid(*args.grid)
    phi = parse_phi(args.phi)
    out_dir = Path(args.out)
    outputs = []
    for src in args.diagrams:
        diagram = read_diagram(src)
        rank = rank_from_diagram(diagram, int(args.dim), grid)
        base = out_dir / (Path(src).stem.removesuffix(".pd") + f".rank{args.dim}")
        outputs += _emit_rank_files(rank, phi, base, args.figures,
                                    provenance={"source": Path(src).name})
    _summary("rank", t0, count=len(args.diagrams), dim=int(args.dim), out_dir=str(out_dir))


def cmd_mean(args) -> None:
    t0 = time.time()
    _merge_config(args, {"ranks": ..., "out": ..., "figures": True})
    loaded = [read_rank(p) for p in args.ranks]
    phis = {phi.descriptor() for _, phi in loaded}
    if len(phis) > 1:
        raise RankfieldError(f"input rank files carry different weights: {sorted(phis)}")
    mu = rank_mean([f for f, _ in loaded])
    base = Path(args.out)
    base = base.with_suffix("") if base.suffix == ".csv" else base
    outputs = _emit_rank_files(mu, loaded[0][1], base, args.figures,
                               provenance={"n_inputs": len(loaded)},
                               title=f"mean rank function (dim {mu.dim}, n={len(loaded)})")
    _summary("mean", t0, count=len(loaded), outputs=outputs)


def cmd_pca(args) -> None:
    t0 = time.time()
    _merge_config(args, {"ranks": ..., "components": None, "out": ..., "figures": True})
    loaded = [read_rank(p) for p in args.ranks]
    phis = {phi.descriptor() for _, phi in loaded}
    if len(phis) > 1:
        raise RankfieldError(f"input rank files carry different weights: {sorted(phis)}")
    functions = [f for f, _ in loaded]
    r = int(args.components) if args.components is not None else max(1, min(5, len(functions) - 1))
    model = fpcamod.fit(functions, loaded[0][1], r)
    out_dir = Path(args.out)
    ids = [Path(p).stem for p in args.ranks]
    header = fpcamod.save_pca_model(model, out_dir, pattern_ids=ids)
    outputs = [str(out_dir / "model.json")]
    if args.figures:
        from .plotting import save_rank_heatmap, save_score_scatter
        from .rankspace import RankFunction

        for j in range(model.n_components):
            png = out_dir / f"component_{j + 1}.png"
            comp = RankFunction(model.mean.grid, model.mean.dim, model.components[j])
            save_rank_heatmap(comp, png, title=f"principal component {j + 1}")
            outputs.append(str(png))
        if model.n_components:
            png = out_dir / "scores.png"
            save_score_scatter(model.scores, png, title="principal component scores")
            outputs.append(str(png))
    _summary("pca", t0, n_functions=len(functions), n_components=model.n_components,
             explained_variance_ratio=[round(float(v), 6) for v in model.explained_variance_ratio],
             out_dir=str(out_dir))


def cmd_csr_fit(args) -> None:
    t0 = time.time()
    _merge_config(args, {
        "n_mean": 300, "n_null": 200, "n_points": 100, "dim": ..., "grid": "0.0,0.5,100",
        "phi": "indicator", "p_level": 0.05, "seed": 0, "out": ..., "jobs": 1,
        "figures": True,
    })
    grid = parse_grid(args.grid) if isinstance(args.grid, str) else Grid(*args.grid)
    phi = parse_phi(args.phi)
    model = csrmod.fit_csr(int(args.n_mean), int(args.n_null), int(args.n_points),
                           int(args.dim), grid, phi, int(args.seed),
                           p_level=float(args.p_level), jobs=int(args.jobs))
    out_dir = Path(args.out)
    csrmod.save_csr_model(model, out_dir)
    atomic_write_text(out_dir / "mean_rank.mat", format_rank_matrix(model.mean_rank))
    outputs = [str(out_dir / "csr_model.json"), str(out_dir / "mean_rank.csv")]
    if args.figures:
        from .plotting import save_distance_histogram, save_rank_heatmap

        save_rank_heatmap(model.mean_rank, out_dir / "mean_rank.png",
                          title=f"null mean rank function (dim {model.dim})")
        save_distance_histogram(model.null_distances, out_dir / "null_distances.png",
                                cutoff=model.cutoff,
                                title=f"null squared distances (p={model.p_level})")
        outputs += [str(out_dir / "mean_rank.png"), str(out_dir / "null_distances.png")]
    _summary("csr-fit", t0, dim=model.dim, cutoff=model.cutoff, seed=int(args.seed),
             out_dir=str(out_dir))


def cmd_csr_test(args) -> None:
    t0 = time.time()
    _merge_config(args, {"model": ..., "patterns": ..., "out": ..., "jobs": 1,
                         "figures": True})
    model = csrmod.load_csr_model(args.model)
    results = []
    for src in args.patterns:
        pattern = read_points(src)
        res = csrmod.test_pattern(model, pattern)
        results.append((Path(src).name, res))
    out_dir = Path(args.out)
    lines = ["pattern,distance_squared,reject"]
    for name, res in results:
        lines.append(f"{name},{res.distance_squared!r},{int(res.reject)}")
    atomic_write_text(out_dir / "csr_test.csv", "\n".join(lines) + "\n")
    outputs = [str(out_dir / "csr_test.csv")]
    if args.figures:
        from .plotting import save_distance_histogram

        save_distance_histogram([r.distance_squared for _, r in results],
                                out_dir / "csr_test.png", cutoff=model.cutoff,
                                title=f"tested patterns vs dim-{model.dim} null")
        outputs.append(str(out_dir / "csr_test.png"))
    _summary("csr-test", t0, count=len(results),
             rejected=sum(r.reject for _, r in results), out_dir=str(out_dir))


def cmd_power(args) -> None:
    t0 = time.time()
    _merge_config(args, {
        "seed": 0, "n_test": ..., "jobs": 1, "out": ..., "grid": "0.0,0.5,100",
        "phi": "indicator", "p_level": 0.05, "fit": ..., "models": ..., "figures": True,
    })
    grid = parse_grid(args.grid) if isinstance(args.grid, str) else Grid(*args.grid)
    phi = parse_phi(args.phi)
    fit_cfg = dict(args.fit)
    unknown = set(fit_cfg) - {"n_mean", "n_null", "n_points", "seed"}
    if unknown:
        raise ConfigError(f"unknown fit keys {sorted(unknown)}")
    try:
        specs = [ProcessSpec.from_dict(d) for d in args.models]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad model spec: {exc}") from exc
    fit_seed = int(fit_cfg.get("seed", args.seed))
    models = {}
    for k in (0, 1):
        models[k] = csrmod.fit_csr(
            int(fit_cfg.get("n_mean", 300)), int(fit_cfg.get("n_null", 200)),
            int(fit_cfg.get("n_points", 100)), k, grid, phi, fit_seed,
            p_level=float(args.p_level), jobs=int(args.jobs),
        )
    table = csrmod.power_study(specs, int(args.n_test), models, int(args.seed),
                               jobs=int(args.jobs))
    out_dir = Path(args.out)
    atomic_write_text(out_dir / "power.csv", table.to_csv_text())
    atomic_write_text(out_dir / "power.txt", table.to_aligned_text())
    for k, model in models.items():
        csrmod.save_csr_model(model, out_dir / f"csr_model_dim{k}")
    outputs = [str(out_dir / "power.csv"), str(out_dir / "power.txt")]
    if args.figures:
        from .plotting import save_power_chart

        save_power_chart(table, out_dir / "power.png")
        outputs.append(str(out_dir / "power.png"))
    sys.stderr.write(table.to_aligned_text())
    _summary("power", t0, n_test=int(args.n_test),
             counts={f"dim{d}": row.tolist() for d, row in zip(table.dims, table.counts)},
             out_dir=str(out_dir))


def cmd_subsample(args) -> None:
    t0 = time.time()
    _merge_config(args, {"points": ..., "cube": ..., "count": ..., "scale": 1.0,
                         "out": ...})
    pattern = read_points(args.points)
    scale = float(args.scale)
    if scale <= 0:
        raise ConfigError(f"--scale must be positive, got {scale}")
    edge = float(args.cube)
    if edge <= 0:
        raise ConfigError(f"--cube must be positive, got {edge}")
    pts = pattern.points / scale
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    tiles_per_axis = np.floor((hi - lo) / edge).astype(int)
    if np.any(tiles_per_axis < 1):
        raise RankfieldError(
            f"cube edge {edge} does not fit inside the scaled data extent {(hi - lo).tolist()}"
        )
    bins = np.floor((pts - lo) / edge).astype(int)
    inside = np.all(bins < tiles_per_axis, axis=1)
    out_dir = Path(args.out)
    outputs = []
    index = 0
    for tile in sorted(map(tuple, np.unique(bins[inside], axis=0).tolist())):
        if index >= int(args.count):
            break
        mask = inside & np.all(bins == tile, axis=1)
        local = pts[mask] - (lo + np.array(tile) * edge)
        if len(local) == 0:
            continue
        window = np.stack([np.zeros(pts.shape[1]), np.full(pts.shape[1], edge)], axis=1)
        sub = PointPattern(np.clip(local, 0.0, edge), window)
        path = out_dir / f"subset_{index}.csv"
        atomic_write_text(path, format_points(sub, {"tile": " ".join(map(str, tile)),
                                                    "scale": scale}))
        outputs.append(str(path))
        index += 1
    if index < int(args.count):
        raise RankfieldError(
            f"only {index} non-empty disjoint cubes available, {args.count} requested"
        )
    _summary("subsample", t0, count=len(outputs), out_dir=str(out_dir))


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankfield",
        description="Persistence rank functions of point patterns: simulate, "
                    "persist, discretize, fit and test.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--config", help="JSON file with the command's parameters")
        return p

    p = add("simulate", cmd_simulate, help="draw seeded point patterns to CSV files")
    p.add_argument("--model", choices=["binomial", "poisson", "strauss", "matern",
                                       "baddeley-silverman"])
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--interaction-radius", dest="interaction_radius", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--offspring-mean", dest="offspring_mean", type=float)
    p.add_argument("--cluster-radius", dest="cluster_radius", type=float)
    p.add_argument("--max-attempts", dest="max_attempts", type=int)

    p = add("persist", cmd_persist, help="compute persistence diagrams of pattern files")
    p.add_argument("--patterns", nargs="+")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)

    p = add("rank", cmd_rank, help="discretize diagrams into rank functions")
    p.add_argument("--diagrams", nargs="+")
    p.add_argument("--grid", help="a0,a1,M")
    p.add_argument("--phi", help="indicator | exp:<rate>")
    p.add_argument("--dim", type=int)
    p.add_argument("--out")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction)

    p = add("mean", cmd_mean, help="pointwise mean of rank-function files")
    p.add_argument("--ranks", nargs="+")
    p.add_argument("--out")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction)

    p = add("pca", cmd_pca, help="functional PCA of rank-function files")
    p.add_argument("--ranks", nargs="+")
    p.add_argument("--components", type=int)
    p.add_argument("--out")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction)

    p = add("csr-fit", cmd_csr_fit, help="fit the CSR null model")
    p.add_argument("--n-mean", dest="n_mean", type=int)
    p.add_argument("--n-null", dest="n_null", type=int)
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--grid")
    p.add_argument("--phi")
    p.add_argument("--p-level", dest="p_level", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction)

    p = add("csr-test", cmd_csr_test, help="test pattern files against a fitted model")
    p.add_argument("--model")
    p.add_argument("--patterns", nargs="+")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction)

    p = add("power", cmd_power, help="run the power study from a JSON config")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")

    p = add("subsample", cmd_subsample, help="cut disjoint cubical subsets from a point file")
    p.add_argument("--points")
    p.add_argument("--cube", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--scale", type=float)
    p.add_argument("--out")

    return parser


def main(argv=None) -> int:
    level = os.environ.get("RANKFIELD_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (RankfieldError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
