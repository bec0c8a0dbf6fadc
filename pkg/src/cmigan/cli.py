"""Command-line interface.

Subcommands: datagen (synthetic datasets + sidecars), estimate (MI/CMI
on generated or CSV data), citest (manifest-driven benchmark), gradcheck
(finite-difference audit of the network engine), bench (generate a
labeled CIT suite and score it end to end).

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Progress goes to stderr; results go to stdout and report files, with the
fully resolved run configuration embedded in every JSON report so a run
can be replayed bit-for-bit from its own output.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .citest import DEFAULT_THRESHOLD, run_cit_benchmark
from .datagen import MODEL_IDS, gen_cit, gen_gauss, gen_linear1, gen_linear2, gen_linear3, gen_nonlinear, true_cmi
from .dataio import (
    ColumnMapping,
    DataError,
    ManifestEntry,
    load_csv,
    read_manifest,
    save_csv,
    write_manifest,
    write_sidecar,
)
from .estimators import ESTIMATOR_IDS, EstimatorConfig, estimate
from .knn import KSGConfig
from .neuralnet import NumericalError, gradient_check

log = logging.getLogger("cmigan")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

SEED_ENV = "CMIGAN_SEED"


class UsageError(ValueError):
    """Bad flag combinations that argparse cannot see."""


def _default_seed() -> int:
    try:
        return int(os.environ.get(SEED_ENV, "0"))
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _cols(text: str | None) -> list:
    if text is None:
        return []
    return [part.strip() for part in text.split(",") if part.strip() != ""]


def _generate(model: str, n: int, seed: int, dz=None, d=None, rho=None, dependent=None):
    """Dispatch a generator from CLI-ish arguments; returns (samples, params, label|None)."""
    if model == "linear1":
        s, p = gen_linear1(n, dz if dz is not None else 1, seed)
    elif model == "linear2":
        s, p = gen_linear2(n, dz if dz is not None else 1, seed)
    elif model == "linear3":
        s, p = gen_linear3(n, d if d is not None else 1, seed)
    elif model == "nonlinear":
        s, p = gen_nonlinear(n, dz if dz is not None else 1, seed)
    elif model == "cit":
        s, p, label = gen_cit(n, dz if dz is not None else 1, bool(dependent), seed)
        return s, p, label
    elif model == "gauss":
        if rho is None:
            raise UsageError("--rho is required for the gauss model")
        s, p = gen_gauss(n, d if d is not None else 1, rho, seed)
    else:
        raise UsageError(f"unknown model {model!r}")
    return s, p, None


def _estimator_config(args, seed: int) -> EstimatorConfig:
    base = EstimatorConfig.cit_defaults() if args.cit_defaults else EstimatorConfig()
    overrides = dict(
        runs=args.runs,
        seed=seed,
        standardize=not args.no_standardize,
        record_trace=args.trace is not None,
    )
    if args.steps is not None:
        overrides["training_steps"] = args.steps
    if args.batch_size is not None:
        overrides["batch_size"] = args.batch_size
    if args.lr is not None:
        overrides["initial_lr"] = args.lr
    if args.reg_hidden is not None:
        overrides["reg_hidden"] = tuple(_int_list(args.reg_hidden))
    if args.gen_hidden is not None:
        overrides["gen_hidden"] = tuple(_int_list(args.gen_hidden))
    if args.ratio is not None:
        overrides["reg_training_ratio"] = args.ratio
    if args.noise_dim is not None:
        overrides["noise_dim"] = args.noise_dim
    if args.eval_passes is not None:
        overrides["eval_passes"] = args.eval_passes
    if args.lr_interval is not None:
        overrides["lr_interval_steps"] = args.lr_interval
    if args.lr_decay is not None:
        overrides["lr_decay_factor"] = args.lr_decay
    if args.lr_mode is not None:
        overrides["lr_mode"] = args.lr_mode
    return dataclasses.replace(base, **overrides)


def _dataset_spec_from_args(args) -> dict:
    if args.data is not None and args.model is not None:
        raise UsageError("give either --data or --model, not both")
    if args.data is not None:
        if args.dims is not None:
            dims = _int_list(args.dims)
            if len(dims) != 3:
                raise UsageError("--dims must be dx,dy,dz")
            mapping = None
        elif args.x_cols or args.y_cols:
            if not (args.x_cols and args.y_cols):
                raise UsageError("--x-cols and --y-cols must be given together")
            mapping = {
                "x_cols": _cols(args.x_cols),
                "y_cols": _cols(args.y_cols),
                "z_cols": _cols(args.z_cols),
            }
            dims = None
        else:
            raise UsageError("CSV input needs --dims or --x-cols/--y-cols[/--z-cols]")
        return {
            "kind": "csv",
            "path": os.path.abspath(args.data),
            "dims": dims,
            "mapping": mapping,
            "semicolon": args.semicolon,
            "normalize": args.normalize,
            "shuffle_seed": args.shuffle_seed,
        }
    if args.model is not None:
        return {
            "kind": "model",
            "model": args.model,
            "n": args.n,
            "dz": args.dz,
            "d": args.d,
            "rho": args.rho,
            "dependent": args.dependent,
            "seed": args.data_seed,
        }
    raise UsageError("an input is required: --data FILE or --model NAME")


def _load_dataset(spec: dict):
    if spec["kind"] == "model":
        samples, _, _ = _generate(
            spec["model"],
            spec["n"],
            spec["seed"],
            dz=spec.get("dz"),
            d=spec.get("d"),
            rho=spec.get("rho"),
            dependent=spec.get("dependent"),
        )
        return samples
    if spec["kind"] == "csv":
        if spec.get("dims") is not None:
            dx, dy, dz = spec["dims"]
            header = None
            with open(spec["path"], encoding="utf-8") as fh:
                reader = csv.reader(fh, delimiter=";" if spec["semicolon"] else ",")
                header = next(reader, None)
            if header is None:
                raise DataError(f"{spec['path']} is empty")
            if dx + dy + dz != len(header):
                raise DataError(
                    f"--dims {dx},{dy},{dz} does not cover the {len(header)} CSV columns"
                )
            mapping = ColumnMapping(
                x_cols=list(range(dx)),
                y_cols=list(range(dx, dx + dy)),
                z_cols=list(range(dx + dy, dx + dy + dz)),
                normalization=spec.get("normalize", "none"),
                shuffle_seed=spec.get("shuffle_seed"),
            )
        else:
            m = spec["mapping"]
            mapping = ColumnMapping(
                x_cols=m["x_cols"],
                y_cols=m["y_cols"],
                z_cols=m.get("z_cols", []),
                normalization=spec.get("normalize", "none"),
                shuffle_seed=spec.get("shuffle_seed"),
            )
        loaded = load_csv(spec["path"], mapping, semicolon=spec["semicolon"])
        log.info(
            "loaded %s: %d rows kept, %d dropped", spec["path"], loaded.kept_rows, loaded.dropped_rows
        )
        return loaded.samples
    raise UsageError(f"unknown dataset kind {spec['kind']!r}")


def _write_json(path: str | None, doc: dict):
    text = json.dumps(doc, indent=2)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        log.info("wrote %s", path)
    print(text)


def _write_trace(path: str, report_dict: dict):
    runs = report_dict["diagnostics"].get("runs", [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "step", "reg_loss", "gen_loss"])
        for run_idx, run in enumerate(runs):
            for step, reg, gen in run.get("trace", []):
                writer.writerow([run_idx, step, format(reg, ".17g"), format(gen, ".17g")])
    log.info("wrote %s", path)


def cmd_datagen(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    samples, params, label = _generate(
        args.model, args.n, seed, dz=args.dz, d=args.d, rho=args.rho, dependent=args.dependent
    )
    save_csv(samples, args.out)
    truth = true_cmi(params)
    sidecar = write_sidecar(args.out, params, truth)
    summary = {
        "csv": args.out,
        "sidecar": sidecar,
        "n": samples.n,
        "dims": list(samples.dims),
        "true_cmi": truth,
    }
    if label is not None:
        summary["label"] = label
    _write_json(None, summary)
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        run_config = doc.get("run_config", doc)
    else:
        seed = args.seed if args.seed is not None else _default_seed()
        run_config = {
            "command": "estimate",
            "estimator": args.estimator,
            "dataset": _dataset_spec_from_args(args),
            "estimator_config": _estimator_config(args, seed).to_dict(),
            "ksg": {"k": args.k},
            "threshold": None,
        }
    estimator = run_config["estimator"]
    if estimator not in ESTIMATOR_IDS:
        raise UsageError(f"unknown estimator {estimator!r}")
    cfg = EstimatorConfig.from_dict(run_config["estimator_config"])
    ksg_cfg = KSGConfig(k=run_config.get("ksg", {}).get("k", 5))
    samples = _load_dataset(run_config["dataset"])

    start = time.monotonic()
    report = estimate(samples, estimator, cfg, jobs=args.jobs, ksg_config=ksg_cfg)
    wall = time.monotonic() - start
    log.info("%s done in %.1fs: mean=%s std=%s", estimator, wall, report.mean, report.std)

    doc = {
        "run_config": run_config,
        "report": report.to_dict(),
        "wall_time_s": wall,
        "version": __version__,
    }
    if args.trace is not None:
        _write_trace(args.trace, doc["report"])
    # traces are bulky and already in the CSV; keep the JSON lean
    for run in doc["report"]["diagnostics"].get("runs", []):
        run.pop("trace", None)
    _write_json(args.out, doc)
    if not report.per_run or not np.isfinite(report.mean):
        log.error("all %d runs failed", cfg.runs)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_citest(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    entries = read_manifest(args.manifest)
    base = os.path.dirname(os.path.abspath(args.manifest))
    datasets, ids = [], []
    for entry in entries:
        path = entry.csv if os.path.isabs(entry.csv) else os.path.join(base, entry.csv)
        dx, dy, dz = entry.dims
        mapping = ColumnMapping(
            x_cols=list(range(dx)),
            y_cols=list(range(dx, dx + dy)),
            z_cols=list(range(dx + dy, dx + dy + dz)),
        )
        datasets.append((load_csv(path, mapping).samples, entry.label))
        ids.append(entry.csv)
    cfg = _estimator_config(args, seed)
    run_config = {
        "command": "citest",
        "estimator": args.estimator,
        "manifest": os.path.abspath(args.manifest),
        "estimator_config": cfg.to_dict(),
        "ksg": {"k": args.k},
        "threshold": args.threshold,
    }
    start = time.monotonic()
    report = run_cit_benchmark(
        datasets,
        args.estimator,
        cfg,
        threshold=args.threshold,
        ksg_config=KSGConfig(k=args.k),
        ids=ids,
        jobs=args.jobs,
    )
    wall = time.monotonic() - start
    log.info("citest done in %.1fs: auroc=%s", wall, report.auroc)
    _write_json(args.out, {
        "run_config": run_config,
        "report": report.to_dict(),
        "wall_time_s": wall,
        "version": __version__,
    })
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    report = gradient_check(num_nets=args.nets, seed=args.seed or 0, h=args.h, tol=args.tol)
    doc = report.to_dict()
    _write_json(args.out, doc)
    if report.passed:
        log.info("gradient check passed: worst rel err %.3g", report.worst_rel_err)
        return EXIT_OK
    log.error("gradient check FAILED: worst rel err %.3g", report.worst_rel_err)
    return EXIT_NUMERICAL


def cmd_bench(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    os.makedirs(args.outdir, exist_ok=True)
    entries = []
    datasets = []
    suite_rng_seed = args.suite_seed
    for i in range(args.n_ci + args.n_cd):
        dependent = i >= args.n_ci
        ds_seed = suite_rng_seed + i
        samples, params, label = gen_cit(args.n, args.dz, dependent, ds_seed)
        name = f"cit_{label.lower()}_{i:03d}.csv"
        path = os.path.join(args.outdir, name)
        save_csv(samples, path)
        write_sidecar(path, params, true_cmi(params))
        entries.append(ManifestEntry(name, label, samples.dims))
        datasets.append((samples, label))
    manifest_path = os.path.join(args.outdir, "manifest.json")
    write_manifest(manifest_path, entries)
    log.info("wrote %d datasets and %s", len(entries), manifest_path)
    if args.generate_only:
        _write_json(None, {"manifest": manifest_path, "datasets": len(entries)})
        return EXIT_OK

    cfg = _estimator_config(args, seed)
    run_config = {
        "command": "bench",
        "estimator": args.estimator,
        "manifest": os.path.abspath(manifest_path),
        "estimator_config": cfg.to_dict(),
        "ksg": {"k": args.k},
        "threshold": args.threshold,
    }
    start = time.monotonic()
    report = run_cit_benchmark(
        datasets,
        args.estimator,
        cfg,
        threshold=args.threshold,
        ksg_config=KSGConfig(k=args.k),
        ids=[e.csv for e in entries],
        jobs=args.jobs,
    )
    wall = time.monotonic() - start
    log.info("bench done in %.1fs: auroc=%s", wall, report.auroc)
    _write_json(args.out, {
        "run_config": run_config,
        "report": report.to_dict(),
        "wall_time_s": wall,
        "version": __version__,
    })
    return EXIT_OK


def _add_estimator_flags(p: argparse.ArgumentParser):
    p.add_argument("--runs", type=int, default=1, help="independent training runs to average")
    p.add_argument("--seed", type=int, default=None,
                   help=f"base seed (default: ${SEED_ENV} or 0); run r uses seed+r")
    p.add_argument("--steps", type=int, default=None, help="training steps per run")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None, help="initial learning rate")
    p.add_argument("--reg-hidden", default=None, help="regression net hidden widths, e.g. 128,32")
    p.add_argument("--gen-hidden", default=None, help="generator hidden widths, e.g. 256,64")
    p.add_argument("--ratio", type=int, default=None, help="regressor updates per generator update")
    p.add_argument("--noise-dim", type=int, default=None)
    p.add_argument("--eval-passes", type=int, default=None)
    p.add_argument("--lr-interval", type=int, default=None, help="steps per decay interval")
    p.add_argument("--lr-decay", type=float, default=None, help="total decay factor")
    p.add_argument("--lr-mode", choices=["total_decay", "per_interval"], default=None)
    p.add_argument("--cit-defaults", action="store_true",
                   help="start from the conditional-independence-testing hyperparameters")
    p.add_argument("--no-standardize", action="store_true", help="skip per-column z-scoring")
    p.add_argument("--k", type=int, default=5, help="kNN order for the ksg estimator")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes for runs")
    p.add_argument("--trace", default=None, metavar="CSV", help="write per-step losses here")
    p.add_argument("--out", "-o", default=None, metavar="JSON", help="write the report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmigan",
        description="Conditional mutual information estimation and independence testing.",
    )
    parser.add_argument("--version", action="version", version=f"cmigan {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only warnings on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate a synthetic dataset with a JSON sidecar")
    p.add_argument("--model", required=True, choices=MODEL_IDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dz", type=int, default=None, help="conditioning dimension (linear1/2, nonlinear, cit)")
    p.add_argument("--d", type=int, default=None, help="per-block dimension (linear3, gauss)")
    p.add_argument("--rho", type=float, default=None, help="pair correlation (gauss)")
    dep = p.add_mutually_exclusive_group()
    dep.add_argument("--dependent", dest="dependent", action="store_true", default=False)
    dep.add_argument("--independent", dest="dependent", action="store_false")
    p.add_argument("--out", "-o", required=True, metavar="CSV")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("estimate", help="estimate MI or CMI on a dataset")
    p.add_argument("--estimator", choices=ESTIMATOR_IDS, default=None)
    p.add_argument("--data", default=None, metavar="CSV")
    p.add_argument("--dims", default=None, help="dx,dy,dz for CSVs whose columns are ordered [x|y|z]")
    p.add_argument("--x-cols", default=None, help="comma-separated names or indices")
    p.add_argument("--y-cols", default=None)
    p.add_argument("--z-cols", default=None)
    p.add_argument("--semicolon", action="store_true",
                   help="CSV uses ';' separators and ',' decimals")
    p.add_argument("--normalize", choices=["none", "zscore"], default="none",
                   help="normalization applied at load time (the estimators standardize anyway)")
    p.add_argument("--shuffle-seed", type=int, default=None, help="shuffle CSV rows with this seed")
    p.add_argument("--model", choices=MODEL_IDS, default=None, help="generate input data inline")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--dz", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--rho", type=float, default=None)
    dep = p.add_mutually_exclusive_group()
    dep.add_argument("--dependent", dest="dependent", action="store_true", default=False)
    dep.add_argument("--independent", dest="dependent", action="store_false")
    p.add_argument("--data-seed", type=int, default=0, help="seed for inline generation")
    p.add_argument("--config", default=None, metavar="JSON",
                   help="replay the run configuration embedded in an earlier report")
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("citest", help="run a manifest of labeled datasets through a CI test")
    p.add_argument("--manifest", required=True, metavar="JSON")
    p.add_argument("--estimator", choices=ESTIMATOR_IDS, required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="decision threshold in nats (strict >)")
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_citest)

    p = sub.add_parser("gradcheck", help="finite-difference audit of the network gradients")
    p.add_argument("--nets", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out", "-o", default=None, metavar="JSON")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="generate a labeled CIT suite and score it")
    p.add_argument("--outdir", required=True)
    p.add_argument("--n-ci", type=int, default=10)
    p.add_argument("--n-cd", type=int, default=10)
    p.add_argument("--dz", type=int, default=1)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--suite-seed", type=int, default=0, help="dataset i uses suite-seed+i")
    p.add_argument("--estimator", choices=ESTIMATOR_IDS, default="ksg")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--generate-only", action="store_true")
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("usage: %s", exc)
        return EXIT_USAGE
    except DataError as exc:
        log.error("data: %s", exc)
        return EXIT_DATA
    except NumericalError as exc:
        log.error("numerical: %s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        log.error("usage: %s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("data: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
