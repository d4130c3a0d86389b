"""Command-line entry point: `odontorank <command> ...`.

Every command writes its outputs plus a manifest.json into --out-dir.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, aggregators, datagen
from .core import (TOOTH_COLUMNS, Odontogram, RecordError, Role, criteria_matrix,
                   extract_criteria, outcomes, parse_odontogram_file, write_odontogram_file)
from .evaluation import (PairedCaseSet, RankingStats, cmc, evaluate_all, order_candidates,
                         split_data)
from .experiment import cross_validate, run_benchmark
from .learned import GaConfig, save_model
from .learned.ga import MODEL_KINDS, ConfigError
from .specs import SPEC_HELP, ModelSpecError, parse_densities, parse_model_spec

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------------

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class Run:
    """Collects outputs of one command and writes them with a manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.outputs: list[str] = []
        self.config: dict = {}
        self.start = time.perf_counter()

    def write(self, name: str, text: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        path.write_text(text)
        self.outputs.append(str(path))
        return path

    def table(self, name: str, header, rows) -> Path:
        return self.write(name, _csv_text(header, rows))

    def manifest(self) -> None:
        a = self.args
        inputs = {k: getattr(a, k) for k in ("am", "pm", "cases", "config", "densities")
                  if getattr(a, k, None)}
        m = {
            "command": a.command,
            "argv": getattr(a, "argv", []),
            "config": self.config,
            "seed": getattr(a, "seed", None),
            "inputs": inputs,
            "outputs": self.outputs,
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "duration_s": round(time.perf_counter() - self.start, 3),
        }
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / "manifest.json").write_text(json.dumps(m, indent=1) + "\n")


def _load_records(args) -> list[Odontogram]:
    fmt = getattr(args, "format", None)
    if args.cases:
        if args.am or args.pm:
            raise UsageError("use either --cases or --am/--pm")
        return parse_odontogram_file(args.cases, fmt)
    if not (args.am and args.pm):
        raise UsageError("need --cases, or both --am and --pm")
    ams = parse_odontogram_file(args.am, fmt)
    pms = parse_odontogram_file(args.pm, fmt)
    if any(r.role is not Role.AM for r in ams) or any(r.role is not Role.PM for r in pms):
        raise ValueError("--am must hold only AM records and --pm only PM records")
    return ams + pms


def _load_cases(args) -> PairedCaseSet:
    return PairedCaseSet.from_records(_load_records(args))


def _training_portion(cases: PairedCaseSet, seed: int | None) -> PairedCaseSet:
    if seed is None:
        raise UsageError("a lambda measure needs --seed (to split off the test set) "
                         "or --densities")
    held = set(split_data(cases, seed).test)
    return cases.subset([i for i in range(len(cases)) if i not in held])


def _model(args, cases: PairedCaseSet | None = None):
    """Resolve --model; lambda densities come from --densities or the non-test cases."""
    spec = args.model
    densities = None
    if getattr(args, "densities", None):
        densities = parse_densities(Path(args.densities).read_text())
    train = None
    if densities is None and (spec.endswith(":lambda") or spec.startswith("file:")):
        if cases is not None and args.seed is not None:
            train = _training_portion(cases, args.seed)
        elif spec.endswith(":lambda"):
            raise UsageError("a lambda measure needs paired cases with --seed, or --densities")
    return parse_model_spec(spec, densities, train)


def _ga_config(args) -> GaConfig:
    base = {}
    if args.config:
        base = GaConfig.from_text(Path(args.config).read_text()).to_dict()
    for key in ("generations", "population_size"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    base["seed"] = args.seed
    return GaConfig.from_dict(base)


# -- commands --------------------------------------------------------------------

def cmd_generate(args, run: Run) -> None:
    if args.scenario == "custom":
        if not args.config:
            raise UsageError("--scenario custom needs --config")
        from .learned import read_key_values

        kv = read_key_values(Path(args.config).read_text())
        kv["seed"] = args.seed
        cfg = datagen.GenConfig.from_dict(kv)
    else:
        cfg = datagen.benchmark_configs(args.seed)[args.scenario]
    cases = datagen.generate(cfg)
    run.config = {"scenario": args.scenario, **cfg.to_dict()}
    ext = "json" if args.format == "json" else "csv"
    path = run.out_dir / f"cases.{ext}"
    run.out_dir.mkdir(parents=True, exist_ok=True)
    write_odontogram_file(cases.records(), path, args.format or "csv")
    run.outputs.append(str(path))
    print(f"wrote {len(cases)} case pairs to {path}")


def _find(records, case_id: str, role: Role) -> Odontogram:
    for r in records:
        if r.case_id == case_id and r.role is role:
            return r
    raise ValueError(f"unknown {role.value} id {case_id!r}")


def cmd_compare(args, run: Run) -> None:
    records = _load_records(args)
    am = _find(records, args.am_id, Role.AM)
    pm = _find(records, args.pm_id, Role.PM)
    c = extract_criteria(am, pm)
    rows = [(col, a.value, p.value, o.name.lower())
            for col, a, p, o in zip(TOOTH_COLUMNS, am.teeth, pm.teeth, outcomes(am, pm))]
    crit = [("exact_group", c.exact_group), ("n_match", c.n_match),
            ("n_mismatch", c.n_mismatch), ("pct_match", c.pct_match),
            ("pct_possible", c.pct_possible), ("n_possible", c.n_possible),
            ("pct_mismatch", c.pct_mismatch), ("n_comparable", c.n_comparable)]
    run.config = {"am_id": args.am_id, "pm_id": args.pm_id}
    run.table("criteria.csv", ("criterion", "value"), crit)
    run.table("teeth.csv", ("tooth", "am", "pm", "outcome"), rows)
    print(f"AM {am.case_id} vs PM {pm.case_id}")
    for k, v in crit:
        print(f"  {k:13s} {v}")
    for r in rows:
        print("  " + " ".join(f"{x:9s}" for x in r))


def cmd_rank(args, run: Run) -> None:
    records = _load_records(args)
    ams = [r for r in records if r.role is Role.AM]
    pms = [r for r in records if r.role is Role.PM]
    if not ams or not pms:
        raise ValueError("need at least one AM and one PM record")
    paired = None
    if any(r.case_id in {a.case_id for a in ams} for r in pms):
        try:
            paired = PairedCaseSet.from_records(records)
        except ValueError:
            paired = None
    model = _model(args, paired)
    run.config = {"model": args.model}
    out = []
    crit = criteria_matrix(pms, ams)
    for i, pm in enumerate(pms):
        order, values = order_candidates(crit[i], model)
        out.extend((pm.case_id, k + 1, ams[j].case_id, repr(float(values[j])))
                   for k, j in enumerate(order))
    run.table("ranking.csv", ("pm_id", "rank", "am_id", "score"), out)
    print(f"ranked {len(ams)} AM candidates for {len(pms)} PM records")


def _eval_subset(args, cases: PairedCaseSet) -> PairedCaseSet:
    if args.subset == "all":
        return cases
    if args.seed is None:
        raise UsageError("--subset test needs --seed")
    return cases.subset(split_data(cases, args.seed).test)


def cmd_eval(args, run: Run) -> None:
    cases = _load_cases(args)
    model = _model(args, cases)
    target = _eval_subset(args, cases)
    ev = evaluate_all(target, model, ties=args.ties)
    run.config = {"model": args.model, "subset": args.subset, "ties": args.ties}
    run.table("stats.csv", RankingStats.HEADER, [ev.stats.row()])
    run.table("positions.csv", ("case_id", "correct_position"),
              zip(ev.case_ids, (int(p) for p in ev.positions)))
    run.table("cmc.csv", ("rank", "coverage_pct"), cmc(ev.positions, len(target)))
    print(",".join(RankingStats.HEADER))
    print(",".join(str(x) for x in ev.stats.row()))


def cmd_search_lex(args, run: Run) -> None:
    cases = _load_cases(args)
    entries = aggregators.search_lex_orders(cases, ties=args.ties)
    aa, lo = aggregators.aa_order(), aggregators.lo_order()
    rows = []
    for rank, e in enumerate(entries, start=1):
        rows.append((rank, str(e.order), e.average, e.maximum,
                     int(rank == 1), int(e.order == aa), int(e.order == lo)))
    run.config = {"ties": args.ties, "n_cases": len(cases)}
    run.table("lex_search.csv", ("rank", "order", "average", "max", "top", "aa", "lo"), rows)
    for r in rows:
        if r[4] or r[5] or r[6]:
            tag = "top" if r[4] else ("AA" if r[5] else "LO")
            print(f"{tag:3s} rank {r[0]:4d}  avg {r[2]:.4f}  max {r[3]}  {r[1]}")


def cmd_split(args, run: Run) -> None:
    cases = _load_cases(args)
    split = split_data(cases, args.seed)
    run.config = {"test_fraction": 0.2, "n_folds": 5}
    run.table("split.csv", ("case_id", "assignment"),
              zip(cases.case_ids, split.assignment(len(cases))))
    print(f"test {len(split.test)}; folds " + " ".join(str(len(v)) for _, v in split.folds))


def _fold_rows(cv):
    return [tuple(r) for r in cv.fold_table()]


FOLD_HEADER = ("fold", "train_average", "train_max", "validation_average", "validation_max")


def cmd_train(args, run: Run) -> None:
    cases = _load_cases(args)
    cfg = _ga_config(args)
    cv = cross_validate(cases, args.model_kind, cfg, args.seed)
    best = cv.folds[cv.best].result
    run.config = {"model_kind": args.model_kind, **cfg.to_dict()}
    run.out_dir.mkdir(parents=True, exist_ok=True)
    model_path = run.out_dir / "model.json"
    save_model(model_path, best.model, best.config, best.fitness)
    run.outputs.append(str(model_path))
    run.table("history.csv", ("generation", "best_fitness"), enumerate(best.history))
    run.table("folds.csv", FOLD_HEADER, _fold_rows(cv))
    test = cases.subset(cv.split.test)
    stats = evaluate_all(test, best.model, ties=cfg.ties).stats
    run.table("test_stats.csv", RankingStats.HEADER, [stats.row()])
    print(f"best fold {cv.best + 1}; test average {stats.average:.4f}")


def cmd_benchmark(args, run: Run) -> None:
    cfg = _ga_config(args)
    kinds = tuple(args.kinds.split(",")) if args.kinds else MODEL_KINDS
    res = run_benchmark(args.seed, cfg, kinds)
    run.config = {"kinds": list(kinds), **cfg.to_dict()}
    run.out_dir.mkdir(parents=True, exist_ok=True)
    path = run.out_dir / "cases.csv"
    write_odontogram_file(res.cases.records(), path)
    run.outputs.append(str(path))
    run.table("test_stats.csv", ("model",) + RankingStats.HEADER,
              [(name,) + s.row() for name, s in res.test_stats.items()])
    n_test = len(res.split.test)
    for name, pos in res.test_positions.items():
        slug = name.lower().replace("-", "_")
        run.table(f"cmc_{slug}.csv", ("rank", "coverage_pct"), cmc(pos, n_test))
    for kind, cv in res.trained.items():
        run.table(f"folds_{kind}.csv", FOLD_HEADER, _fold_rows(cv))
        save_model(run.out_dir / f"model_{kind}.json", cv.model)
        run.outputs.append(str(run.out_dir / f"model_{kind}.json"))
    for name, s in res.test_stats.items():
        print(f"{name:15s} average {s.average:.4f}  max {s.max}")


# -- parser ------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, records: bool = True, seed: str = "optional"):
    if records:
        p.add_argument("--cases", help="record file holding AM and PM records")
        p.add_argument("--am", help="AM record file")
        p.add_argument("--pm", help="PM record file")
    p.add_argument("--format", choices=("csv", "json"),
                   help="record file format (default: by file extension)")
    p.add_argument("--out-dir", default="out", help="output directory (default: out)")
    if seed == "required":
        p.add_argument("--seed", type=int, required=True)
    elif seed == "optional":
        p.add_argument("--seed", type=int,
                       help="split seed; the lambda measure is fitted on the non-test part")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="odontorank",
                                 description="Rank dental-record comparisons for identification.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a seeded synthetic case set")
    _common(p, records=False, seed="required")
    p.add_argument("--scenario", choices=("easy", "noisy", "large", "custom"), default="large")
    p.add_argument("--config", help="generator key = value file (for --scenario custom)")

    p = sub.add_parser("compare", help="criteria and per-tooth outcomes for one pair")
    _common(p, seed="none")
    p.add_argument("--am-id", required=True)
    p.add_argument("--pm-id", required=True)

    for name, helptext in (("rank", "rank AM candidates for every PM record"),
                           ("eval", "ranking statistics and CMC for a paired case set")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--model", required=True, help=SPEC_HELP)
        p.add_argument("--densities", help="file with 7 lambda-measure densities")
        p.add_argument("--ties", choices=("pessimistic", "optimistic"), default="pessimistic")
        if name == "eval":
            p.add_argument("--subset", choices=("all", "test"), default="all")

    p = sub.add_parser("search-lex", help="evaluate all 5040 lexicographic orders")
    _common(p, seed="none")
    p.add_argument("--ties", choices=("pessimistic", "optimistic"), default="pessimistic")

    p = sub.add_parser("split", help="write the test/fold assignment")
    _common(p, seed="required")

    p = sub.add_parser("train", help="5-fold genetic training of a scoring model")
    _common(p, seed="required")
    p.add_argument("--model-kind", choices=MODEL_KINDS, required=True)
    p.add_argument("--config", help="GA key = value file")
    p.add_argument("--generations", type=int)
    p.add_argument("--population-size", type=int)

    p = sub.add_parser("benchmark", help="generate, split, train and evaluate end to end")
    _common(p, records=False, seed="required")
    p.add_argument("--config", help="GA key = value file")
    p.add_argument("--generations", type=int)
    p.add_argument("--population-size", type=int)
    p.add_argument("--kinds", help="comma-separated subset of linear,symbolic,mlp")
    return ap


COMMANDS = {
    "generate": cmd_generate, "compare": cmd_compare, "rank": cmd_rank, "eval": cmd_eval,
    "search-lex": cmd_search_lex, "split": cmd_split, "train": cmd_train,
    "benchmark": cmd_benchmark,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    args.argv = argv
    run = Run(args)
    try:
        COMMANDS[args.command](args, run)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (RecordError, ConfigError, json.JSONDecodeError, OSError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ModelSpecError, ValueError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # noqa: BLE001
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    run.manifest()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
