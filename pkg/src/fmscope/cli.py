"""Command-line entry point: analyze, convert, variant, eval run/report.

Exit codes: 0 success, 1 domain or parse error, 2 usage error or missing
input, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import AoKind, Oracle, run_ao
from .blueprint import generate_variant, load_blueprint, render_blueprint
from .model import Configuration, FeatureModel, FmError
from .uvl import parse_uvl, render_uvl

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_MODELS = Path(__file__).resolve().parent / "data" / "models.json"


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def detect_format(path: Path, text: str) -> str:
    suffix = path.suffix.lower()
    if suffix == ".uvl":
        return "uvl"
    if suffix in (".bp", ".blueprint"):
        return "bp"
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith(("//", "#")):
            continue
        return "uvl" if stripped.split()[0] in ("features", "namespace") else "bp"
    return "bp"


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def load_model(path: str, fmt: str = "auto") -> tuple[FeatureModel, str]:
    """Load a blueprint or UVL file; returns the model and the format used."""
    p = Path(path)
    text = _read(path)
    if fmt == "auto":
        fmt = detect_format(p, text)
    if fmt == "uvl":
        doc = parse_uvl(text, p.stem)
        for w in doc.warnings:
            _err(f"warning: {w}")
        return doc.model, fmt
    return load_blueprint(text, p.stem), fmt


def render(fm: FeatureModel, fmt: str) -> str:
    return render_uvl(fm) if fmt == "uvl" else render_blueprint(fm)


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# commands

def cmd_analyze(args) -> int:
    kinds = AoKind.parse_list(args.ao)
    fm, _ = load_model(args.input, args.format)
    config = special = None
    if args.config:
        config = Configuration.from_json(json.loads(_read(args.config)))
    if args.pair:
        special, _ = load_model(args.pair, args.format)
    explicit = args.ao.strip().lower() != "all"
    if explicit:
        if AoKind.AO11 in kinds and config is None:
            raise UsageError("AO11 needs --config")
        if AoKind.AO16 in kinds and special is None:
            raise UsageError("AO16 needs --pair")
    oracle = Oracle(fm)
    results, skipped = {}, []
    for kind in kinds:
        extra = config if kind.needs_config else special if kind.needs_pair else None
        if (kind.needs_config or kind.needs_pair) and extra is None:
            skipped.append(kind.code)
            continue
        results[kind] = run_ao(kind, oracle, extra)
    void = oracle.void
    if void:
        _err("warning: void")
    for code in skipped:
        _err(f"note: {code} skipped ({'--config' if code == 'AO11' else '--pair'} not given)")
    if args.json:
        doc = {"model": fm.name, "void": void,
               "results": {k.code: r.to_json() for k, r in results.items()},
               "skipped": skipped}
        print(json.dumps(doc, sort_keys=False))
    else:
        for kind, res in results.items():
            print(f"{kind.code}\t{res.text()}")
    return EXIT_OK


def cmd_convert(args) -> int:
    fm, _ = load_model(args.input, args.format)
    _write(args.output, render(fm, args.to))
    return EXIT_OK


def cmd_variant(args) -> int:
    fm, fmt = load_model(args.input, args.format)
    try:
        variant = generate_variant(fm, args.seed, args.swaps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.output, render(variant, fmt))
    return EXIT_OK


def cmd_eval_run(args) -> int:
    from .harness.prompts import load_templates
    from .harness.providers import HttpProvider, MockProvider, load_model_configs
    from .harness.runner import RecordStore, load_cases, run_matrix

    models = load_model_configs(args.models)
    if args.model:
        wanted = set(args.model)
        unknown = wanted - {m.model_id for m in models}
        if unknown:
            raise UsageError(f"unknown model ids: {sorted(unknown)}")
        models = [m for m in models if m.model_id in wanted]
    cases = load_cases(args.blueprints)
    if not cases:
        raise UsageError(f"no *.bp files in {args.blueprints}")
    kinds = AoKind.parse_list(args.aos)
    provider = MockProvider.from_file(args.mock) if args.mock else HttpProvider()
    for m in models:
        provider.check(m)
    templates = load_templates(args.prompts)
    store = RecordStore(args.out)
    n = 0
    for rec in run_matrix(models, cases, kinds, provider, store, args.concurrency, templates):
        n += 1
        print(f"{rec.model_id}\t{rec.blueprint}\t{rec.ao.code}\t"
              f"{'correct' if rec.correct else 'wrong'}\t{rec.failure.value}")
    _err(f"{n} new records written to {args.out}")
    return EXIT_OK


def cmd_eval_report(args) -> int:
    from .harness.report import aggregate, summary_text, write_report
    from .harness.runner import read_records

    report = aggregate(read_records(args.records))
    if args.dest:
        for p in write_report(report, args.dest):
            _err(f"wrote {p}")
    if args.json:
        print(json.dumps(report.to_json(), sort_keys=True))
    else:
        sys.stdout.write(summary_text(report))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmscope", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt_opts = dict(choices=("auto", "bp", "uvl"), default="auto",
                    help="input format (default: by extension, then content)")

    p = sub.add_parser("analyze", help="run analysis operations on a model")
    p.add_argument("input")
    p.add_argument("--format", **fmt_opts)
    p.add_argument("--ao", default="all", help="comma-separated AO codes or 'all'")
    p.add_argument("--config", help="configuration JSON for AO11")
    p.add_argument("--pair", help="special model for AO16 (the input is the general one)")
    p.add_argument("--json", action="store_true", help="emit one JSON object")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("convert", help="convert between blueprint and UVL")
    p.add_argument("input")
    p.add_argument("output", help="output path, '-' for stdout")
    p.add_argument("--to", choices=("bp", "uvl"), required=True)
    p.add_argument("--format", **fmt_opts)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("variant", help="flip relationship kinds to build a paired variant")
    p.add_argument("input")
    p.add_argument("output", help="output path, '-' for stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--swaps", type=int, default=1)
    p.add_argument("--format", **fmt_opts)
    p.set_defaults(func=cmd_variant)

    ev = sub.add_parser("eval", help="LLM evaluation matrix")
    evsub = ev.add_subparsers(dest="eval_command", required=True)
    p = evsub.add_parser("run", help="run (or resume) the model x blueprint x AO matrix")
    p.add_argument("--models", default=str(DEFAULT_MODELS), help="model config JSON")
    p.add_argument("--model", action="append", help="restrict to this model id (repeatable)")
    p.add_argument("--blueprints", required=True,
                   help="directory of NAME.bp with optional NAME.config.json / NAME.pair.bp")
    p.add_argument("--aos", default="all")
    p.add_argument("--out", required=True, help="records file (JSON lines, appended)")
    p.add_argument("--mock", help="canned-response fixture file instead of live providers")
    p.add_argument("--prompts", help="prompt template directory")
    p.add_argument("--concurrency", type=int, default=4)
    p.set_defaults(func=cmd_eval_run)
    p = evsub.add_parser("report", help="aggregate a records file")
    p.add_argument("records")
    p.add_argument("--dest", help="directory for CSV tables and summary.txt")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from .harness.providers import ProviderConfigError
    from .harness.runner import RecordFileError
    try:
        return args.func(args)
    except UsageError as exc:
        _err(f"error: {exc}")
        return EXIT_USAGE
    except ProviderConfigError as exc:
        _err(f"error: {exc}")
        return EXIT_USAGE
    except RecordFileError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_IO
    except (FmError, ValueError, json.JSONDecodeError) as exc:
        _err(f"error: {exc}")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
