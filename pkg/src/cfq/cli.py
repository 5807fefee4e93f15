"""Command-line interface.

Exit codes: 0 on success, 1 for operational failures (provider errors,
bad input files, unknown ids), 2 for configuration and usage errors.

Reports are written as small CSV tables so they pipe into other tools;
pass --figures to also render PNG charts next to that output.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional

from . import analytics, corpus, pipeline, textbook
from .bank import Store
from .config import Config, StoreConfig, build_gateway, load_config, open_store
from .errors import CfqError, ConfigError
from .gateway import CompletionRequest, record_fixture, request_fingerprint
from .promptgen import CATEGORY_ORDER, PromptCategory, build_question_prompt

CATEGORY_NAMES = [c.value for c in CATEGORY_ORDER]
FUNCTIONAL_NAMES = [c.value for c in corpus.FunctionalCategory]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfq",
        description="Generate, review, and publish counterfactual questions about small programs.",
    )
    parser.add_argument("--config", help="path to the config file (default: $CFQ_CONFIG)")
    parser.add_argument("--store", help="override the store directory (':memory:' for none)")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="generate questions for challenges")
    generate.add_argument("--challenge", action="append", help="challenge id (repeatable; default all)")
    generate.add_argument("--category", action="append", choices=CATEGORY_NAMES,
                          help="prompt category (repeatable; default all)")

    gen_program = commands.add_parser("gen-program", help="generate a new challenge program")
    gen_program.add_argument("--title", required=True)
    gen_program.add_argument("--goal", required=True)
    gen_program.add_argument("--category", required=True, choices=FUNCTIONAL_NAMES)

    suggest = commands.add_parser("suggest-labels", help="ask the model to label stored questions")
    suggest.add_argument("--challenge", action="append")
    suggest.add_argument("--refresh", action="store_true",
                         help="supersede existing model suggestions")

    report = commands.add_parser("report", help="compute agreement and composition reports")
    kinds = report.add_subparsers(dest="kind", required=True)
    agreement = kinds.add_parser("agreement", help="confusion matrix, percent agreement, kappa")
    agreement.add_argument("--annotators", nargs=2, required=True, metavar=("A", "B"))
    agreement.add_argument("--challenge")
    proportions = kinds.add_parser("proportions", help="exact proportions of one dimension")
    proportions.add_argument("--dimension", required=True, choices=["labels", "themes", "categories"])
    proportions.add_argument("--challenge")
    crosstab = kinds.add_parser("crosstab", help="prompt category by designated label")
    crosstab.add_argument("--challenge")
    for sub in (agreement, proportions, crosstab):
        sub.add_argument("--out", help="write the CSV here instead of stdout")
        sub.add_argument("--figures", help="directory to render PNG figures into")

    export = commands.add_parser("export", help="export the labeled dataset")
    export.add_argument("--format", default="csv", choices=["csv", "jsonl"])
    export.add_argument("--out", help="write here instead of stdout")

    imp = commands.add_parser("import", help="import a labeled dataset")
    imp.add_argument("path")
    imp.add_argument("--format", default="csv", choices=["csv", "jsonl"])

    enhance = commands.add_parser("enhance", help="render the enhanced document for a challenge")
    enhance.add_argument("--challenge", required=True)
    enhance.add_argument("--format", default="json", choices=["json", "html"])
    enhance.add_argument("--out", help="write here instead of stdout")

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)

    fixtures = commands.add_parser(
        "record-fixtures",
        help="write replay fixtures from responses archived in the store",
    )
    fixtures.add_argument("--out", required=True, help="fixtures directory")
    fixtures.add_argument("--challenge", action="append")
    fixtures.add_argument("--category", action="append", choices=CATEGORY_NAMES)

    return parser


def _emit(text: str, out: Optional[str], stdout) -> None:
    if out is None:
        stdout.write(text)
        if not text.endswith("\n"):
            stdout.write("\n")
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _categories(names: Optional[list[str]]) -> Optional[list[PromptCategory]]:
    if names is None:
        return None
    return [PromptCategory(name) for name in names]


def _format_number(value: float) -> str:
    return repr(value)


def cmd_generate(args, store: Store, config: Config, stdout) -> int:
    gateway = build_gateway(config)
    report = pipeline.generate_questions(store, gateway, args.challenge, _categories(args.category))
    for line in report.summary_lines():
        stdout.write(line + "\n")
    return 0


def cmd_gen_program(args, store: Store, config: Config, stdout) -> int:
    gateway = build_gateway(config)
    challenge = pipeline.generate_program(
        store, gateway, args.goal, args.title, corpus.FunctionalCategory(args.category)
    )
    stdout.write(f"added challenge {challenge.id} ({len(challenge.source)} lines)\n")
    return 0


def cmd_suggest_labels(args, store: Store, config: Config, stdout) -> int:
    gateway = build_gateway(config)
    created = pipeline.suggest_labels(store, gateway, args.challenge, refresh=args.refresh)
    for annotation in created:
        stdout.write(f"{annotation.question_id} {annotation.label.value}\n")
    stdout.write(f"suggested {len(created)} labels\n")
    return 0


def _agreement_csv(report: analytics.AgreementReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    labels = [cls.value for cls in report.matrix.classes]
    writer.writerow([""] + labels)
    for cls, row in zip(labels, report.matrix.counts):
        writer.writerow([cls] + list(row))
    writer.writerow(["pairs", report.pairs])
    writer.writerow(["percent_agreement", _format_number(report.percent_agreement)])
    writer.writerow(["kappa", "Undefined" if report.kappa is None else _format_number(report.kappa)])
    return buffer.getvalue()


def _proportions_csv(proportions: dict) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["key", "fraction", "decimal"])
    for key, value in proportions.items():
        name = getattr(key, "value", key)
        writer.writerow([name, str(value), _format_number(float(value))])
    return buffer.getvalue()


def _crosstab_csv(report: analytics.CrosstabReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["category"] + [cls.value for cls in report.labels])
    for category, row in zip(report.categories, report.counts):
        writer.writerow([category.value] + list(row))
    return buffer.getvalue()


def cmd_report(args, store: Store, config: Config, stdout) -> int:
    figures_dir = Path(args.figures) if args.figures else None
    if args.kind == "agreement":
        report = analytics.agreement_report(
            store, args.annotators[0], args.annotators[1], args.challenge
        )
        text = _agreement_csv(report)
        figure = ("agreement.png", lambda path: _render_figures("agreement", report, path))
    elif args.kind == "proportions":
        if args.dimension == "labels":
            proportions = analytics.label_proportions(store, challenge_id=args.challenge)
        elif args.dimension == "themes":
            proportions = analytics.theme_proportions(store, challenge_id=args.challenge)
        else:
            proportions = analytics.category_proportions(store, challenge_id=args.challenge)
        text = _proportions_csv(proportions)
        figure = ("proportions.png", lambda path: _render_figures("proportions", proportions, path))
    else:
        report = analytics.crosstab(store, challenge_id=args.challenge)
        text = _crosstab_csv(report)
        figure = ("crosstab.png", lambda path: _render_figures("crosstab", report, path))
    _emit(text, args.out, stdout)
    if figures_dir is not None:
        name, renderer = figure
        written = renderer(figures_dir / name)
        stdout.write(f"wrote {written}\n")
    return 0


def _render_figures(kind: str, payload, path: Path) -> Path:
    # figures pull in matplotlib; keep that import out of report-only runs
    from . import figures

    if kind == "agreement":
        return figures.render_agreement(payload, path)
    if kind == "proportions":
        return figures.render_proportions(payload, path)
    return figures.render_crosstab(payload, path)


def cmd_export(args, store: Store, config: Config, stdout) -> int:
    text = store.export_dataset(format=args.format)
    _emit(text, args.out, stdout)
    if args.out:
        stdout.write(f"wrote {args.out}\n")
    return 0


def cmd_import(args, store: Store, config: Config, stdout) -> int:
    path = Path(args.path)
    if not path.exists():
        raise CfqError(f"dataset file not found: {path}")
    report = store.import_dataset(path.read_text(encoding="utf-8"), format=args.format)
    stdout.write(f"imported: inserted={len(report.inserted)} duplicates={len(report.duplicates)}\n")
    return 0


def cmd_enhance(args, store: Store, config: Config, stdout) -> int:
    document = textbook.enhance(store, args.challenge)
    _emit(textbook.render(document, format=args.format), args.out, stdout)
    if args.out:
        stdout.write(f"wrote {args.out}\n")
    return 0


def cmd_serve(args, store: Store, config: Config, stdout) -> int:
    import uvicorn

    from .service import build_app

    gateway = build_gateway(config)
    app = build_app(store, gateway, token=config.service.token, ui_dir=config.service.ui)
    host = args.host or config.service.host
    port = args.port if args.port is not None else config.service.port
    stdout.write(f"serving on http://{host}:{port}\n")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def cmd_record_fixtures(args, store: Store, config: Config, stdout) -> int:
    challenges = (
        [store.get_challenge(cid) for cid in args.challenge]
        if args.challenge
        else store.challenges()
    )
    categories = _categories(args.category) or list(CATEGORY_ORDER)
    provider = config.provider
    written = 0
    skipped = 0
    for challenge in challenges:
        for category in categories:
            prompt = build_question_prompt(category, challenge)
            request = CompletionRequest(
                body=prompt.body,
                model=provider.model,
                temperature=provider.temperature,
                max_output=provider.max_output,
            )
            text = store.get_response(request_fingerprint(request))
            if text is None:
                skipped += 1
                continue
            record_fixture(args.out, request, text)
            written += 1
    stdout.write(f"wrote {written} fixtures to {args.out} (skipped {skipped} without responses)\n")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "gen-program": cmd_gen_program,
    "suggest-labels": cmd_suggest_labels,
    "report": cmd_report,
    "export": cmd_export,
    "import": cmd_import,
    "enhance": cmd_enhance,
    "serve": cmd_serve,
    "record-fixtures": cmd_record_fixtures,
}


def main(argv: Optional[list[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        if args.store is not None:
            path = None if args.store == ":memory:" else args.store
            config = Config(
                provider=config.provider,
                store=StoreConfig(path=path),
                catalog=config.catalog,
                service=config.service,
            )
        store = open_store(config)
        return _COMMANDS[args.command](args, store, config, stdout)
    except ConfigError as exc:
        stderr.write(f"error: {exc}\n")
        return 2
    except CfqError as exc:
        stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
