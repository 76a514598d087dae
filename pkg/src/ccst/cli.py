"""Command line entry points: serve, solve, bench, replay.

Exit codes: 0 success, 1 usage problems, 2 bad input data, 3 runtime
failures (ports, configuration, divergence).
"""

from __future__ import annotations

import json as jsonlib
import sys
from pathlib import Path

import click

from . import gateway as gw
from .context import (
    ContextError,
    PayloadError,
    TemplateError,
    assemble,
    classify,
    from_payload,
    lint_prompt,
    load_template,
    parse_recommendations,
)
from .equations import EquationError, canonicalize, parse_equation, render, solve
from .equations import SolutionClass
from .planner import is_solved_canon, next_steps
from .service.eventlog import LogCorrupt
from .service.replay import replay as run_replay

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


@click.group()
def cli() -> None:
    """Equation tutoring sessions with live caregiver coaching suggestions."""


# --- serve -----------------------------------------------------------------------


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--llm-url", default=None, help="Base URL of the completion backend.")
@click.option("--model", default=None, help="Model name to request.")
@click.option(
    "--provider",
    type=click.Choice(["live", "mock"]),
    default="live",
    show_default=True,
    help="mock answers deterministically without a backend.",
)
@click.option("--template-id", default=7, show_default=True, type=int)
@click.option("--template-dir", default=None, help="Directory of prompt_<id>.txt overrides.")
@click.option("--rate-limit-secs", default=30.0, show_default=True, type=float)
@click.option("--notify-webhook", default=None, help="POST target for caregiver invites.")
@click.option("--log-file", default="ccst-events.jsonl", show_default=True)
@click.option("--public-url", default=None, help="Base URL printed in join links.")
@click.option("--ui-dist", default=None, help="Directory of built web assets to mount at /ui.")
@click.option("--problems", default=None, help="Comma-separated equations; creates a session at boot.")
def cmd_serve(
    host: str,
    port: int,
    llm_url: str | None,
    model: str | None,
    provider: str,
    template_id: int,
    template_dir: str | None,
    rate_limit_secs: float,
    notify_webhook: str | None,
    log_file: str,
    public_url: str | None,
    ui_dist: str | None,
    problems: str | None,
) -> None:
    """Run the session service."""
    import uvicorn

    from .service.app import ServiceSettings, create_app

    llm = gw.LLMConfig()
    if llm_url:
        llm = gw.LLMConfig(base_url=llm_url, model_name=llm.model_name)
    if model:
        llm = gw.LLMConfig(base_url=llm.base_url, model_name=model)
    settings = ServiceSettings(
        template_id=template_id,
        template_dir=template_dir,
        rate_limit_secs=rate_limit_secs,
        llm=llm,
        provider_mode=provider,
        notify_webhook=notify_webhook,
        log_path=Path(log_file),
        public_url=public_url or f"http://{host}:{port}",
        ui_dist=Path(ui_dist) if ui_dist else None,
    )
    try:
        app = create_app(settings)
    except TemplateError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)

    if problems:
        from .service.engine import ProblemSetError, validate_problems

        problem_list = [p.strip() for p in problems.split(",") if p.strip()]
        try:
            validate_problems(problem_list)
        except ProblemSetError as exc:
            click.echo(f"problem set error: {exc}", err=True)
            sys.exit(EXIT_DATA)

        def _boot_session() -> None:
            info = app.state.hub.create_session(problem_list, settings.public_url)
            click.echo(f"session {info['id']}")
            click.echo(f"  student:   {info['student_url']}")
            click.echo(f"  caregiver: {info['caregiver_url']}")

        app.state.boot_hooks.append(_boot_session)

    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as exc:
        if isinstance(exc, SystemExit):
            raise
        click.echo(f"bind error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


# --- solve -----------------------------------------------------------------------


@cli.command("solve")
@click.argument("equation")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def cmd_solve(equation: str, as_json: bool) -> None:
    """Solve one equation, showing each step."""
    try:
        eq = parse_equation(equation)
    except EquationError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    canon = canonicalize(eq)
    solution = solve(canon)
    if solution.kind is not SolutionClass.UNIQUE:
        diagnosis = (
            "identity: every value of x satisfies it"
            if solution.kind is SolutionClass.IDENTITY
            else "no solution: no value of x satisfies it"
        )
        if as_json:
            click.echo(jsonlib.dumps({"input": render(eq), "status": solution.kind.value}))
        else:
            click.echo(f"{render(eq)} has no unique solution ({diagnosis})", err=True)
        sys.exit(EXIT_DATA)

    steps: list[str] = []
    state, display = canon, eq
    while not is_solved_canon(state):
        best = next_steps(state, k=1, display=display)[0]
        steps.append(best.text)
        state, display = best.step.after, best.step.after_display
    final = f"x = {solution.value}"
    if as_json:
        click.echo(
            jsonlib.dumps(
                {"input": render(eq), "steps": steps, "solution": final, "status": "solved"}
            )
        )
        return
    if not steps:
        click.echo("already solved")
    for step in steps:
        click.echo(step)
    click.echo(final)


# --- bench -----------------------------------------------------------------------


@cli.command("bench")
@click.option(
    "--fixtures",
    "fixtures_path",
    required=True,
    type=click.Path(exists=False),
    help="A payload JSON file, or a directory of them.",
)
@click.option("--templates", default="1,2,3,4,5,6,7", show_default=True)
@click.option(
    "--provider", type=click.Choice(["mock", "live"]), default="mock", show_default=True
)
@click.option("--llm-url", default=None)
@click.option("--model", default=None)
@click.option("--template-dir", default=None)
@click.option("--json", "as_json", is_flag=True)
def cmd_bench(
    fixtures_path: str,
    templates: str,
    provider: str,
    llm_url: str | None,
    model: str | None,
    template_dir: str | None,
    as_json: bool,
) -> None:
    """Assemble and run prompts over recorded context fixtures."""
    root = Path(fixtures_path)
    if root.is_dir():
        files = sorted(root.glob("*.json"))
    elif root.is_file():
        files = [root]
    else:
        click.echo(f"fixture error: no such path {root}", err=True)
        sys.exit(EXIT_DATA)
    if not files:
        click.echo(f"fixture error: no *.json files under {root}", err=True)
        sys.exit(EXIT_DATA)

    try:
        template_ids = [int(part) for part in templates.split(",") if part.strip()]
    except ValueError:
        click.echo("usage error: --templates must be comma-separated ids", err=True)
        sys.exit(EXIT_USAGE)

    snapshots = []
    for path in files:
        try:
            snapshots.append((path.name, from_payload(path.read_text(encoding="utf-8"))))
        except (OSError, PayloadError) as exc:
            click.echo(f"fixture error: {path}: {exc}", err=True)
            sys.exit(EXIT_DATA)

    config = gw.config_from_env(gw.LLMConfig())
    if llm_url:
        config = gw.LLMConfig(base_url=llm_url, model_name=config.model_name)
    if model:
        config = gw.LLMConfig(base_url=config.base_url, model_name=model)
    mock = gw.MockProvider()

    rows: list[dict] = []
    transport_trouble = False
    for template_id in template_ids:
        try:
            template = load_template(template_id, template_dir)
        except TemplateError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
        for name, snapshot in snapshots:
            prompt = assemble(template, snapshot)
            lint = lint_prompt(prompt, snapshot, template)
            row = {
                "fixture": name,
                "template": template_id,
                "context_class": classify(snapshot).value,
                "words": lint.word_count,
                "concise": lint.concise,
                "logical": lint.logical,
                "explicit": lint.explicit,
                "adaptive": lint.adaptive,
                "reflective": lint.reflective,
            }
            try:
                if provider == "mock":
                    result = mock.generate(prompt)
                else:
                    result = gw.generate(prompt, config)
                row["latency_ms"] = round(result.latency_ms, 1)
                try:
                    parse_recommendations(result.text)
                    row["status"] = "ok"
                except ContextError:
                    row["status"] = "parse_error"
            except gw.TimeoutError:
                row["status"] = "timeout"
                transport_trouble = True
            except gw.TransportError:
                row["status"] = "transport_error"
                transport_trouble = True
            except gw.ProviderError:
                row["status"] = "provider_error"
                transport_trouble = True
            rows.append(row)

    if as_json:
        click.echo(jsonlib.dumps({"rows": rows}))
    else:
        header = f"{'fixture':<28} {'tpl':>3} {'class':<16} {'words':>5} {'status':<15} CLEAR"
        click.echo(header)
        click.echo("-" * len(header))
        for row in rows:
            clear = "".join(
                letter if row[check] else "-"
                for letter, check in (
                    ("C", "concise"),
                    ("L", "logical"),
                    ("E", "explicit"),
                    ("A", "adaptive"),
                    ("R", "reflective"),
                )
            )
            click.echo(
                f"{row['fixture']:<28} {row['template']:>3} {row['context_class']:<16} "
                f"{row['words']:>5} {row['status']:<15} {clear}"
            )
        ok = sum(1 for row in rows if row["status"] == "ok")
        click.echo(f"{ok}/{len(rows)} generations parsed")
    if transport_trouble:
        click.echo("warning: the live backend was not reachable for some rows", err=True)


# --- replay ----------------------------------------------------------------------


@cli.command("replay")
@click.argument("log_path", type=click.Path())
@click.option("--template-dir", default=None)
@click.option("--json", "as_json", is_flag=True)
def cmd_replay(log_path: str, template_dir: str | None, as_json: bool) -> None:
    """Re-run an event log and verify it reproduces itself."""
    path = Path(log_path)
    if not path.is_file():
        click.echo(f"data error: no such log {path}", err=True)
        sys.exit(EXIT_DATA)
    try:
        result = run_replay(path, template_dir)
    except LogCorrupt as exc:
        click.echo(f"log corrupt: {exc}", err=True)
        sys.exit(EXIT_DATA)
    if as_json:
        click.echo(
            jsonlib.dumps(
                {
                    "identical": result.identical,
                    "records": result.records_checked,
                    "sessions": result.sessions,
                    "divergence": None
                    if result.divergence is None
                    else {
                        "position": result.divergence.position,
                        "expected": result.divergence.expected,
                        "actual": result.divergence.actual,
                    },
                }
            )
        )
        if not result.identical:
            sys.exit(EXIT_RUNTIME)
        return
    if result.identical:
        click.echo(
            f"identical ({result.records_checked} records, {result.sessions} sessions)"
        )
        return
    div = result.divergence
    click.echo(f"divergence at record {div.position}:", err=True)
    click.echo(f"  expected: {div.expected}", err=True)
    click.echo(f"  actual:   {div.actual}", err=True)
    sys.exit(EXIT_RUNTIME)


def main() -> None:
    try:
        cli.main(standalone_mode=False, auto_envvar_prefix="CCST")
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
