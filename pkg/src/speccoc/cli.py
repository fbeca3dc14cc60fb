"""
cli.py

Command-line front end for the spectral cocycle toolkit.

Commands:
- run:          execute the command named in a run config
- lyapunov:     finite-n exponent along xi or along omega s
- dimension:    lower local dimension from the cocycle, over an omega grid
- singularity:  chi_hat scan against half of log theta_1 for one substitution
- gr:           G_R curve and log-log slope from twisted ergodic integrals
- rauzy:        Rauzy-Veech moves of an interval exchange
- verify:       property suites

Every command accepts --config; flags override the config, which overrides
data/config/defaults.yaml. Exit codes: 0 ok, 1 invalid config, 2 precondition
violated, 3 numerical failure, 4 verify failure.
"""

from __future__ import annotations

import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import typer
import yaml
from pydantic import ValidationError

from ..config_loader import load_run_config
from .errors import InputFileError, NumericalFailure, PreconditionError
from .models import RunConfig, parse_csv_floats, parse_csv_ints
from .pipeline import run
from .records import record_to_json, rows_to_csv, write_csv, write_json

logger = logging.getLogger(__name__)

# commands whose primary output is the row table
CSV_COMMANDS = frozenset({"dimension", "gr"})

app = typer.Typer(
    add_completion=False,
    no_args_is_help=True,
    help="Spectral cocycle of substitution and S-adic systems.",
)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _resolve_path(p: str | Path) -> Path:
    return Path(p).expanduser().resolve()


def _put(doc: Dict[str, Any], path: str, value: Any) -> None:
    """doc['a']['b'] = value for path 'a.b'; None values are skipped."""
    if value is None:
        return
    *parents, leaf = path.split(".")
    for key in parents:
        doc = doc.setdefault(key, {})
    doc[leaf] = value


def _csv_items(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    return [x.strip() for x in text.split(",") if x.strip()]


def _omega_grid(text: Optional[str]) -> Any:
    """'start:stop:count[:log]' or a comma separated list of frequencies."""
    if text is None:
        return None
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ValueError("grid must be start:stop:count or start:stop:count:log")
        grid = {"start": float(parts[0]), "stop": float(parts[1]), "count": int(parts[2])}
        if len(parts) == 4:
            grid["spacing"] = parts[3]
        return grid
    return parse_csv_floats(text)


def _function(text: Optional[str]) -> Optional[Dict[str, Any]]:
    """'simple:<csv complex>' or 'lipschitz:<profile csv>'."""
    if text is None:
        return None
    kind, _, rest = text.partition(":")
    if kind == "simple":
        return {"kind": "simple", "b": _csv_items(rest) or None}
    if kind == "lipschitz":
        return {"kind": "lipschitz", "profile_path": rest}
    raise ValueError(f"function must be simple:<values> or lipschitz:<file>, got {text!r}")


def _directive(subs: Optional[List[str]], explicit: bool) -> Optional[Dict[str, Any]]:
    if not subs:
        return None
    return {"type": "explicit" if explicit else "periodic", "subs": list(subs)}


@contextmanager
def _flag_errors() -> Iterator[None]:
    """Malformed flag values are config errors (exit 1)."""
    try:
        yield
    except ValueError as e:
        print(f"[ERROR] Invalid flag value: {e}", file=sys.stderr)
        raise typer.Exit(1)


def _execute(
    command: Optional[str],
    config: Optional[Path],
    overrides: Dict[str, Any],
    json_out: Optional[Path],
    csv_out: Optional[Path],
) -> int:
    try:
        raw = load_run_config(_resolve_path(config) if config else None, overrides)
        if command is not None:
            _put(raw, "analysis.command", command)
        cfg = RunConfig.model_validate(raw)
    except ValidationError as e:
        print("[ERROR] Run config failed validation:", file=sys.stderr)
        print(e, file=sys.stderr)
        return 1
    except (OSError, yaml.YAMLError, ValueError) as e:
        print(f"[ERROR] Failed to load run config: {e}", file=sys.stderr)
        return 1

    try:
        record = run(cfg)
    except InputFileError as e:
        print(f"[ERROR] {cfg.analysis.command}: {e}", file=sys.stderr)
        return 1
    except PreconditionError as e:
        print(f"[ERROR] {cfg.analysis.command}: precondition violated: {e}", file=sys.stderr)
        return 2
    except NumericalFailure as e:
        print(f"[ERROR] {cfg.analysis.command}: numerical failure: {e}", file=sys.stderr)
        return 3

    json_path = json_out or cfg.output.json_path
    csv_path = csv_out or cfg.output.csv_path
    # table commands print their rows; the record goes to a file only when asked for
    table_stdout = record.command in CSV_COMMANDS and not csv_path
    if json_path:
        written = write_json(record, _resolve_path(json_path))
        print(f"[INFO] Wrote JSON record: {written}", file=sys.stderr)
    elif not table_stdout:
        sys.stdout.write(record_to_json(record))
    if csv_path:
        written = write_csv(record.rows, _resolve_path(csv_path))
        print(f"[INFO] Wrote CSV table: {written} ({len(record.rows)} rows)", file=sys.stderr)
    elif table_stdout:
        sys.stdout.write(rows_to_csv(record.rows))

    if record.exit_code == 3:
        print(f"[WARN] {record.command}: results carry a numerical-failure marker", file=sys.stderr)
    elif record.exit_code == 4:
        failed = ", ".join(record.outputs.get("failed", []))
        print(f"[ERROR] verify: failed invariants: {failed}", file=sys.stderr)
    else:
        print(f"[OK] {record.command} finished in {record.wall_time:.2f}s", file=sys.stderr)
    return record.exit_code


# ---------------------------------------------------------------------------
# Shared options
# ---------------------------------------------------------------------------

ConfigOpt = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML).")
JsonOpt = typer.Option(None, "--json-out", help="Write the JSON record here instead of stdout.")
CsvOpt = typer.Option(None, "--csv-out", help="Write the row table as CSV.")
SubOpt = typer.Option(None, "--sub", help="Substitution (stock name, '1:12;2:1' or JSON); repeat for a period.")
ExplicitOpt = typer.Option(False, "--explicit", help="Treat --sub terms as a finite explicit sequence.")
SeedOpt = typer.Option(None, "--seed", help="Master seed.")
ThreadsOpt = typer.Option(None, "--threads", help="Worker threads (default: SPECCOC_THREADS or CPUs, max 8).")


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging on stderr.")) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@app.command("run")
def cmd_run(
    config: Path = typer.Option(..., "--config", "-c", help="Run config (JSON or YAML)."),
    json_out: Optional[Path] = JsonOpt,
    csv_out: Optional[Path] = CsvOpt,
) -> None:
    """Execute the command named in the config."""
    raise typer.Exit(_execute(None, config, {}, json_out, csv_out))


@app.command("lyapunov")
def cmd_lyapunov(
    config: Optional[Path] = ConfigOpt,
    sub: Optional[List[str]] = SubOpt,
    explicit: bool = ExplicitOpt,
    xi: Optional[str] = typer.Option(None, "--xi", help="Torus point, comma separated reals."),
    omega: Optional[float] = typer.Option(None, "--omega", help="Frequency; the point is omega s."),
    s: Optional[str] = typer.Option(None, "--s", help="Roof vector, comma separated."),
    level: Optional[int] = typer.Option(None, "--level"),
    n: Optional[int] = typer.Option(None, "--n"),
    vector: Optional[str] = typer.Option(None, "--vector", help="z for the vector exponent, e.g. '1,1-2i'."),
    exact: bool = typer.Option(False, "--exact", help="Use xi as given, without generic completion."),
    seed: Optional[int] = SeedOpt,
    json_out: Optional[Path] = JsonOpt,
    csv_out: Optional[Path] = CsvOpt,
) -> None:
    """Finite-n Lyapunov exponent of the spectral cocycle."""
    with _flag_errors():
        ov: Dict[str, Any] = {}
        _put(ov, "directive", _directive(sub, explicit))
        _put(ov, "suspension.s", None if s is None else parse_csv_floats(s))
        _put(ov, "suspension.level", level)
        _put(ov, "analysis.xi", None if xi is None else parse_csv_floats(xi))
        _put(ov, "analysis.omega", omega)
        _put(ov, "analysis.n", n)
        _put(ov, "analysis.vector", _csv_items(vector))
        _put(ov, "analysis.seed", seed)
        if exact:
            _put(ov, "analysis.generic", False)
    raise typer.Exit(_execute("lyapunov", config, ov, json_out, csv_out))


@app.command("dimension")
def cmd_dimension(
    config: Optional[Path] = ConfigOpt,
    sub: Optional[List[str]] = SubOpt,
    explicit: bool = ExplicitOpt,
    omega: Optional[float] = typer.Option(None, "--omega"),
    omega_grid: Optional[str] = typer.Option(None, "--omega-grid", help="start:stop:count[:log] or a list."),
    s: Optional[str] = typer.Option(None, "--s", help="Roof vector, comma separated."),
    self_similar: bool = typer.Option(False, "--self-similar", help="Use the Perron-Frobenius roof."),
    level: Optional[int] = typer.Option(None, "--level"),
    function: Optional[str] = typer.Option(None, "--function", help="simple:<values> or lipschitz:<file>."),
    variant: Optional[str] = typer.Option(None, "--variant", help="vector or matrix."),
    n: Optional[int] = typer.Option(None, "--n"),
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    json_out: Optional[Path] = JsonOpt,
    csv_out: Optional[Path] = CsvOpt,
) -> None:
    """Lower local dimension d = 2 - 2 chi / lambda over an omega grid."""
    with _flag_errors():
        ov: Dict[str, Any] = {}
        _put(ov, "directive", _directive(sub, explicit))
        _put(ov, "suspension.s", None if s is None else parse_csv_floats(s))
        if self_similar:
            _put(ov, "suspension.self_similar", True)
        _put(ov, "suspension.level", level)
        _put(ov, "function", _function(function))
        _put(ov, "analysis.omega", omega)
        _put(ov, "analysis.omega_grid", _omega_grid(omega_grid))
        _put(ov, "analysis.variant", variant)
        _put(ov, "analysis.n", n)
        _put(ov, "analysis.seed", seed)
        _put(ov, "analysis.threads", threads)
    raise typer.Exit(_execute("dimension", config, ov, json_out, csv_out))


@app.command("singularity")
def cmd_singularity(
    config: Optional[Path] = ConfigOpt,
    sub: Optional[str] = typer.Option(None, "--sub", help="The substitution."),
    grid: Optional[str] = typer.Option(None, "--grid", help="start:stop:count[:log] or a list."),
    s: Optional[str] = typer.Option(None, "--s", help="Roof vector, comma separated."),
    self_similar: bool = typer.Option(False, "--self-similar", help="Use the Perron-Frobenius roof."),
    n: Optional[int] = typer.Option(None, "--n"),
    margin: Optional[float] = typer.Option(None, "--margin"),
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    json_out: Optional[Path] = JsonOpt,
    csv_out: Optional[Path] = CsvOpt,
) -> None:
    """Singularity scan of one substitution against half of log theta_1."""
    with _flag_errors():
        ov: Dict[str, Any] = {}
        _put(ov, "directive", _directive([sub] if sub else None, False))
        _put(ov, "suspension.s", None if s is None else parse_csv_floats(s))
        if self_similar:
            _put(ov, "suspension.self_similar", True)
        _put(ov, "analysis.omega_grid", _omega_grid(grid))
        _put(ov, "analysis.n", n)
        _put(ov, "analysis.margin", margin)
        _put(ov, "analysis.seed", seed)
        _put(ov, "analysis.threads", threads)
    raise typer.Exit(_execute("singularity", config, ov, json_out, csv_out))


@app.command("gr")
def cmd_gr(
    config: Optional[Path] = ConfigOpt,
    sub: Optional[List[str]] = SubOpt,
    explicit: bool = ExplicitOpt,
    omega: Optional[float] = typer.Option(None, "--omega"),
    r_list: Optional[str] = typer.Option(None, "--R-list", help="Increasing window lengths, comma separated."),
    samples: Optional[int] = typer.Option(None, "--samples"),
    s: Optional[str] = typer.Option(None, "--s", help="Roof vector, comma separated."),
    level: Optional[int] = typer.Option(None, "--level"),
    function: Optional[str] = typer.Option(None, "--function", help="simple:<values> or lipschitz:<file>."),
    taper: Optional[str] = typer.Option(None, "--taper", help="G_R window: hann (default) or fejer."),
    seed: Optional[int] = SeedOpt,
    json_out: Optional[Path] = JsonOpt,
    csv_out: Optional[Path] = CsvOpt,
) -> None:
    """G_R(f, omega) over a list of R and the fitted local dimension."""
    with _flag_errors():
        ov: Dict[str, Any] = {}
        _put(ov, "directive", _directive(sub, explicit))
        _put(ov, "suspension.s", None if s is None else parse_csv_floats(s))
        _put(ov, "suspension.level", level)
        _put(ov, "function", _function(function))
        _put(ov, "analysis.omega", omega)
        _put(ov, "analysis.R_list", None if r_list is None else parse_csv_floats(r_list))
        _put(ov, "analysis.samples", samples)
        _put(ov, "analysis.taper", taper)
        _put(ov, "analysis.seed", seed)
    raise typer.Exit(_execute("gr", config, ov, json_out, csv_out))


@app.command("rauzy")
def cmd_rauzy(
    config: Optional[Path] = ConfigOpt,
    perm: Optional[str] = typer.Option(None, "--perm", help="Permutation, e.g. 4,3,2,1."),
    lam: Optional[str] = typer.Option(None, "--lambda", help="Interval lengths, comma separated."),
    random_seed: Optional[int] = typer.Option(None, "--random", help="Draw lengths from this seed."),
    steps: Optional[int] = typer.Option(None, "--steps"),
    accel: Optional[str] = typer.Option(None, "--accel", help="none or zorich."),
    rauzy_class: bool = typer.Option(False, "--class", help="Also report the Rauzy class size."),
    json_out: Optional[Path] = JsonOpt,
    csv_out: Optional[Path] = CsvOpt,
) -> None:
    """Rauzy-Veech moves with their substitutions and matrices."""
    with _flag_errors():
        ov: Dict[str, Any] = {}
        if perm is not None or lam is not None or random_seed is not None or accel is not None:
            _put(ov, "directive.type", "rauzy")
        _put(ov, "directive.perm", None if perm is None else parse_csv_ints(perm))
        _put(ov, "directive.lambda", None if lam is None else parse_csv_floats(lam))
        _put(ov, "directive.random_seed", random_seed)
        _put(ov, "directive.accel", accel)
        _put(ov, "analysis.steps", steps)
        if rauzy_class:
            _put(ov, "analysis.rauzy_class", True)
    raise typer.Exit(_execute("rauzy", config, ov, json_out, csv_out))


@app.command("verify")
def cmd_verify(
    config: Optional[Path] = ConfigOpt,
    suite: Optional[str] = typer.Option(None, "--suite", help="identities, oracles, towers or all."),
    fixture: Optional[List[str]] = typer.Option(None, "--fixture", help="Extra substitution to check; repeatable."),
    seed: Optional[int] = SeedOpt,
    json_out: Optional[Path] = JsonOpt,
    csv_out: Optional[Path] = CsvOpt,
) -> None:
    """Run the property suites; exit 4 when any invariant fails."""
    with _flag_errors():
        ov: Dict[str, Any] = {}
        _put(ov, "analysis.suite", suite)
        _put(ov, "analysis.fixtures", list(fixture) if fixture else None)
        _put(ov, "analysis.seed", seed)
    raise typer.Exit(_execute("verify", config, ov, json_out, csv_out))


if __name__ == "__main__":
    app()
