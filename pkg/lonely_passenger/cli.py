"""
Command-line front end.

Subcommands: exact, check, couple, mc, oracle. Exact tables are printed as
CSV or JSON; reports (check, couple, mc) are JSON envelopes. Exit codes:
0 success, 1 verification failure, 2 usage error, 3 resource limit.
"""

import csv
import functools
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
from pydantic import BaseModel
from tqdm import tqdm

from config.settings import LOG_FORMAT

from . import __version__
from .chain_engine import exact_joint_dist, lonely_dist, ne_nonempty_dist, p_lonely
from .config_manager import ConfigManager, config_manager
from .coupling_lab import CouplingKind, run_coupling, run_coupling_suite
from .dominance_checker import run_lemma_suite, verify_theorem
from .errors import InvalidParameterError, LonelyPassengerError, NullConditioningError, SizeLimitExceeded
from .exact_combinatorics import run_stirling_suite
from .mc_harness import estimate_mean_lonely, estimate_p, monotonicity_shadow
from .oracle import enumerate_joint, ne_enumerate, ne_slice, run_oracle_suite
from .reports import to_jsonable

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3


class ReportEnvelope(BaseModel):
    """Self-describing wrapper around every emitted payload."""

    command: str
    parameters: Dict[str, Any]
    version: str = __version__
    seed: Optional[int] = None
    payload: Any = None


@dataclass
class CliState:
    config: ConfigManager
    workers: int
    quiet: bool


# ==================== Output ====================

def _envelope(command: str, parameters: Dict[str, Any], payload: Any, seed: Optional[int] = None) -> ReportEnvelope:
    return ReportEnvelope(command=command, parameters=to_jsonable(parameters), seed=seed,
                          payload=to_jsonable(payload))


def emit_report(command: str, parameters: Dict[str, Any], payload: Any, seed: Optional[int] = None):
    click.echo(json.dumps(_envelope(command, parameters, payload, seed).model_dump(), indent=2))


def emit_table(command: str, parameters: Dict[str, Any], columns: Sequence[str],
               rows: List[Sequence[Any]], fmt: str, seed: Optional[int] = None):
    """Rows are outcomes; columns are fixed per command; exact values as "num/den"."""
    rows = [to_jsonable(list(row)) for row in rows]
    if fmt == "json":
        emit_report(command, parameters, {"columns": list(columns),
                                          "rows": [dict(zip(columns, row)) for row in rows]}, seed)
        return
    envelope = _envelope(command, parameters, None, seed).model_dump(exclude={"payload"})
    buffer = io.StringIO()
    buffer.write(f"# {json.dumps(envelope)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    click.echo(buffer.getvalue(), nl=False)


def _fail(error: Exception, code: int):
    click.echo(json.dumps({"success": False, "error": str(error)}), err=True)
    raise click.exceptions.Exit(code)


def api_errors(fn):
    """Map toolkit exceptions onto exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SizeLimitExceeded as e:
            _fail(e, EXIT_LIMIT)
        except (InvalidParameterError, NullConditioningError, KeyError) as e:
            _fail(e, EXIT_USAGE)
        except LonelyPassengerError as e:
            logger.error(f"{fn.__name__} failed: {e}")
            _fail(e, EXIT_FAILED)

    return wrapper


def _finish(passed: bool):
    if not passed:
        raise click.exceptions.Exit(EXIT_FAILED)


def _progress(state: CliState, total: int, desc: str) -> tqdm:
    return tqdm(total=total, desc=desc, disable=state.quiet or not sys.stderr.isatty())


format_option = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
                             help="Output format (default from config)")


def _fmt(state: CliState, fmt: Optional[str]) -> str:
    return fmt or state.config.get_output_format()


def _limit(state: CliState, limit: Optional[int]) -> int:
    return limit if limit is not None else state.config.get_enum_limit()


# ==================== Root ====================

@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Alternative configuration file")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                                               case_sensitive=False), default=None)
@click.option("--quiet", is_flag=True, help="Disable progress bars")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Worker processes")
@click.version_option(__version__)
@click.pass_context
def cli(ctx, config_path, log_level, quiet, workers):
    """Exact verification toolkit for lonely passengers on buses."""
    manager = ConfigManager(Path(config_path)) if config_path else config_manager
    level = (log_level or manager.get_log_level()).upper()
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr, force=True)
    ctx.obj = CliState(manager, workers or manager.get_workers(), quiet)


# ==================== exact ====================

@cli.group()
def exact():
    """Exact distributions and probabilities."""


@exact.command("p")
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
@format_option
@click.pass_obj
@api_errors
def exact_p(state, n, k, fmt):
    """Probability that some passenger travels alone."""
    emit_table("exact p", {"n": n, "k": k}, ["n", "k", "p"], [[n, k, p_lonely(n, k)]], _fmt(state, fmt))


@exact.command("dist")
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
@format_option
@click.pass_obj
@api_errors
def exact_dist(state, n, k, fmt):
    """Joint law of (N, L) after n arrivals."""
    rows = [[s.n_buses, s.lonely, prob] for s, prob in exact_joint_dist(n, k).items_sorted()]
    emit_table("exact dist", {"n": n, "k": k}, ["N", "L", "prob"], rows, _fmt(state, fmt))


@exact.command("lonely")
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
@format_option
@click.pass_obj
@api_errors
def exact_lonely(state, n, k, fmt):
    """Law of the lonely count L."""
    rows = [[j, prob] for j, prob in lonely_dist(n, k).items_sorted()]
    emit_table("exact lonely", {"n": n, "k": k}, ["L", "prob"], rows, _fmt(state, fmt))


@exact.command("ne")
@click.option("--l", "l", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--m", type=int, default=None, help="Single time index (default: all)")
@format_option
@click.pass_obj
@api_errors
def exact_ne(state, l, n, m, fmt):
    """Conditioned nonempty-count law when all l buses end nonempty."""
    times = range(n + 1) if m is None else [m]
    rows = [[t, i, prob] for t in times for i, prob in ne_nonempty_dist(l, n, t).items_sorted()]
    emit_table("exact ne", {"l": l, "n": n, "m": m}, ["m", "N", "prob"], rows, _fmt(state, fmt))


# ==================== check ====================

@cli.command()
@click.argument("suite", type=click.Choice(["theorem", "stirling", "lemmas", "oracle", "couplings"]))
@click.option("--n-max", type=int, default=None)
@click.option("--k-max", type=int, default=None)
@click.option("--limit", type=int, default=None, help="Enumeration limit for the oracle suite")
@click.option("--include-n1", is_flag=True, help="Add the n=1 row to the theorem grid")
@click.option("--paths", type=click.IntRange(min=1), default=None, help="Pairs per cell for the couplings suite")
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), default=None)
@click.pass_obj
@api_errors
def check(state, suite, n_max, k_max, limit, include_n1, paths, seed):
    """Run a verification suite; exit 1 if any check fails."""
    checks = state.config.get_checks_config()
    if suite == "theorem":
        n_max = n_max or checks["n_max"]
        k_max = k_max or checks["k_max"]
        report = verify_theorem(n_max, k_max, include_n1=include_n1, workers=state.workers)
        parameters = {"n_max": n_max, "k_max": k_max, "include_n1": include_n1}
    elif suite == "stirling":
        n_max = n_max or checks["stirling_n_max"]
        report = run_stirling_suite(n_max)
        parameters = {"n_max": n_max}
    elif suite == "lemmas":
        kwargs = {key: value for key, value in (("n_max", n_max), ("k_max", k_max)) if value}
        report = run_lemma_suite(**kwargs)
        parameters = report.parameters
    elif suite == "couplings":
        sampling = state.config.get_sampling_config()
        seed = sampling["default_seed"] if seed is None else seed
        report = run_coupling_suite(n_max or checks["coupling_n_max"], paths or sampling["paths"], seed,
                                    fit_n_max=checks["fit_n_max"], alpha=checks["fit_alpha"],
                                    workers=state.workers)
        parameters = report.parameters
    else:
        limit = _limit(state, limit)
        report = run_oracle_suite(limit, workers=state.workers)
        parameters = {"limit": limit}
    emit_report(f"check {suite}", parameters, report.to_dict(), seed if suite == "couplings" else None)
    _finish(report.passed)


# ==================== couple ====================

@cli.command()
@click.argument("kind", type=click.Choice([kind.value for kind in CouplingKind]))
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, default=None, help="Bus count for the forward coupling")
@click.option("--l", "l", type=int, default=None, help="Bus count for the conditioned couplings")
@click.option("--paths", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), default=None)
@click.option("--negative-control", is_flag=True, help="Swap components to check the checker")
@click.option("--fit/--no-fit", default=None, help="Marginal goodness of fit (default for small n)")
@click.pass_obj
@api_errors
def couple(state, kind, n, k, l, paths, seed, negative_control, fit):
    """Sample coupled path pairs and check the pathwise inequalities."""
    param = k if kind == CouplingKind.FORWARD.value else l
    if param is None:
        raise click.UsageError(f"couple {kind} needs --{'k' if kind == 'forward' else 'l'}")
    sampling = state.config.get_sampling_config()
    checks = state.config.get_checks_config()
    paths = paths or sampling["paths"]
    seed = sampling["default_seed"] if seed is None else seed
    if fit is None:
        fit = n <= checks["fit_n_max"]

    with _progress(state, paths, f"couple {kind}") as bar:
        run = run_coupling(kind, n, param, paths, seed, negative_control=negative_control,
                           fit=fit, alpha=checks["fit_alpha"], progress=bar.update)
    emit_report(f"couple {kind}", {"n": n, "param": param, "paths": paths,
                                   "negative_control": negative_control, "fit": fit},
                run.to_dict(), seed)
    _finish(run.passed)


# ==================== mc ====================

@cli.group()
def mc():
    """Monte Carlo estimates checked against exact values."""


def _mc_defaults(state: CliState, samples: Optional[int], seed: Optional[int]):
    sampling = state.config.get_sampling_config()
    return samples or sampling["paths"], sampling["default_seed"] if seed is None else seed


def _mc_options(fn):
    fn = click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), default=None)(fn)
    fn = click.option("--samples", type=click.IntRange(min=1), default=None)(fn)
    return fn


@mc.command("p")
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
@_mc_options
@click.pass_obj
@api_errors
def mc_p(state, n, k, samples, seed):
    """Estimate p for n passengers on k buses."""
    samples, seed = _mc_defaults(state, samples, seed)
    mc_config = state.config.get_mc_config()
    estimate = estimate_p(n, k, samples, seed, batch_size=state.config.get_batch_size(),
                          workers=state.workers, exact_ref_max_n=mc_config["exact_ref_max_n"])
    sigmas = mc_config["sigma_threshold"]
    emit_report("mc p", {"n": n, "k": k, "samples": samples, "sigma_threshold": sigmas},
                estimate.to_dict(), seed)
    _finish(estimate.within(sigmas))


@mc.command("mean")
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
@_mc_options
@click.pass_obj
@api_errors
def mc_mean(state, n, k, samples, seed):
    """Estimate the expected number of lonely passengers."""
    samples, seed = _mc_defaults(state, samples, seed)
    mc_config = state.config.get_mc_config()
    estimate = estimate_mean_lonely(n, k, samples, seed, batch_size=state.config.get_batch_size(),
                                    workers=state.workers, exact_ref_max_n=mc_config["exact_ref_max_n"])
    sigmas = mc_config["sigma_threshold"]
    emit_report("mc mean", {"n": n, "k": k, "samples": samples, "sigma_threshold": sigmas},
                estimate.to_dict(), seed)
    _finish(estimate.within(sigmas))


@mc.command("shadow")
@click.option("--n", type=int, required=True)
@click.option("--k-max", type=click.IntRange(min=1), default=10)
@_mc_options
@click.pass_obj
@api_errors
def mc_shadow(state, n, k_max, samples, seed):
    """Estimated p across k = 1..k_max; drops are reported, never fatal."""
    samples, seed = _mc_defaults(state, samples, seed)
    sigmas = state.config.get_mc_config()["sigma_threshold"]
    report = monotonicity_shadow(n, range(1, k_max + 1), samples, seed, sigmas=sigmas,
                                 batch_size=state.config.get_batch_size(), workers=state.workers)
    emit_report("mc shadow", {"n": n, "k_max": k_max, "samples": samples}, report.to_dict(), seed)


# ==================== oracle ====================

@cli.group()
def oracle():
    """Brute-force enumeration tables."""


@oracle.command("joint")
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
@click.option("--limit", type=int, default=None)
@format_option
@click.pass_obj
@api_errors
def oracle_joint(state, n, k, limit, fmt):
    """Per-time law of (N, L) by direct counting."""
    limit = _limit(state, limit)
    layers = enumerate_joint(n, k, limit=limit, workers=state.workers)
    rows = [[s.m, s.n_buses, s.lonely, prob] for layer in layers for s, prob in layer.items_sorted()]
    emit_table("oracle joint", {"n": n, "k": k, "limit": limit}, ["m", "N", "L", "prob"], rows,
               _fmt(state, fmt))


@oracle.command("ne")
@click.option("--l", "l", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--limit", type=int, default=None)
@format_option
@click.pass_obj
@api_errors
def oracle_ne(state, l, n, limit, fmt):
    """Per-time law of (N, L) over configurations filling all l buses."""
    limit = _limit(state, limit)
    law = ne_enumerate(l, n, limit)
    rows = [[s.m, s.n_buses, s.lonely, prob]
            for m in range(n + 1) for s, prob in ne_slice(law, m).items_sorted()]
    emit_table("oracle ne", {"l": l, "n": n, "limit": limit}, ["m", "N", "L", "prob"], rows, _fmt(state, fmt))


def main():
    cli(prog_name="lonely-passenger")


if __name__ == "__main__":
    main()
