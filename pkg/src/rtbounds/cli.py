import enum
import json
import os
import typing

import click
import deal
import tabulate
from loguru import logger

from rtbounds.bounds import bound, default_class
from rtbounds.harness import (
    load_experiment_config,
    run_experiment,
    write_experiment,
)
from rtbounds.io import configure_solver, read_tensor, write_tensor
from rtbounds.kinds import SpectralFunctional, TensorKind
from rtbounds.samplers import SeedSpec, TensorClass, sample
from rtbounds.selftest import format_report, run_selftest
from rtbounds.solvers import SolverConfig, solve
from rtbounds.utils import configure_logging, format_dims, parse_dims

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECKS_FAILED = 2


# define custom click types
class EnumChoice(click.ParamType):
    """Generic click type that maps human-readable strings → Enum members."""

    name = "enum"

    def __init__(self, enum_cls: type[enum.Enum]) -> None:
        self.enum_cls = enum_cls
        self._lookup: dict[str, enum.Enum] = (
            {e.name.lower(): e for e in enum_cls}
            | {e.name.replace("_", "-"): e for e in enum_cls}
            | {e.name.replace("_", ""): e for e in enum_cls}
        )

    def convert(
        self,
        value: typing.Any,
        param: typing.Optional[click.Parameter],
        ctx: typing.Optional[click.Context],
    ) -> enum.Enum:
        if isinstance(value, self.enum_cls):
            return value
        key = str(value).lower()
        if key in self._lookup:
            return self._lookup[key]
        self.fail(
            f"'{value}' is not a valid {self.enum_cls.__name__}. "
            f"Choose from: {', '.join(self._lookup)}",
            param,
            ctx,
        )

    def get_metavar(self, param: click.Parameter) -> str:
        return "[" + "|".join(self._lookup) + "]"


class DimsType(click.ParamType):
    """``x``-joined tensor dimensions such as ``4x9x16``."""

    name = "dims"

    def convert(self, value, param, ctx) -> tuple[int, ...]:
        if isinstance(value, tuple):
            return value
        try:
            return parse_dims(value)
        except (ValueError, deal.PreContractError) as e:
            self.fail(str(e), param, ctx)


def _echo_json(payload: dict):
    click.echo(json.dumps(payload, indent=2))


def _build_class(
    kind: TensorKind,
    dims: typing.Optional[tuple[int, ...]],
    d: typing.Optional[int],
    n: typing.Optional[int],
    m: typing.Optional[int],
) -> TensorClass:
    """Resolve the size flags of ``kind`` into a tensor class."""
    if kind is TensorKind.iid:
        if dims is None and d is not None and n is not None:
            dims = (n,) * d
        if dims is None:
            raise click.UsageError("iid tensors need --dims or --d and --n")
        return TensorClass.iid(dims)
    if kind is TensorKind.symmetric:
        if dims is not None:
            return TensorClass(kind, dims)
        if d is None or n is None:
            raise click.UsageError("symmetric tensors need --d and --n")
        return TensorClass.symmetric(d, n)
    if kind is TensorKind.partially_symmetric:
        if dims is not None:
            return TensorClass(kind, dims)
        if m is None or n is None:
            raise click.UsageError(
                "partially symmetric tensors need --m and --n"
            )
        return TensorClass.partially_symmetric(m, n)
    if dims is not None:
        return TensorClass(kind, dims)
    if n is None:
        raise click.UsageError("piezoelectric tensors need --n")
    return TensorClass.piezoelectric(n)


size_options = [
    click.option("--dims", type=DimsType(), help="Full shape, e.g. 4x9x16"),
    click.option("--d", "d", type=int, help="Tensor order"),
    click.option("--n", "n", type=int, help="Mode dimension"),
    click.option("--m", "m", type=int, help="First dimension of (m,n,m,n)"),
]


def with_size_options(func):
    for option in reversed(size_options):
        func = option(func)
    return func


solver_config_option = click.option(
    "--solver-config",
    type=click.Path(exists=True, dir_okay=False),
    help="INI file with a [solver] section of default settings",
)


@click.group(name="rtbounds")
@click.option(
    "--log-level",
    default="WARNING",
    type=click.Choice(
        ["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"],
        case_sensitive=False,
    ),
)
def rtbounds_main(log_level: str):
    configure_logging(log_level)


@rtbounds_main.command(name="sample")
@click.option(
    "--class", "kind", type=EnumChoice(TensorKind), required=True
)
@with_size_options
@click.option("--seed", type=int, default=0)
@click.option("--stream", type=int, default=0, help="Substream index")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def sample_command(kind, dims, d, n, m, seed, stream, out):
    """Draw one Gaussian tensor and write it as an RTB1 file."""
    tensor_class = _build_class(kind, dims, d, n, m)
    seed_spec = SeedSpec(seed, stream)
    tensor = sample(tensor_class, seed_spec)
    write_tensor(tensor, out)
    _echo_json(
        {
            "out": str(out),
            "class": tensor_class.to_dict(),
            "dims": format_dims(tensor_class.dims),
            "substream_seed": seed_spec.substream_seed,
        }
    )


@rtbounds_main.command(name="solve")
@click.option("--in", "path", type=click.Path(dir_okay=False), required=True)
@click.option(
    "--functional", type=EnumChoice(SpectralFunctional), required=True
)
@click.option("--restarts", type=int)
@click.option("--max-iters", type=int)
@click.option("--tol", type=float)
@click.option("--shift", type=float)
@click.option("--seed", type=int)
@solver_config_option
def solve_command(
    path, functional, restarts, max_iters, tol, shift, seed, solver_config
):
    """Maximize a spectral functional of an RTB1 tensor."""
    flags = {
        "restarts": restarts,
        "max_iters": max_iters,
        "tol": tol,
        "shift": shift,
        "seed": seed,
    }
    overrides = {key: val for key, val in flags.items() if val is not None}
    if solver_config is None:
        cfg = SolverConfig.from_dict(overrides)
    else:
        cfg = SolverConfig.from_config_file(solver_config, **overrides)
    tensor = read_tensor(path)
    logger.info(f"Solving {functional.slug} for {tensor!r}")
    _echo_json(solve(tensor, functional, cfg).to_dict())


@rtbounds_main.command(name="bound")
@click.option(
    "--functional", type=EnumChoice(SpectralFunctional), required=True
)
@with_size_options
@click.option("--tail", type=float, help="Attach the tail probability at t")
def bound_command(functional, dims, d, n, m, tail):
    """Evaluate the expectation bound(s) for a functional."""
    if dims is not None:
        tensor_class = default_class(functional, dims)
    else:
        kind = functional.compatible_kinds()[0]
        tensor_class = _build_class(kind, None, d, n, m)
    _echo_json(bound(functional, tensor_class, tail).to_dict())


def _summary_table(summary, table_format: str) -> str:
    rows = [
        ("mean", summary.mean),
        ("stderr", summary.stderr),
        ("bound_exact", summary.bound_exact),
        ("bound_loose", summary.bound_loose),
        ("mean_over_bound", summary.mean_over_bound),
        ("pass_expectation", summary.pass_expectation),
    ]
    table = tabulate.tabulate(
        rows, ["quantity", "value"], tablefmt=table_format
    )
    if summary.tails:
        fields = ["t", "exceed_count", "upper99", "tail_bound", "pass"]
        tails = [tail.to_dict() for tail in summary.tails]
        table += "\n\n" + tabulate.tabulate(
            [[row[key] for key in fields] for row in tails],
            fields,
            tablefmt=table_format,
        )
    return table


@rtbounds_main.command(name="experiment")
@click.option(
    "--config", "config_path", type=click.Path(dir_okay=False), required=True
)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--trials", type=int)
@click.option("--seed", type=int)
@click.option("--restarts", type=int)
@click.option("--threads", type=int, default=os.cpu_count() or 1)
@solver_config_option
@click.option("--table-format", type=str, default="simple")
@click.pass_context
def experiment_command(
    ctx,
    config_path,
    out_dir,
    trials,
    seed,
    restarts,
    threads,
    solver_config,
    table_format,
):
    """Run a Monte Carlo experiment and check its bounds."""
    solver_defaults = None
    if solver_config is not None:
        solver_defaults = configure_solver(solver_config)
    config = load_experiment_config(config_path, solver_defaults)
    config = config.with_overrides(
        trials=trials, master_seed=seed, restarts=restarts
    )
    records, summary = run_experiment(config, threads=threads)
    write_experiment(out_dir, records, summary)
    _echo_json(summary.to_dict())
    click.echo(_summary_table(summary, table_format), err=True)
    if not summary.passed:
        ctx.exit(EXIT_CHECKS_FAILED)


@rtbounds_main.command(name="selftest")
@click.option("--seed", type=int, default=0)
@click.option("--samples", type=int, default=10_000)
@click.option("--table-format", type=str, default="simple")
@click.pass_context
def selftest_command(ctx, seed, samples, table_format):
    """Run the randomized inequality checks."""
    results = run_selftest(seed=seed, samples=samples)
    click.echo(format_report(results, table_format))
    if not all(result.passed for result in results):
        ctx.exit(EXIT_CHECKS_FAILED)


def main(argv: typing.Optional[list[str]] = None) -> int:
    """
    Console entry point returning the process exit code: 0 on success, 1
    on usage or input errors and 2 when a check fails.
    """
    try:
        rv = rtbounds_main.main(
            args=argv, prog_name="rtbounds", standalone_mode=False
        )
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError, deal.ContractError) as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_OK
