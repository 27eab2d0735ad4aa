import logging
import click
from typing import (
    Any,
    Callable,
    Dict,
    Optional,
    Sequence,
)

from rbcsort.benchmarks import (
    ALL_COLLECTIVES,
    ALL_DRIVERS,
    ALL_IMPLS,
    ALL_LAYOUTS,
    ALL_SCOPES,
    HALF,
    HALVES,
    LOCKSTEP,
    RANGE,
)
from rbcsort.runtime.comm import CommMode
from rbcsort.settings import (
    ALL_SCHEDULES,
    ALL_SORT_PRESETS,
    CASCADED,
    DEBUG,
    DEFAULT,
    SAMPLE_MEDIAN,
    FabricSetting,
    get_fabric_setting,
)
from rbcsort.utils.records import (
    BenchRecord,
    emit_csv,
    format_csv,
)

Decorator = Callable[[Callable[..., Any]], Callable[..., Any]]


def enable_logging(ctx: click.Context, param: Any, verbose: bool) -> bool:
    if verbose:
        logging.basicConfig(level=logging.DEBUG)
    return verbose


OPTIONS: Dict[str, Decorator] = {
    'p': click.option(
        '--p',
        default=8,
        help='The number of simulated ranks',
        type=click.IntRange(1, 1024),
    ),
    'n_per_p': click.option(
        '--n-per-p',
        default=16,
        help='The number of elements (words) per rank',
        type=click.IntRange(0, 2**20),
    ),
    'mode': click.option(
        '--mode',
        default=CommMode.CONTEXT_SCOPED.value,
        help='Scope messages of range communicators by tag alone ("tag") or by a fresh context id ("ctx")',
        type=click.Choice([mode.value for mode in CommMode], case_sensitive=False),
    ),
    'schedule': click.option(
        '--schedule',
        default=CASCADED,
        help='The order in which ranks that belong to two groups create (or sort in) them',
        type=click.Choice(ALL_SCHEDULES, case_sensitive=False),
    ),
    'impl': click.option(
        '--impl',
        default=RANGE,
        help='Create communicators locally from a range ("range") or through the leader broadcast ("group")',
        type=click.Choice(ALL_IMPLS, case_sensitive=False),
    ),
    'layout': click.option(
        '--layout',
        default=HALVES,
        help='Split into the two halves of the ranks or into the overlapping chain of size-4 groups',
        type=click.Choice(ALL_LAYOUTS, case_sensitive=False),
    ),
    'blocking': click.option(
        '--blocking/--nonblocking',
        default=True,
        help='Wait for each communicator before creating the next one',
    ),
    'op': click.option(
        '--op',
        default='bcast',
        help='The collective operation to run',
        type=click.Choice(ALL_COLLECTIVES, case_sensitive=False),
    ),
    'scope': click.option(
        '--scope',
        default=HALF,
        help='Run the collective on all ranks or on a newly created communicator over the first half',
        type=click.Choice(ALL_SCOPES, case_sensitive=False),
    ),
    'pivot': click.option(
        '--pivot',
        default=SAMPLE_MEDIAN,
        help='The pivot selection preset of the sort',
        type=click.Choice(ALL_SORT_PRESETS.keys(), case_sensitive=False),
    ),
    'driver': click.option(
        '--driver',
        default=LOCKSTEP,
        help='Run ranks in deterministic synchronous rounds or on one thread each',
        type=click.Choice(ALL_DRIVERS, case_sensitive=False),
    ),
    'reps': click.option(
        '--reps',
        default=None,
        help='Repetitions per measurement (5 for split and collective runs, 3 for sorts when unset)',
        type=click.IntRange(1, 1000),
    ),
    'seed': click.option(
        '--seed',
        default=0,
        help='Seed of the generated inputs and of the pivot samples',
        type=click.IntRange(0, 2**64 - 1),
    ),
    'csv_path': click.option(
        '--csv',
        'csv_path',
        default=None,
        help='Write the records to this file instead of the standard output',
        type=click.Path(dir_okay=False, writable=True),
    ),
    'debug': click.option(
        '--debug',
        is_flag=True,
        default=False,
        help='Check collective schedules and tag reuse on every fabric',
    ),
    'verbose': click.option(
        '--verbose',
        is_flag=True,
        default=False,
        callback=enable_logging,
        expose_value=False,
        help='Log sends, matches and sort levels',
        is_eager=True,
    ),
}

COMMON_OPTIONS = ('p', 'reps', 'seed', 'csv_path', 'debug', 'verbose')


def bench_options(names: Sequence[str]) -> Decorator:
    '''
    Applies the named options, in order, to a benchmark command.
    '''
    def decorator(function: Callable[..., Any]) -> Callable[..., Any]:
        for name in reversed(names):
            function = OPTIONS[name](function)
        return function
    return decorator


def fabric_setting_for(debug: bool) -> FabricSetting:
    return get_fabric_setting(DEBUG if debug else DEFAULT)


def report(records: Sequence[BenchRecord], csv_path: Optional[str]) -> None:
    if csv_path is None:
        click.echo(format_csv(records), nl=False)
        return
    emit_csv(records, csv_path)
    click.echo(f'Wrote {len(records)} records to {csv_path}')
