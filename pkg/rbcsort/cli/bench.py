import click
from typing import (
    Any,
)

from .collective import collective
from .options import bench_options
from .sort import sort
from .split import split

ALL_BENCHES = {
    'split': split,
    'collective': collective,
    'sort': sort,
}


@click.command(
    help='Run any benchmark; options that do not apply to the chosen one are ignored',
)
@click.pass_context
@click.option(
    '--bench',
    help='The benchmark to run',
    required=True,
    type=click.Choice(ALL_BENCHES.keys(), case_sensitive=False),
)
@bench_options((
    'p', 'n_per_p', 'mode', 'schedule', 'impl', 'layout', 'blocking', 'op', 'scope', 'pivot', 'driver',
    'reps', 'seed', 'csv_path', 'debug', 'verbose',
))
def bench(ctx: click.Context, bench: str, **kwargs: Any) -> None:
    ctx.forward(ALL_BENCHES[bench])
