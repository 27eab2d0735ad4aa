import click
from typing import (
    Any,
    Optional,
)

from rbcsort.benchmarks import bench_split
from rbcsort.utils.constants import DEFAULT_MICRO_REPS
from .options import (
    COMMON_OPTIONS,
    bench_options,
    fabric_setting_for,
    report,
)


@click.command(
    help='Time communicator creation on a halves or overlapping-chain layout',
)
@click.pass_context
@bench_options(('schedule', 'impl', 'layout', 'mode', 'blocking') + COMMON_OPTIONS)
def split(ctx: click.Context, p: int, schedule: str, impl: str, layout: str, mode: str, blocking: bool,
          reps: Optional[int], seed: int, csv_path: Optional[str], debug: bool, **kwargs: Any) -> None:
    records = bench_split(
        p=p,
        schedule=schedule,
        impl=impl,
        layout=layout,
        mode=mode,
        reps=reps or DEFAULT_MICRO_REPS,
        blocking=blocking,
        fabric_setting=fabric_setting_for(debug),
    )
    report(records, csv_path)
