import click
from typing import (
    Any,
    Optional,
)

from rbcsort.benchmarks import bench_sort
from rbcsort.settings import get_setting
from rbcsort.utils.constants import DEFAULT_SORT_REPS
from .options import (
    COMMON_OPTIONS,
    bench_options,
    fabric_setting_for,
    report,
)


@click.command(
    help='Sort random words with Janus Quicksort and verify order, balance and message bounds',
)
@click.pass_context
@bench_options(('n_per_p', 'pivot', 'mode', 'schedule', 'driver') + COMMON_OPTIONS)
def sort(ctx: click.Context, p: int, n_per_p: int, pivot: str, mode: str, schedule: str, driver: str,
         reps: Optional[int], seed: int, csv_path: Optional[str], debug: bool, **kwargs: Any) -> None:
    setting = get_setting(pivot)._replace(COMM_MODE=mode, SCHEDULE=schedule)
    records = bench_sort(
        p=p,
        n_per_p=n_per_p,
        setting=setting,
        reps=reps or DEFAULT_SORT_REPS,
        seed=seed,
        driver=driver,
        fabric_setting=fabric_setting_for(debug),
    )
    report(records, csv_path)
