import click
from typing import (
    Any,
    Optional,
)

from rbcsort.benchmarks import bench_collective
from rbcsort.utils.constants import DEFAULT_MICRO_REPS
from .options import (
    COMMON_OPTIONS,
    bench_options,
    fabric_setting_for,
    report,
)


@click.command(
    help='Run one and then many collectives on all ranks or on a new communicator over half of them',
)
@click.pass_context
@bench_options(('op', 'n_per_p', 'scope', 'impl', 'mode') + COMMON_OPTIONS)
def collective(ctx: click.Context, p: int, op: str, n_per_p: int, scope: str, impl: str, mode: str,
               reps: Optional[int], seed: int, csv_path: Optional[str], debug: bool, **kwargs: Any) -> None:
    records = bench_collective(
        p=p,
        op=op,
        n_per_p=n_per_p,
        scope=scope,
        impl=impl,
        mode=mode,
        reps=reps or DEFAULT_MICRO_REPS,
        seed=seed,
        fabric_setting=fabric_setting_for(debug),
    )
    report(records, csv_path)
