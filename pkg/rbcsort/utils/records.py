import csv
import io
from typing import (
    List,
    NamedTuple,
    Sequence,
)

from rbcsort.exceptions import OutputError
from rbcsort.utils.constants import BENCH_CSV_HEADER


class BenchRecord(NamedTuple):
    bench: str
    p: int
    n_per_p: int
    mode: str
    repetition: int
    wall_ns: int
    messages: int
    bytes: int
    depth: int
    rounds: int


def format_csv(records: Sequence[BenchRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(BENCH_CSV_HEADER)
    writer.writerows(records)
    return buffer.getvalue()


def emit_csv(records: Sequence[BenchRecord], path: str) -> None:
    try:
        with open(path, 'w', newline='', encoding='utf-8') as f:
            f.write(format_csv(records))
    except OSError as e:
        raise OutputError(f"Could not write benchmark records to {path}: {e}") from e


def read_csv(path: str) -> List[BenchRecord]:
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        return [
            BenchRecord(
                bench=row['bench'],
                p=int(row['p']),
                n_per_p=int(row['n_per_p']),
                mode=row['mode'],
                repetition=int(row['repetition']),
                wall_ns=int(row['wall_ns']),
                messages=int(row['messages']),
                bytes=int(row['bytes']),
                depth=int(row['depth']),
                rounds=int(row['rounds']),
            )
            for row in reader
        ]
