import csv
import io
from typing import (
    Dict,
    List,
)

from rbcsort.utils.constants import BENCH_CSV_HEADER


def parse_rows(output: str) -> List[Dict[str, str]]:
    reader = csv.DictReader(io.StringIO(output))
    assert tuple(reader.fieldnames or ()) == BENCH_CSV_HEADER
    return list(reader)
