import os

import pytest

from rbcsort.exceptions import OutputError
from rbcsort.utils.constants import BENCH_CSV_HEADER
from rbcsort.utils.records import (
    BenchRecord,
    emit_csv,
    format_csv,
    read_csv,
)

RECORDS = [
    BenchRecord(bench='split/halves/cascaded', p=8, n_per_p=0, mode='range', repetition=0,
                wall_ns=1500, messages=0, bytes=0, depth=0, rounds=1),
    BenchRecord(bench='sort/sample-median', p=8, n_per_p=16, mode='ctx/cascaded', repetition=1,
                wall_ns=92000, messages=211, bytes=30400, depth=3, rounds=57),
]


def test_format_csv():
    lines = format_csv(RECORDS).splitlines()
    assert lines[0] == ','.join(BENCH_CSV_HEADER)
    assert lines[1] == 'split/halves/cascaded,8,0,range,0,1500,0,0,0,1'
    assert len(lines) == 3


def test_emit_and_read_csv(tmp_path):
    path = os.path.join(str(tmp_path), 'records.csv')
    emit_csv(RECORDS, path)
    assert read_csv(path) == RECORDS


def test_emit_csv_reports_unwritable_path(tmp_path):
    path = os.path.join(str(tmp_path), 'missing', 'records.csv')
    with pytest.raises(OutputError):
        emit_csv(RECORDS, path)


def test_emit_csv_without_records(tmp_path):
    path = os.path.join(str(tmp_path), 'empty.csv')
    emit_csv([], path)
    with open(path, encoding='utf-8') as f:
        assert f.read() == ','.join(BENCH_CSV_HEADER) + '\n'
    assert read_csv(path) == []
