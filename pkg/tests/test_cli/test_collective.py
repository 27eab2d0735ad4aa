import pytest
from click.testing import CliRunner

from rbcsort.bench import cli
from .helpers import parse_rows


@pytest.mark.parametrize(
    'scope, impl, creation_messages, bcast_messages',
    [
        ('half', 'range', 0, 3),
        ('half', 'group', 3, 3),
        ('full', 'range', 0, 7),
    ]
)
def test_collective_bcast(scope, impl, creation_messages, bcast_messages) -> None:
    runner = CliRunner()
    arguments = [
        'collective', '--p', '8', '--op', 'bcast', '--n-per-p', '4', '--scope', scope, '--impl', impl,
        '--reps', '1',
    ]
    result = runner.invoke(cli, arguments)
    assert result.exit_code == 0
    single, amortized = parse_rows(result.output)
    assert single['bench'] == f'collective/bcast/{scope}/1'
    assert amortized['bench'] == f'collective/bcast/{scope}/50'
    assert int(single['messages']) == creation_messages + bcast_messages
    assert int(amortized['messages']) == creation_messages + 50 * bcast_messages


@pytest.mark.parametrize('op', ['reduce', 'scan', 'exscan', 'gatherv', 'barrier'])
def test_collective_ops(op) -> None:
    runner = CliRunner()
    result = runner.invoke(cli, ['collective', '--p', '6', '--op', op, '--mode', 'tag', '--reps', '1', '--debug'])
    assert result.exit_code == 0
    assert len(parse_rows(result.output)) == 2


def test_collective_rejects_unknown_op() -> None:
    runner = CliRunner()
    result = runner.invoke(cli, ['collective', '--op', 'alltoall'])
    assert result.exit_code == 2
