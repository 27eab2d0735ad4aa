import asyncio
import csv
import os

# For not importing rbcsort here
BENCH_CSV_HEADER = ['bench', 'p', 'n_per_p', 'mode', 'repetition', 'wall_ns', 'messages', 'bytes', 'depth', 'rounds']


async def run(cmd: str) -> None:
    print('[INFO] Running:', cmd)
    proc = await asyncio.create_subprocess_shell(
        cmd,
        stdout=asyncio.subprocess.PIPE,
        stderr=asyncio.subprocess.PIPE,
    )
    async for out in proc.stdout:
        print(out.decode('utf-8').rstrip())
    async for out in proc.stderr:
        print(f"[stderr] {out.decode('utf-8').rstrip()}")
    assert await proc.wait() == 0


async def main():
    my_folder_path = os.path.join(os.getcwd(), 'TESTING_TEMP_FOLDER')
    if not os.path.exists(my_folder_path):
        os.mkdir(my_folder_path)

    if os.name == 'nt':  # Windows
        run_script_cmd = 'sh bench.sh'
    else:  # Mac or Linux
        run_script_cmd = './bench.sh'

    install_cmd = run_script_cmd + ' install'
    print('[INFO] Creating subprocess 1: installation:', install_cmd)
    proc = await asyncio.create_subprocess_shell(
        install_cmd,
    )
    await proc.wait()
    print('[INFO] Installed')

    sort_csv = os.path.join(my_folder_path, 'sort.csv')
    split_csv = os.path.join(my_folder_path, 'split.csv')
    await run(' '.join([
        run_script_cmd + ' sort',
        '--p', '8',
        '--n-per-p', '16',
        '--reps', '2',
        '--csv', sort_csv,
    ]))
    await run(' '.join([
        run_script_cmd + ' bench',
        '--bench', 'split',
        '--p', '8',
        '--impl', 'group',
        '--layout', 'chain',
        '--schedule', 'alternating',
        '--reps', '1',
        '--csv', split_csv,
    ]))

    # Check files
    with open(sort_csv, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == BENCH_CSV_HEADER
    assert len(rows) == 3
    assert all(int(row[8]) >= 1 for row in rows[1:])
    with open(split_csv, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == BENCH_CSV_HEADER
    assert rows[1][0] == 'split/chain/alternating'

    # Clean up
    os.remove(sort_csv)
    os.remove(split_csv)
    os.rmdir(my_folder_path)


if os.name == 'nt':  # Windows
    loop = asyncio.ProactorEventLoop()
    asyncio.set_event_loop(loop)
    loop.run_until_complete(main())
else:
    asyncio.run(main())
