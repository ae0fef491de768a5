import asyncio
import hashlib
import json
import logging
import os
import shutil
import subprocess
import time
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Tuple

from app.core.config import Settings, get_settings
from app.core.logging import bind_run_id
from app.reporting.manager import render_report
from app.schemas.config import ExperimentConfig
from app.schemas.result import ItemTiming, RunManifest, Timings
from app.services.experiments import Experiment, Realization, Reduction, get_experiment
from app.stadium.propagator import DensityGrid, Snapshot
from app.utils.emitters import emit
from app.utils.errors import EmitError

log = logging.getLogger(__name__)

PACKAGE_VERSION = '0.1.0'
REPO_ROOT = Path(__file__).resolve().parents[2]
REPORT_TEMPLATE = REPO_ROOT / 'app' / 'templates' / 'summary_v1.yaml'
QUARANTINE_DIR = 'quarantine'


@lru_cache(maxsize=1)
def code_version() -> str:
    """`git describe` of the checkout, or the package version when git is unavailable."""
    try:
        done = subprocess.run(
            ['git', 'describe', '--tags', '--always', '--dirty'],
            cwd=REPO_ROOT, capture_output=True, text=True, timeout=5, check=True,
        )
        described = done.stdout.strip()
        if described:
            return described
    except (OSError, subprocess.SubprocessError):
        log.debug('git describe unavailable, using package version')
    return f'{PACKAGE_VERSION}+nogit'


def config_digest(config: ExperimentConfig) -> str:
    """Run id: first 12 hex digits of the SHA-256 of the config, worker count and output path left out."""
    text = json.dumps(config.model_dump(mode='json', exclude={'jobs', 'outputs'}), sort_keys=True)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:12]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


async def fan_out(experiment: Experiment, items: List[Tuple[int, str]],
                  jobs: int) -> Tuple[List[Realization], List[ItemTiming], List[BaseException]]:
    """
    Runs every work item in a worker thread, at most `jobs` at a time.

    Returns:
        Finished realizations and their timings, both sorted by item, plus the
        exceptions of the items that failed.
    """
    sem = asyncio.Semaphore(jobs)

    async def process(item: int, label: str) -> Tuple[Realization, ItemTiming]:
        async with sem:
            start = time.perf_counter()
            log.debug('realize %s started', label)
            result = await asyncio.to_thread(experiment.realize, item, label)
            elapsed = time.perf_counter() - start
            log.info('realize %s done in %.2fs', label, elapsed)
            return result, ItemTiming(item=item, label=label, seconds=elapsed)

    tasks = [asyncio.create_task(process(item, label)) for item, label in items]
    outcomes = await asyncio.gather(*tasks, return_exceptions=True)

    done, timings, failures = [], [], []
    for (item, label), outcome in zip(items, outcomes):
        if isinstance(outcome, BaseException):
            log.error('realize %s failed: %s', label, outcome)
            failures.append(outcome)
            continue
        done.append(outcome[0])
        timings.append(outcome[1])
    done.sort(key=lambda r: r.item)
    timings.sort(key=lambda t: t.item)
    return done, timings, failures


def write_realizations(root: Path, realizations: List[Realization]) -> List[Path]:
    written: List[Path] = []
    for r in realizations:
        base = root / 'realizations' / r.label
        for name, table in sorted(r.tables.items()):
            written += emit(table, base / f'{name}.csv')
        for name, grid in sorted(r.grids.items()):
            written += emit(grid, base / f'{name}.pgm')
            if isinstance(grid, (DensityGrid, Snapshot)):
                raw = grid.values if isinstance(grid, DensityGrid) else grid.real_part
                written += emit(raw, base / f'{name}.qbg')
        for name, matrix in sorted(r.matrices.items()):
            written += emit(matrix, base / f'{name}.qbh')
    return written


def write_reduction(root: Path, reduction: Reduction) -> List[Path]:
    written: List[Path] = []
    for name, table in sorted(reduction.tables.items()):
        written += emit(table, root / 'aggregate' / f'{name}.csv')
    return written


def _relative(root: Path, paths: List[Path]) -> List[str]:
    return sorted({p.relative_to(root).as_posix() for p in paths})


def _clear_previous(out_dir: Path):
    manifest = out_dir / 'manifest.json'
    if not manifest.exists():
        return
    try:
        previous = json.loads(manifest.read_text(encoding='utf-8')).get('artifacts', [])
    except (OSError, ValueError):
        log.warning('cannot read previous manifest in %s, leaving old files in place', out_dir)
        return
    for rel in previous:
        target = out_dir / rel
        if target.is_file():
            target.unlink()


def _promote(staging: Path, out_dir: Path):
    _clear_previous(out_dir)
    for path in sorted(staging.rglob('*')):
        if path.is_file():
            target = out_dir / path.relative_to(staging)
            target.parent.mkdir(parents=True, exist_ok=True)
            os.replace(path, target)
    shutil.rmtree(staging, ignore_errors=True)


def _finish(root: Path, manifest: RunManifest, written: List[Path]) -> RunManifest:
    report = root / 'report.md'
    manifest_path = root / 'manifest.json'
    artifacts = _relative(root, written + [report, manifest_path])
    manifest = manifest.model_copy(update={'artifacts': artifacts})
    try:
        report.write_text(render_report(REPORT_TEMPLATE, manifest), encoding='utf-8', newline='\n')
    except OSError as e:
        raise EmitError(f"cannot write report ({e.strerror})", str(report)) from e
    emit(manifest, manifest_path)
    return manifest


def _quarantine(out_dir: Path, manifest: RunManifest, realizations: List[Realization],
                error: BaseException) -> Optional[Path]:
    target = out_dir / QUARANTINE_DIR / manifest.run_id
    try:
        shutil.rmtree(target, ignore_errors=True)
        written = write_realizations(target, realizations)
        aborted = manifest.model_copy(update={'status': 'aborted', 'error': f'{type(error).__name__}: {error}'})
        _finish(target, aborted, written)
    except Exception:
        log.exception('could not write quarantine outputs to %s', target)
        return None
    return target


def run(config: ExperimentConfig, settings: Optional[Settings] = None) -> RunManifest:
    """
    Runs one experiment end to end.

    Work items fan out over a pool of `jobs` threads. Finished items are reduced
    in ascending item order and written to a staging directory that replaces
    the previous artifacts of the output directory on success. On failure the
    finished items and an aborted manifest go to `<outputs>/quarantine/<run_id>`
    and the error is re-raised.

    Args:
        config: Validated experiment config.
        settings: Runtime settings; read from the environment when omitted.

    Returns:
        The manifest written to `<outputs>/manifest.json`.

    Raises:
        ConfigError, DomainError: On parameters the schema could not check.
        BirthmarkError: On numerical or I/O failure.
    """
    settings = settings or get_settings()
    run_id = config_digest(config)
    rlog = bind_run_id(log, run_id)
    out_dir = Path(config.outputs) if config.outputs else Path(settings.output_root) / config.kind
    jobs = config.jobs or settings.jobs

    experiment = get_experiment(config)
    items = experiment.items()
    manifest = RunManifest(run_id=run_id, kind=config.kind, version=code_version(), config=config)
    rlog.info('run kind=%s items=%d jobs=%d out=%s', config.kind, len(items), jobs, out_dir)

    started_at = _utc_now()
    start = time.perf_counter()
    realizations: List[Realization] = []
    staging = out_dir / f'.staging-{run_id}'
    try:
        realizations, timings, failures = asyncio.run(fan_out(experiment, items, jobs))
        if failures:
            raise failures[0]
        reduction = experiment.reduce(realizations)
        rlog.info('reduced %d items: %s', len(realizations),
                  ', '.join(f'{k}={v}' for k, v in sorted(reduction.summary.items()) if not isinstance(v, list)))

        manifest = manifest.model_copy(update={
            'summary': reduction.summary,
            'statistics': {name: avg.to_stat() for name, avg in sorted(reduction.statistics.items())},
            'timings': Timings(started_at=started_at, finished_at=_utc_now(),
                               wall_seconds=time.perf_counter() - start, items=timings),
        })
        shutil.rmtree(staging, ignore_errors=True)
        written = write_realizations(staging, realizations) + write_reduction(staging, reduction)
        manifest = _finish(staging, manifest, written)
        _promote(staging, out_dir)
    except BaseException as e:
        shutil.rmtree(staging, ignore_errors=True)
        target = _quarantine(out_dir, manifest, realizations, e)
        rlog.error('run aborted: %s; partial outputs in %s', e, target)
        raise
    rlog.info('run finished in %.2fs, %d artifacts in %s', time.perf_counter() - start,
              len(manifest.artifacts), out_dir)
    return manifest


__all__ = ['run', 'fan_out', 'code_version', 'config_digest', 'write_realizations', 'write_reduction']
