"""Backend selection for program execution.

The compiled engine is used when its extension module imports; otherwise the
pure-Python :class:`~cachebench.machine.Machine` runs the same programs with
identical results, only slower.  ``CACHEBENCH_BACKEND=python`` forces the
fallback.
"""

from __future__ import annotations

import os

from .config import ConfigError, MachineConfig
from .machine import COUNTERS, STREAM_L1, STREAM_L2, STREAM_NOISE, STREAM_RF, Machine
from .program import Program
from .rng import derive_seed

try:
    from ._engine import Engine as _CEngine, EngineError as _CEngineError
except ImportError:  # pragma: no cover - exercised only without a build
    _CEngine = None
    _CEngineError = None

HAVE_COMPILED = _CEngine is not None


def default_backend() -> str:
    forced = os.environ.get("CACHEBENCH_BACKEND", "").strip().lower()
    if forced in ("python", "py"):
        return "python"
    if forced in ("c", "compiled") and not HAVE_COMPILED:
        raise ConfigError("compiled engine requested but the extension is not built")
    return "c" if HAVE_COMPILED else "python"


BACKEND = default_backend()

_engines: dict = {}


def stream_seeds(cfg: MachineConfig, seed: int) -> tuple:
    n = len(cfg.cores)
    return (
        [derive_seed(seed, STREAM_L1 + i) for i in range(n)],
        derive_seed(seed, STREAM_L2),
        [derive_seed(seed, STREAM_RF + i) for i in range(n)],
        derive_seed(seed, STREAM_NOISE),
    )


def _engine_for(cfg: MachineConfig, backend: str):
    key = (backend, cfg)
    eng = _engines.get(key)
    if eng is None:
        if len(_engines) > 64:
            _engines.clear()
        eng = _CEngine(cfg) if backend == "c" else Machine(cfg)
        _engines[key] = eng
    return eng


def run_program(cfg: MachineConfig, program: Program, n_trials: int, seed: int,
                sigma: float | None = None, backend: str | None = None) -> tuple:
    """Execute ``program`` for ``n_trials`` trials; returns (samples, counters dict)."""
    backend = backend or BACKEND
    if backend == "python":
        return _engine_for(cfg, "python").run_program(program, n_trials, seed, sigma)
    if not HAVE_COMPILED:
        raise ConfigError("compiled engine is not available")
    eng = _engine_for(cfg, "c")
    try:
        out, counts = eng.run(program.ops, program.steps, program.region_lo, program.region_hi,
                              n_trials, stream_seeds(cfg, seed), sigma)
    except _CEngineError as exc:
        raise ConfigError(str(exc)) from exc
    return out, dict(zip(COUNTERS, counts))
