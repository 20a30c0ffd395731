"""Three-step cache timing-vulnerability simulator and benchmark suite."""

from .catalog import Catalog, classify_pattern, expand_cases, load_default_catalog, read_catalog
from .config import MachineConfig, default_machine, load_machine
from .harness import SuiteResult, run_suite
from .welch import welch_t_test

__all__ = [
    "Catalog", "MachineConfig", "SuiteResult", "classify_pattern", "default_machine",
    "expand_cases", "load_default_catalog", "load_machine", "read_catalog", "run_suite",
    "welch_t_test",
]
__version__ = "0.1.0"
