# Only numpy-free modules load here: main.py pins BLAS threads through
# this package before numpy is first imported.
from .config import validate_environment, pin_threads, run_dir, get_workers, is_single_threaded
from . import debug

__all__ = [
    'validate_environment', 'pin_threads', 'run_dir', 'get_workers', 'is_single_threaded',
    'debug',
]
