"""Grid kernels: compiled extension when available, pure-Python otherwise.

``IMPLEMENTATION`` records which backend was selected at import time so that
benchmarks and bug reports can say which code actually ran.  Both backends
produce bit-identical output.
"""

try:
    from ._gridcore import component_from_seed, label4, propagate_kth_root

    IMPLEMENTATION = "compiled"
    HAVE_COMPILED = True
except ImportError:
    from .pyfallback import component_from_seed, label4, propagate_kth_root

    IMPLEMENTATION = "python"
    HAVE_COMPILED = False

__all__ = [
    "label4",
    "component_from_seed",
    "propagate_kth_root",
    "IMPLEMENTATION",
    "HAVE_COMPILED",
]
