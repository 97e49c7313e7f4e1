"""Grey-box identification of controlled dynamical systems.

Thin wrapper around the compiled core: benchmark ODE systems, dataset
generation, GRU-based models and the multi-objective training loop.
"""

try:
    from pgrnn._core import *  # noqa: F401,F403
    from pgrnn._core import __version__  # noqa: F401
except ImportError:  # running against a plain CMake build directory
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
