"""Python bindings for the subguard C++ core."""

from subguard._subguard import *  # noqa: F401,F403
from subguard._subguard import __doc__  # noqa: F401
from subguard.dump import write_dump  # noqa: F401
