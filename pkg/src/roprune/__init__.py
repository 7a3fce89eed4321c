"""Prune-and-search algorithms over read-only inputs with metered workspace."""

from .workspace import (
    BoundedStack,
    CapacityError,
    FormatError,
    ReadOnlyView,
    WorkspaceMeter,
    meter_scope,
    view_over_array,
    view_over_buffer,
)
from .selection import SelectConfig, choose_k, select_a0, select_ak

__version__ = "0.1.0"
