from . import plot_data, reproduce, run
from .reproduce import reproduce_all

COMMANDS = (run, reproduce, plot_data)

__all__ = ["COMMANDS", "reproduce_all"]
