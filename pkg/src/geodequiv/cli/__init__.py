"""Command-line interface: PairFile format, reports and subcommands."""

from .main import run
from .pairfile import PairFile, PairFileError, from_pair, parse_pairfile, serialize
from .report import Report, strip_timing

__all__ = ["PairFile", "PairFileError", "Report", "from_pair", "parse_pairfile", "run", "serialize", "strip_timing"]
