"""Exception hierarchy shared by every module.

Each class carries the process exit code the command-line front end maps it
to (2 config, 3 data/format, 4 numeric).
"""


class OTSegError(Exception):
    exit_code = 1


class ConfigError(OTSegError, ValueError):
    exit_code = 2


class FormatError(OTSegError, ValueError):
    exit_code = 3


class DataError(OTSegError, ValueError):
    exit_code = 3


class IoError(OTSegError, OSError):
    exit_code = 3


class DomainError(OTSegError, ValueError):
    exit_code = 4


class DegenerateEmbedding(OTSegError, ArithmeticError):
    exit_code = 4


class InternalError(OTSegError, RuntimeError):
    exit_code = 4


class GenError(OTSegError, RuntimeError):
    exit_code = 2


class SizeError(OTSegError, ValueError):
    exit_code = 2
