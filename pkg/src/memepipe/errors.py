"""Shared error types.

DataFormatError and its subclasses mean an input file is malformed (CLI exit
code 3).  ConfigError means the run was asked for something inconsistent
(exit 2).  StageError wraps a pipeline stage failure (exit 4).
"""


class DataFormatError(Exception):
    pass


class ManifestError(DataFormatError):
    pass


class PredictionFormatError(DataFormatError):
    pass


class ConfigError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
