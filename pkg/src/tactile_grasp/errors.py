"""Exception types shared across the package.

The categories below map 1:1 onto the CLI exit codes and the service's
error payloads: dataset errors are "format", CalibrationError is
"calibration", ReconciliationError is "reconciliation".  Plain ValueError
is used for ordinary argument errors.
"""


class TactileGraspError(Exception):
    """Base class for domain errors raised by this package."""


class DatasetError(TactileGraspError):
    """Base class for dataset read/write failures."""


class DatasetFormatError(DatasetError):
    """Dataset file violates the TGD v1 layout (bad magic, version, manifest)."""


class DatasetIOError(DatasetError):
    """Dataset payload is truncated or otherwise unreadable."""


class CalibrationError(TactileGraspError):
    """Calibration input is unusable (bad profile, missing classes)."""


class ReconciliationError(TactileGraspError):
    """Predictions do not cover the dataset exactly once."""
