"""Exception hierarchy shared across the pipeline."""


class PhydcmError(Exception):
    """Base class for all pipeline errors."""

    #: short machine-readable code used by the CLI and the HTTP service
    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__doc__)


# --- DICOM parsing ---------------------------------------------------------

class DicomError(PhydcmError):
    code = "dicom_error"


class TruncatedFile(DicomError):
    """Stream ended mid-element or is shorter than the minimum header."""
    code = "truncated_file"


class BadMagic(DicomError):
    """Preamble present but the DICM marker is missing, or wrong codec magic."""
    code = "bad_magic"


class UnsupportedTransferSyntax(DicomError):
    """Compressed or big-endian transfer syntax; only little endian is handled."""
    code = "unsupported_transfer_syntax"


class UnsupportedFeature(DicomError):
    """Valid DICOM construct outside the supported subset (e.g. undefined-length SQ)."""
    code = "unsupported_feature"


class MissingTag(DicomError):
    """A tag required by the requested operation is absent."""
    code = "missing_tag"

    def __init__(self, tag):
        self.tag = tag
        super().__init__(f"required tag {tag} is absent")


class LengthMismatch(DicomError):
    """PixelData length disagrees with Rows x Columns x bytes-per-sample."""
    code = "length_mismatch"


# --- volume / MPR ----------------------------------------------------------

class VolumeError(PhydcmError):
    code = "volume_error"


class InconsistentSeries(VolumeError):
    """Slices disagree on shape, orientation, or pixel spacing."""
    code = "inconsistent_series"


class DuplicatePosition(VolumeError):
    """Two slices project to the same position along the stack normal."""
    code = "duplicate_position"


class IndexOutOfRange(VolumeError):
    code = "index_out_of_range"


class BadWindow(VolumeError):
    """Display window width must be positive."""
    code = "bad_window"


# --- preprocessing ---------------------------------------------------------

class BadSize(PhydcmError):
    """Requested output dimensions below 1."""
    code = "bad_size"


# --- inference engine / weight codec ---------------------------------------

class ShapeMismatch(PhydcmError):
    code = "shape_mismatch"


class WeightsMissing(PhydcmError):
    code = "weights_missing"


class BadVersion(PhydcmError):
    code = "bad_version"


class SchemaMismatch(PhydcmError):
    """Weight file tensor name/order/shape deviates from the model schedule."""
    code = "schema_mismatch"

    def __init__(self, name: str, message: str = ""):
        self.name = name
        super().__init__(message or f"tensor {name!r} deviates from the model schedule")


# --- registry / diagnosis --------------------------------------------------

class DirNotFound(PhydcmError):
    code = "dir_not_found"


class LabelCountMismatch(PhydcmError):
    """Label map length differs from the model output dimension."""
    code = "label_count_mismatch"


class NoModelForScanType(PhydcmError):
    code = "no_model_for_scan_type"


class UnknownFormat(PhydcmError):
    """Input file is neither DICOM nor binary PGM."""
    code = "unknown_format"


class CorruptHistory(PhydcmError):
    """History file exists but is not a parseable JSON array."""
    code = "corrupt_history"


class UnknownClassDir(PhydcmError):
    """Dataset folder name is not one of the model's class labels."""
    code = "unknown_class_dir"


class IoFailure(PhydcmError):
    code = "io_failure"
