"""phydcm: desk-scale brain-tumor MRI diagnostic pipeline.

Parses uncompressed DICOM series, reconstructs volumes with axial /
coronal / sagittal views, runs a small hybrid conv+attention classifier
through an auto-discovering model registry, and emits structured
diagnostic records with JSON history and CSV export.  A local HTTP
service and a CLI cover every workflow; the evaluation harness
reproduces the published metric tables from raw counts.
"""

__version__ = "0.1.0"

ENGINE_VERSION = f"phydcm/{__version__} medvit-lite-v1"
