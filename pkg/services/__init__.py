"""
Services Package

File import/export, experiment scheduling and the command-line surface.
"""

from services.import_service import ImportService
from services.export_service import ExportService
from services.experiment_service import ExperimentService

__all__ = [
    "ImportService",
    "ExportService",
    "ExperimentService",
]
