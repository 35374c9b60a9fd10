from utils.file_ops import (
    calculate_file_hash,
    ensure_directory_exists,
    read_file_text,
    write_file_text,
    read_json,
    write_json,
)
from utils.validators import (
    validate_file_path,
    validate_positive_int,
    validate_feature_columns,
)

__all__ = [
    "calculate_file_hash",
    "ensure_directory_exists",
    "read_file_text",
    "write_file_text",
    "read_json",
    "write_json",
    "validate_file_path",
    "validate_positive_int",
    "validate_feature_columns",
]
