"""Core package - tree evaluation, training, initialization and numerical kernels."""

__all__ = [
    "Result",
    "Success",
    "Failure",
    "AppException",
    "ValidationError",
    "NumericError",
    "predict",
    "predict_batch",
    "training_error",
    "grad_error",
    "train",
    "plain_train",
    "initialize",
    "stack_product",
    "stack_sum",
]

_ERRORS = ("Result", "Success", "Failure", "AppException", "ValidationError", "NumericError")
_ENGINE = ("predict", "predict_batch", "training_error", "grad_error")


# Lazy imports to avoid circular dependencies
def __getattr__(name):
    if name in _ERRORS:
        from core import error_types
        return getattr(error_types, name)
    elif name in _ENGINE:
        from core import srt_engine
        return getattr(srt_engine, name)
    elif name in ("train", "plain_train"):
        from core import optimizer
        return getattr(optimizer, name)
    elif name == "initialize":
        from core.initialization import initialize
        return initialize
    elif name in ("stack_product", "stack_sum"):
        from core import stacking
        return getattr(stacking, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
