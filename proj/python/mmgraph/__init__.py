from ._mmgraph import (
    InputError,
    ProviderError,
    __version__,
    anonymize,
    build,
    evaluate,
    query,
    solve_pcst,
)

__all__ = [
    "InputError",
    "ProviderError",
    "__version__",
    "anonymize",
    "build",
    "evaluate",
    "query",
    "solve_pcst",
]
