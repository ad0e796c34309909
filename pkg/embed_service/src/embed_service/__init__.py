from .app import DEFAULT_CHECKPOINT, MAX_BATCH, create_app
from .encoder import HashedBowEncoder, load_encoder

__all__ = [
    "DEFAULT_CHECKPOINT",
    "MAX_BATCH",
    "create_app",
    "HashedBowEncoder",
    "load_encoder",
]
