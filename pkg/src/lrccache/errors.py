"""Exception hierarchy shared by every module."""


class LrcError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(LrcError, ValueError):
    pass


class SchemaError(LrcError, ValueError):
    """A DAG document or DagSpec violates the structural rules."""


class ConsistencyError(LrcError):
    """A reference count would go negative, i.e. profile and DAG disagree."""


class UncacheableError(LrcError):
    """Block is larger than the whole cache."""


class EvictionImpossibleError(LrcError):
    """Not enough unpinned bytes to make room."""


class DeadlockError(LrcError):
    """Some blocks can never become runnable."""

    def __init__(self, blocks):
        self.blocks = sorted(blocks)
        super().__init__("never-runnable blocks: " + ", ".join(self.blocks))
