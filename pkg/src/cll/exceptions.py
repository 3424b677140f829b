"""Error types shared across the package."""


class SingularTransitionError(ValueError):
    """Raised when an operation needs an invertible transition matrix but the
    given one is singular at the pivot tolerance. Callers that can tolerate a
    singular matrix should fall back to L1 decoding instead of inverting."""


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite (e.g. exploding
    learning rate). Carries the index of the last epoch with a finite loss."""

    def __init__(self, last_finite_epoch: int):
        self.last_finite_epoch = last_finite_epoch
        super().__init__(
            f"training loss became non-finite after epoch {last_finite_epoch}"
        )


class FormatError(ValueError):
    """Raised on malformed binary dataset files. Carries the byte offset at
    which parsing failed."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")
