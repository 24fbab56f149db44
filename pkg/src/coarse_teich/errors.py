class InputError(ValueError):
    """Invalid input to an operation (bad point id, malformed config, ...)."""


class InsufficientDeclarations(InputError):
    """A curve system does not declare a relation an operation needs."""

    def __init__(self, curve, support):
        self.curve = curve
        self.support = support
        super().__init__(
            f"insufficient declarations: relation of curve {curve!r} "
            f"to support {support!r} is not declared"
        )
