"""Exception hierarchy shared across the package."""


class RelgepError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(RelgepError):
    """Invalid input data, configuration, or artifact contents."""


class ParseError(ValidationError):
    """A file could not be parsed; the message carries file/line context."""


class InfeasibleError(RelgepError):
    """An optimization problem or a reliability requirement is infeasible."""


class MissingArtifactError(RelgepError):
    """A pipeline stage input file is absent."""

    def __init__(self, path, producing_stage):
        super().__init__(
            f"missing artifact {path!s}: run the '{producing_stage}' stage first"
        )
        self.path = path
        self.producing_stage = producing_stage
