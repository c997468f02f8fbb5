"""Exception hierarchy.

``DataError`` subclasses map to CLI exit code 2, ``DivergenceDetected`` to 3.
"""


class NextWordError(Exception):
    pass


class DataError(NextWordError):
    pass


class VocabularyMismatch(DataError, ValueError):
    pass


class EmptyDistribution(DataError, ValueError):
    pass


class CorpusError(DataError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class EmptyCorpus(CorpusError):
    pass


class TooFewSequences(CorpusError):
    pass


class ModelFormatError(DataError):
    pass


class WeightOutOfRange(NextWordError, ValueError):
    pass


class EmptyValidationSet(DataError):
    pass


class NoUsableQueries(DataError):
    pass


class NoComparableQueries(DataError):
    pass


class DivergenceDetected(NextWordError, ArithmeticError):
    def __init__(self, epoch, loss):
        super().__init__(
            f"training loss became {float(loss)!r} in epoch {epoch}; lower the learning rate"
        )
        self.epoch = epoch
        self.loss = float(loss)


class MissingArtifact(DataError):
    """A file an earlier pipeline step should have produced is absent."""
