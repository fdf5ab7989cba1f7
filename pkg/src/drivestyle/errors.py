"""Exception hierarchy shared by all drivestyle modules."""


class DriveStyleError(Exception):
    """Base class for every error raised by the package."""


class DataError(DriveStyleError):
    """Input data is malformed or unsuitable for the requested computation."""


class ConfigError(DriveStyleError):
    """A configuration or schema file is missing or invalid."""


class UpstreamMissing(DriveStyleError):
    """A pipeline step needs artifacts that an earlier step has not produced."""


# ingest

class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"missing column for channel {name!r}")
        self.name = name


class ParseError(DataError):
    def __init__(self, row, column, value=None):
        super().__init__(f"row {row}: cannot parse column {column!r} (value {value!r})")
        self.row = row
        self.column = column


class EmptyTrace(DataError):
    pass


class EmptyAfterFilter(DataError):
    pass


class DegenerateTrace(DataError):
    pass


# curves

class EmptyProfile(DataError):
    pass


class CurveNotCovered(DataError):
    pass


class WindowContainsGap(DataError):
    pass


class InsufficientStraightData(DataError):
    def __init__(self, subject_id, n):
        super().__init__(f"subject {subject_id!r} has only {n} straight samples")
        self.subject_id = subject_id
        self.n = n


# kinematics

class WindowTooLarge(DataError):
    pass


class EmptySeries(DataError):
    pass


class NoEvaluableCurves(DataError):
    pass


# envelope

class NonDivisorStride(DataError):
    pass


class RankDeficient(DataError):
    pass


class TooFewSubjects(DataError):
    pass


# stationary cornering

class TooFewPoints(DataError):
    pass


class DegenerateSpread(DataError):
    pass


# transient cornering

class TooShort(DataError):
    pass


class EmptySegment(DataError):
    pass


class ZeroDistance(DataError):
    pass


# questionnaire

class OutOfScale(DataError):
    pass


class MissingAnswers(DataError):
    def __init__(self, subject_id, items):
        super().__init__(f"subject {subject_id!r} is missing answers for items {list(items)}")
        self.subject_id = subject_id
        self.items = list(items)


class SingularCorrelation(DataError):
    pass


class CohortTooSmall(DataError):
    pass


class IncompleteScores(DataError):
    pass


# correlation

class DegenerateVariance(DataError):
    pass


class LengthMismatch(DataError):
    pass


class CollinearCovariates(DataError):
    pass
