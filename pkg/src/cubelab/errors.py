"""Semantic exception hierarchy for cubelab."""


class CubelabError(Exception):
    """Base class for all cubelab errors."""


class DimensionMismatch(CubelabError):
    pass


class IndexOutOfRange(CubelabError):
    pass


class FeatureAlreadyFixed(CubelabError):
    pass


class SupportExceedsDimension(CubelabError):
    pass


class NonPowerOfTwoLength(CubelabError):
    pass


class SparsityCapExceeded(CubelabError):
    pass


class ConstantFunction(CubelabError):
    pass


class NoTraversal(CubelabError):
    pass


class SearchCapExceeded(CubelabError):
    pass


class UnknownVertex(CubelabError):
    pass


class EmptyCell(CubelabError):
    pass


class EmptyDataset(CubelabError):
    pass


class StateCapExceeded(CubelabError):
    pass


class TooLarge(CubelabError):
    pass


class FunctionIsMsp(CubelabError):
    pass


class InvalidArgs(CubelabError):
    pass


class MissingColumn(CubelabError):
    pass


class IncompleteGrid(CubelabError):
    pass


class ConfigError(CubelabError):
    pass
