class FairmaxError(Exception):
    exit_code = 1


class ConfigError(FairmaxError, ValueError):
    exit_code = 2


class DataError(FairmaxError, ValueError):
    exit_code = 3


class DivergenceError(FairmaxError, FloatingPointError):
    exit_code = 4

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
