"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid configuration; message lists every violated key."""


class SimulationDiverged(RuntimeError):
    """Integrator blow-up: non-finite variables or runaway field amplitudes."""

    def __init__(self, message, step_index=None, record=None):
        if step_index is not None:
            message = f"{message} (step {step_index})"
        super().__init__(message)
        self.step_index = step_index
        self.record = record


class AnalysisError(RuntimeError):
    """Diagnostic extraction failed on an otherwise valid record."""


class NoPeakError(AnalysisError):
    """Spectrum has no AC peak above the noise floor."""


class UndersampledError(AnalysisError):
    """Phase advances by more than pi between samples; need denser cadence."""


class InsufficientRecordError(AnalysisError):
    """Record too short for the requested integration windows."""
