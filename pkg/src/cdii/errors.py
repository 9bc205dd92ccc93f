"""Exception hierarchy; ``exit_code`` is what the CLI returns for each class."""

from __future__ import annotations


class CdiiError(Exception):
    exit_code = 1

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def at_stage(self, stage: str) -> "CdiiError":
        if self.stage is None:
            self.stage = stage
            self.args = (f"[{stage}] {self.args[0]}",) + self.args[1:]
        return self


class HypothesisError(CdiiError):
    """A non-degeneracy condition fails at some node."""

    exit_code = 2

    def __init__(self, message, *, hypothesis=None, node=None, value=None, stage=None):
        super().__init__(message, stage=stage)
        self.hypothesis = hypothesis
        self.node = node
        self.value = value


class SolverError(CdiiError):
    """Linear solve failed or did not reach its tolerance."""

    exit_code = 3

    def __init__(self, message, *, residual=None, stage=None):
        super().__init__(message, stage=stage)
        self.residual = residual


class ContainerError(CdiiError):
    exit_code = 4
