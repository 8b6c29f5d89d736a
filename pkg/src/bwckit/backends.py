"""Shared plumbing for pluggable processing backends.

Separation, transcription, and summarization all sit behind the same
process boundary: a backend is either a built-in mock (deterministic, for
desk-scale testing) or an external command invoked per work item. External
commands exchange files on disk and signal failure through exit codes, so
any model runtime can plug in without being linked into this package.

Command templates use ``{placeholder}`` substitution, e.g.::

    separate-speakers {input} {outdir} {max_speakers}
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass

DEFAULT_TIMEOUT_S = 120.0  # per 30 s chunk


class BackendError(RuntimeError):
    """Non-retryable backend failure (bad configuration, bad output)."""


class RetryableBackendError(BackendError):
    """Backend crash or timeout; safe to retry the same work item.

    Carries the chunk reference so a pipeline can quarantine the item
    after retries are exhausted.
    """

    def __init__(self, message: str, chunk_ref: tuple[str, int] | None = None):
        super().__init__(message)
        self.chunk_ref = chunk_ref


@dataclass(frozen=True)
class BackendDescriptor:
    """How to reach one backend: a built-in mock name or a command template."""

    name: str
    invocation: str | None = None  # None for built-in mocks
    timeout_s: float = DEFAULT_TIMEOUT_S

    @property
    def is_external(self) -> bool:
        return self.invocation is not None


def run_external(
    descriptor: BackendDescriptor,
    substitutions: dict[str, str],
    chunk_ref: tuple[str, int] | None = None,
) -> None:
    """Run an external backend command, mapping failures onto backend errors.

    Exit code 0 means success; anything else (or a timeout, or a missing
    executable) is a retryable failure carrying the work item's chunk_ref.
    """
    if not descriptor.invocation:
        raise BackendError(f"backend {descriptor.name} has no invocation template")
    argv = [part.format(**substitutions) for part in shlex.split(descriptor.invocation)]
    try:
        proc = subprocess.run(
            argv,
            capture_output=True,
            timeout=descriptor.timeout_s,
            check=False,
        )
    except subprocess.TimeoutExpired as exc:
        raise RetryableBackendError(
            f"backend {descriptor.name} timed out after {descriptor.timeout_s}s", chunk_ref
        ) from exc
    except OSError as exc:
        raise RetryableBackendError(
            f"backend {descriptor.name} could not start: {exc}", chunk_ref
        ) from exc
    if proc.returncode != 0:
        stderr = proc.stderr.decode("utf-8", "replace").strip()
        raise RetryableBackendError(
            f"backend {descriptor.name} exited {proc.returncode}: {stderr}", chunk_ref
        )
