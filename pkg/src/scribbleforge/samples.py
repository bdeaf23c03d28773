"""Edit task taxonomy and the sample tuple every pipeline stage produces."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .images import RGB, BBox, ImageBuffer
from .scribble import ScribbleSpec


class EditTask(enum.Enum):
    ADDITION = "addition"
    REMOVAL = "removal"
    REPLACEMENT = "replacement"
    TRANSLATION = "translation"
    TEXT_INSERTION = "text-insertion"
    TEXT_DELETION = "text-deletion"
    TEXT_REPLACEMENT = "text-replacement"
    TEXT_STYLE = "text-style"

    @property
    def is_text(self) -> bool:
        return self.value.startswith("text-")


OBJECT_TASKS = (
    EditTask.ADDITION,
    EditTask.REMOVAL,
    EditTask.REPLACEMENT,
    EditTask.TRANSLATION,
)
TEXT_TASKS = (
    EditTask.TEXT_INSERTION,
    EditTask.TEXT_DELETION,
    EditTask.TEXT_REPLACEMENT,
    EditTask.TEXT_STYLE,
)

# CLI shorthand, e.g. `--tasks ins,del,rep,style`.
TASK_ALIASES = {
    "ad": EditTask.ADDITION,
    "rm": EditTask.REMOVAL,
    "rp": EditTask.REPLACEMENT,
    "tr": EditTask.TRANSLATION,
    "ins": EditTask.TEXT_INSERTION,
    "del": EditTask.TEXT_DELETION,
    "rep": EditTask.TEXT_REPLACEMENT,
    "style": EditTask.TEXT_STYLE,
}


def parse_task(token: str) -> EditTask:
    token = token.strip().lower()
    if token in TASK_ALIASES:
        return TASK_ALIASES[token]
    try:
        return EditTask(token)
    except ValueError:
        raise ValueError(f"unknown task kind {token!r}") from None


class Provenance(enum.Enum):
    SYNTHETIC = "synthetic"
    REAL_CANDIDATE = "real-candidate"
    REAL_ACCEPTED = "real-accepted"


class SampleError(ValueError):
    pass


@dataclass(frozen=True)
class EditSample:
    """One supervised editing tuple.

    ``input`` already carries the rendered scribble; ``base`` is the same
    frame before the scribble went in (kept so scribbles can be re-rendered
    in a fresh color and so judges can see the original).
    """

    id: str
    input: ImageBuffer
    instruction: str
    target: ImageBuffer
    scribble: ScribbleSpec
    task: EditTask
    provenance: Provenance
    edit_mask: np.ndarray | None = None
    base: ImageBuffer | None = None
    changed_region: BBox | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise SampleError(f"sample {self.id}: empty instruction")
        if not self.input.same_size(self.target):
            raise SampleError(
                f"sample {self.id}: input {self.input.width}x{self.input.height} "
                f"vs target {self.target.width}x{self.target.height}"
            )
        if self.edit_mask is not None:
            if self.edit_mask.shape != (self.input.height, self.input.width):
                raise SampleError(f"sample {self.id}: mask shape {self.edit_mask.shape} mismatch")
        if self.base is not None and not self.base.same_size(self.input):
            raise SampleError(f"sample {self.id}: base/input size mismatch")

    def validate(self) -> None:
        """Re-run the construction invariants (used at export time)."""
        self.__post_init__()
