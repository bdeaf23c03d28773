"""Judge prompt construction from the canonical shipped templates.

The three rubric templates are bundled verbatim as package data; building a
prompt substitutes the single ``{prompt}`` slot with the sample's editing
instruction and changes nothing else. Tests pin the template hashes so any
accidental edit fails loudly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..images import ImageBuffer

PROMPT_SLOT = "{prompt}"


class Criterion(enum.Enum):
    IA = "IA"  # instruction adherence
    CP = "CP"  # contextual preservation
    VC = "VC"  # visual coherence


@dataclass(frozen=True)
class CriterionSpec:
    criterion: Criterion
    template_file: str
    image_count: int
    keys: tuple[str, ...]  # required verdict keys, in rubric order


CRITERIA: dict[Criterion, CriterionSpec] = {
    Criterion.IA: CriterionSpec(
        Criterion.IA,
        "ia_prompt.txt",
        3,
        (
            "Visual_Instruction_Localization_Correctness",
            "Visual_Operator_Type_Compliance",
            "Textual_Action_Semantic_Compliance",
            "Text_Re-layout_Compliance",
        ),
    ),
    Criterion.CP: CriterionSpec(
        Criterion.CP,
        "cp_prompt.txt",
        2,
        ("Text_Contextual_Preservation",),
    ),
    Criterion.VC: CriterionSpec(
        Criterion.VC,
        "vc_prompt.txt",
        3,
        (
            "Text_Style_Consistency",
            "Text_Layout_Seamlessness",
            "Artifact-Free_Text_Generation",
        ),
    ),
}


@lru_cache(maxsize=None)
def template_text(criterion: Criterion) -> str:
    spec = CRITERIA[criterion]
    path = resources.files("scribbleforge.evaljudge").joinpath("data", spec.template_file)
    return path.read_text(encoding="utf-8")


@dataclass(frozen=True)
class JudgeRequest:
    criterion: Criterion
    prompt: str
    images: tuple[ImageBuffer, ...]
    sample_id: str | None = None  # lets offline judges find their ground truth

    def __post_init__(self) -> None:
        want = CRITERIA[self.criterion].image_count
        if len(self.images) != want:
            raise ValueError(
                f"{self.criterion.value} takes {want} images, got {len(self.images)}"
            )


def build_prompt(criterion: Criterion, instruction: str) -> str:
    """The shipped template with ``{prompt}`` substituted; nothing else changes."""
    if not instruction.strip():
        raise ValueError("instruction must be non-empty")
    return template_text(criterion).replace(PROMPT_SLOT, instruction)


def build_request(
    criterion: Criterion,
    instruction: str,
    *,
    original: ImageBuffer | None = None,
    scribbled: ImageBuffer,
    output: ImageBuffer,
    sample_id: str | None = None,
) -> JudgeRequest:
    """Assemble the image tuple in rubric order for ``criterion``.

    IA and VC see (original, scribbled input, model output); CP sees only
    (scribbled input, model output).
    """
    if criterion is Criterion.CP:
        images: tuple[ImageBuffer, ...] = (scribbled, output)
    else:
        if original is None:
            raise ValueError(f"{criterion.value} needs the original image")
        images = (original, scribbled, output)
    return JudgeRequest(
        criterion=criterion,
        prompt=build_prompt(criterion, instruction),
        images=images,
        sample_id=sample_id,
    )
