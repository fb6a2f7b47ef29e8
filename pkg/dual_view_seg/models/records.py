"""Evaluation and manifest records"""

from pydantic import BaseModel, Field, model_validator


class EvalRecord(BaseModel):
    """Pixel counts of one prediction against its ground truth"""

    sample_id: str
    intersection: int = Field(ge=0)
    union: int = Field(ge=0)
    iou: float = Field(ge=0.0, le=1.0)
    category: str | None = None
    size_class: str | None = None

    @model_validator(mode="after")
    def check_counts(self) -> "EvalRecord":
        if self.intersection > self.union:
            raise ValueError("intersection exceeds union")
        if self.union > 0 and self.iou != self.intersection / self.union:
            raise ValueError("iou does not equal intersection / union")
        return self


class ManifestRecord(BaseModel):
    """One line of a dataset manifest"""

    sample_id: str
    image_path: str
    mask_path: str
    expression: str
    category: str | None = None
    size_class: str | None = None
