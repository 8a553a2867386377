# app/schema/problem_schema.py
from typing import List

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class AlphabetSizes(BaseModel):
    x: int = Field(..., ge=1, le=8)
    y: List[int] = Field(..., min_length=1)
    xhat: List[int] = Field(..., min_length=1)

    @field_validator("y", "xhat")
    @classmethod
    def validate_sizes(cls, v: List[int]) -> List[int]:
        if any(size < 1 or size > 8 for size in v):
            raise ValueError("Alphabet sizes must lie in [1, 8]")
        return v


class ProblemFile(BaseModel):
    """On-disk problem document: joint pmf over (x, y_1..y_k) plus one distortion matrix per user."""
    k: int = Field(..., ge=1)
    alphabets: AlphabetSizes
    joint: list
    distortion: List[List[List[float]]]

    @model_validator(mode="after")
    def validate_shapes(self):
        k = self.k
        if len(self.alphabets.y) != k or len(self.alphabets.xhat) != k:
            raise ValueError(f"alphabets.y and alphabets.xhat need {k} entries")
        if len(self.distortion) != k:
            raise ValueError(f"Expected {k} distortion matrices, got {len(self.distortion)}")

        expected = (self.alphabets.x,) + tuple(self.alphabets.y)
        try:
            joint = np.asarray(self.joint, dtype=float)
        except (TypeError, ValueError):
            raise ValueError("joint must be a rectangular nested array of numbers")
        if joint.shape != expected:
            raise ValueError(f"joint has shape {joint.shape}, expected {expected}")
        if np.any(joint < 0) or not np.all(np.isfinite(joint)):
            raise ValueError("joint entries must be finite and non-negative")
        total = float(joint.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"joint sums to {total!r}, expected 1")

        for j, matrix in enumerate(self.distortion):
            d = np.asarray(matrix, dtype=float)
            if d.shape != (self.alphabets.x, self.alphabets.xhat[j]):
                raise ValueError(
                    f"distortion[{j}] has shape {d.shape}, expected ({self.alphabets.x}, {self.alphabets.xhat[j]})"
                )
            if np.any(d < 0):
                raise ValueError(f"distortion[{j}] has negative entries")
        return self
