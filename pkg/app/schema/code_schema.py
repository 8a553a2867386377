# app/schema/code_schema.py
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from app.config import SCHEMA_VERSION
from app.models.code import DecoderKind


class DecoderDocument(BaseModel):
    kind: DecoderKind
    table: Optional[list] = None
    tables: List[list] = []

    @model_validator(mode="after")
    def validate_kind(self):
        if self.kind == DecoderKind.SYMBOLWISE and self.table is None:
            raise ValueError("symbolwise decoders carry a table")
        if self.kind == DecoderKind.POLICY and not self.tables:
            raise ValueError("policy decoders carry one table per time step")
        return self


class Provenance(BaseModel):
    problem_sha256: Optional[str] = None
    aux_sha256: Optional[str] = None


class CodeDocument(BaseModel):
    """Exported (n, M^k) code: encoder table, stage codebooks and decoder rules."""
    schema_version: str = SCHEMA_VERSION
    n: int = Field(..., ge=1)
    m_sizes: List[int]
    encoder: List[List[int]]
    codebooks: List[list] = []
    decoders: List[DecoderDocument]
    seed: Optional[int] = None
    provenance: Provenance = Provenance()

    @model_validator(mode="after")
    def validate_users(self):
        if len(self.decoders) != len(self.m_sizes):
            raise ValueError("one decoder per user is required")
        if any(m < 1 for m in self.m_sizes):
            raise ValueError("message set sizes must be positive")
        return self
