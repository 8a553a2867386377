# app/models/code.py
import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.exceptions import InputError


class DecoderKind(str, enum.Enum):
    SYMBOLWISE = "symbolwise"
    POLICY = "policy"


def sequence_index(symbols: np.ndarray, alphabet: int) -> np.ndarray:
    """Lexicographic index of each row (first symbol most significant)."""
    symbols = np.asarray(symbols, dtype=np.int64)
    weights = alphabet ** np.arange(symbols.shape[-1] - 1, -1, -1, dtype=np.int64)
    return symbols @ weights


def all_sequences(alphabet: int, n: int) -> np.ndarray:
    """Every sequence of length n as rows, in lexicographic order."""
    grids = np.indices((alphabet,) * n).reshape(n, -1).T
    return grids.astype(np.int64)


@dataclass(frozen=True)
class UserDecoder:
    """
    Causal decoder of one user.

    symbolwise: xhat_i = table[w_1,i(s_1), ..., w_j,i(s^j), y_i], reading the
    stage codebooks of the owning Code.
    policy: tables[i] has shape (M_1, ..., M_j, |Y_j|^(i+1)) indexed by the
    lexicographic index of y_1..y_i.
    """

    kind: DecoderKind
    table: Optional[np.ndarray] = None
    tables: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        if self.kind == DecoderKind.SYMBOLWISE and self.table is None:
            raise InputError("A symbolwise decoder needs its table")
        if self.kind == DecoderKind.POLICY and not self.tables:
            raise InputError("A policy decoder needs one table per time step")
        if self.table is not None:
            table = np.array(self.table, dtype=np.int64)
            table.setflags(write=False)
            object.__setattr__(self, "table", table)
        tables = []
        for t in self.tables:
            t = np.array(t, dtype=np.int64)
            t.setflags(write=False)
            tables.append(t)
        object.__setattr__(self, "tables", tuple(tables))


@dataclass(frozen=True)
class Code:
    """
    An (n, M^k) code. `encoder[x_index]` is the message tuple (s_1..s_k) sent
    for the source sequence with that lexicographic index; `codebooks[j-1]`
    has shape (M_1, ..., M_j, n) and holds the stage-j auxiliary codewords.
    """

    n: int
    m_sizes: tuple[int, ...]
    encoder: np.ndarray
    codebooks: tuple[np.ndarray, ...]
    decoders: tuple[UserDecoder, ...]
    seed: Optional[int] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise InputError("Blocklength must be positive")
        m_sizes = tuple(int(m) for m in self.m_sizes)
        if any(m < 1 for m in m_sizes):
            raise InputError("Message set sizes must be positive")
        encoder = np.array(self.encoder, dtype=np.int64)
        if encoder.ndim != 2 or encoder.shape[1] != len(m_sizes):
            raise InputError("Encoder table must have one column per user")
        if np.any(encoder < 0) or np.any(encoder >= np.array(m_sizes)):
            raise InputError("Encoder emits messages outside [M_j]")
        if len(self.decoders) != len(m_sizes):
            raise InputError("One decoder per user is required")
        encoder.setflags(write=False)
        codebooks = []
        for j, book in enumerate(self.codebooks, start=1):
            book = np.array(book, dtype=np.int64)
            if book.shape != m_sizes[:j] + (self.n,):
                raise InputError(f"Codebook {j} must have shape {m_sizes[:j] + (self.n,)}")
            book.setflags(write=False)
            codebooks.append(book)
        for j, decoder in enumerate(self.decoders, start=1):
            if decoder.kind == DecoderKind.SYMBOLWISE and len(codebooks) < j:
                raise InputError(f"Symbolwise decoder {j} needs codebooks for stages 1..{j}")
            if decoder.kind == DecoderKind.POLICY:
                if len(decoder.tables) != self.n:
                    raise InputError(f"Policy decoder {j} needs {self.n} time steps")
                for i, t in enumerate(decoder.tables):
                    if t.shape[:j] != m_sizes[:j] or t.ndim != j + 1:
                        raise InputError(f"Policy table {j} at time {i + 1} has the wrong shape")
        object.__setattr__(self, "m_sizes", m_sizes)
        object.__setattr__(self, "encoder", encoder)
        object.__setattr__(self, "codebooks", tuple(codebooks))
        object.__setattr__(self, "decoders", tuple(self.decoders))

    @property
    def k(self) -> int:
        return len(self.m_sizes)

    def encode(self, x_index: np.ndarray) -> np.ndarray:
        return self.encoder[np.asarray(x_index, dtype=np.int64)]

    def decode_batch(self, j: int, messages: np.ndarray, y: np.ndarray) -> np.ndarray:
        """
        Reconstructions of user j, shape (batch, n), for message rows
        (batch, >= j) and side-information rows (batch, n). Time i only reads
        y[:, :i+1].
        """
        messages = np.asarray(messages, dtype=np.int64)[:, :j]
        y = np.asarray(y, dtype=np.int64)
        decoder = self.decoders[j - 1]
        out = np.empty(y.shape, dtype=np.int64)
        prefix = tuple(messages[:, l] for l in range(j))
        if decoder.kind == DecoderKind.SYMBOLWISE:
            for i in range(self.n):
                words = tuple(self.codebooks[l][prefix[: l + 1] + (i,)] for l in range(j))
                out[:, i] = decoder.table[words + (y[:, i],)]
            return out
        alphabet = decoder.tables[0].shape[-1]
        history = np.zeros(y.shape[0], dtype=np.int64)
        for i in range(self.n):
            history = history * alphabet + y[:, i]
            out[:, i] = decoder.tables[i][prefix + (history,)]
        return out

    def decode(self, j: int, messages: tuple[int, ...], y: np.ndarray) -> np.ndarray:
        """Single-sequence convenience wrapper around decode_batch."""
        return self.decode_batch(j, np.asarray([messages]), np.asarray([y]))[0]
