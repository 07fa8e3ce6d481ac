"""Linear/mixed-integer program containers and the solver result contract."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionError

# Row senses. Stored as small ints so matrices of rows stay compact.
LE, EQ, GE = -1, 0, 1


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LinearProgram:
    """min c@x  s.t.  A x {<=,=,>=} b,  lb <= x <= ub (ub may be +inf)."""

    c: np.ndarray
    a: sp.csr_matrix
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.c, dtype=float))
        a = sp.csr_matrix(self.a, dtype=float) if not sp.issparse(self.a) else self.a.tocsr().astype(float)
        senses = np.asarray(self.senses, dtype=np.int8)
        b = np.asarray(self.b, dtype=float)
        lb = np.asarray(self.lb, dtype=float)
        ub = np.asarray(self.ub, dtype=float)
        m, n = a.shape
        if c.shape != (n,) or lb.shape != (n,) or ub.shape != (n,):
            raise DimensionError(f"objective/bounds length mismatch with {n} columns")
        if senses.shape != (m,) or b.shape != (m,):
            raise DimensionError(f"senses/rhs length mismatch with {m} rows")
        if not np.all(np.isfinite(c)):
            raise ValueError("objective coefficients must be finite")
        if not np.all(np.isfinite(lb)):
            raise ValueError("lower bounds must be finite")
        if not np.all(np.isfinite(b)):
            raise ValueError("right-hand sides must be finite")
        if np.any(lb > ub):
            raise ValueError("lb > ub for some variable")
        for name, val in (("c", c), ("a", a), ("senses", senses), ("b", b), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def m(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class MixedIntegerProgram:
    lp: LinearProgram
    binary: np.ndarray  # indices of variables constrained to {0, 1}

    def __post_init__(self):
        binary = np.asarray(self.binary, dtype=np.int64)
        if binary.size and (binary.min() < 0 or binary.max() >= self.lp.n):
            raise DimensionError("binary index out of range")
        object.__setattr__(self, "binary", binary)


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float = float("nan")
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    gap: float | None = None
    iterations: int = 0
    incumbent_trace: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


class LpBuilder:
    """Incremental COO assembly of a LinearProgram.

    Variables are appended with bounds and objective coefficients; rows are
    appended as (coefficient, column) lists. Used by the operational-model
    and embedding builders.
    """

    def __init__(self):
        self._obj = []
        self._lb = []
        self._ub = []
        self._rows_i = []
        self._rows_j = []
        self._rows_v = []
        self._senses = []
        self._rhs = []

    def add_var(self, obj: float = 0.0, lb: float = 0.0, ub: float = np.inf) -> int:
        self._obj.append(obj)
        self._lb.append(lb)
        self._ub.append(ub)
        return len(self._obj) - 1

    def add_vars(self, count: int, obj=0.0, lb=0.0, ub=np.inf) -> np.ndarray:
        start = len(self._obj)
        self._obj.extend(np.broadcast_to(obj, count).tolist())
        self._lb.extend(np.broadcast_to(lb, count).tolist())
        self._ub.extend(np.broadcast_to(ub, count).tolist())
        return np.arange(start, start + count)

    def add_row(self, cols, vals, sense: int, rhs: float) -> int:
        r = len(self._rhs)
        for c, v in zip(cols, vals):
            if v != 0.0:
                self._rows_i.append(r)
                self._rows_j.append(int(c))
                self._rows_v.append(float(v))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        return r

    def set_obj(self, col: int, coeff: float) -> None:
        self._obj[col] = coeff

    def set_bounds(self, col: int, lb: float | None = None, ub: float | None = None) -> None:
        if lb is not None:
            self._lb[col] = float(lb)
        if ub is not None:
            self._ub[col] = float(ub)

    def get_ub(self, col: int) -> float:
        return self._ub[col]

    @property
    def num_vars(self) -> int:
        return len(self._obj)

    @property
    def num_rows(self) -> int:
        return len(self._rhs)

    def build(self) -> LinearProgram:
        n = len(self._obj)
        m = len(self._rhs)
        a = sp.coo_matrix(
            (self._rows_v, (self._rows_i, self._rows_j)), shape=(m, n)
        ).tocsr()
        a.sum_duplicates()
        return LinearProgram(
            c=np.array(self._obj, dtype=float),
            a=a,
            senses=np.array(self._senses, dtype=np.int8),
            b=np.array(self._rhs, dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
        )
