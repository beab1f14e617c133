"""Input data container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class DataMatrix:
    """A d x n matrix whose columns are data points, with cached radius.

    Immutable: build a new instance to change the data, which also keeps
    the cached radius consistent.
    """

    values: np.ndarray
    radius: float = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidParameterError("data matrix must be 2-D (d x n)")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("data matrix contains non-finite values")
        values = np.asfortranarray(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        norms = np.linalg.norm(values, axis=0)
        object.__setattr__(self, "radius", float(norms.max(initial=0.0)))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def column_norms_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->j", self.values, self.values)
