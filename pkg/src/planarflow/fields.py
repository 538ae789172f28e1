"""Functions on darts and on vertices of a planar map."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError
from .planarmap import PlanarMap


class EdgeFunction:
    """Antisymmetric real function on the darts of a map.

    ``values[d]`` is the value on dart ``d``; ``values[twin[d]] == -values[d]``
    holds by construction.
    """

    __slots__ = ("map", "values")

    def __init__(self, pmap: PlanarMap, values, *, check: bool = True):
        values = np.asarray(values, dtype=float)
        if values.shape != (pmap.n_darts,):
            raise StructuralError(f"expected {pmap.n_darts} dart values, got shape {values.shape}")
        if check and pmap.n_darts:
            bad = np.abs(values + values[pmap.twin]) > 1e-12 * (1 + np.abs(values))
            if np.any(bad):
                d = int(np.flatnonzero(bad)[0])
                raise StructuralError(f"not antisymmetric at dart {d}")
        self.map = pmap
        self.values = values

    @classmethod
    def zeros(cls, pmap: PlanarMap) -> "EdgeFunction":
        return cls(pmap, np.zeros(pmap.n_darts), check=False)

    @classmethod
    def from_edge_values(cls, pmap: PlanarMap, edge_values) -> "EdgeFunction":
        """Values given on each edge's first dart."""
        edge_values = np.asarray(edge_values, dtype=float)
        if edge_values.shape != (pmap.n_edges,):
            raise StructuralError(f"expected {pmap.n_edges} edge values")
        values = np.empty(pmap.n_darts)
        values[pmap.edge_darts[:, 0]] = edge_values
        values[pmap.edge_darts[:, 1]] = -edge_values
        return cls(pmap, values, check=False)

    @classmethod
    def from_darts(cls, pmap: PlanarMap, dart_values: dict) -> "EdgeFunction":
        """Sparse dart assignment; missing twins are filled by antisymmetry."""
        values = np.zeros(pmap.n_darts)
        given = np.zeros(pmap.n_darts, dtype=bool)
        for d, x in dart_values.items():
            d = int(d)
            if not 0 <= d < pmap.n_darts:
                raise StructuralError(f"unknown dart {d}")
            t = int(pmap.twin[d])
            if given[t] and abs(values[t] + float(x)) > 1e-12 * (1 + abs(float(x))):
                raise StructuralError(f"darts {d} and {t} are not antisymmetric")
            values[d] = float(x)
            values[t] = -float(x)
            given[d] = given[t] = True
        return cls(pmap, values, check=False)

    def on_edges(self) -> np.ndarray:
        return self.values[self.map.edge_darts[:, 0]]

    def __getitem__(self, d: int) -> float:
        return float(self.values[d])

    def _same(self, other: "EdgeFunction") -> None:
        if other.map is not self.map and other.map != self.map:
            raise StructuralError("edge functions live on different maps")

    def __add__(self, other: "EdgeFunction") -> "EdgeFunction":
        self._same(other)
        return EdgeFunction(self.map, self.values + other.values, check=False)

    def __sub__(self, other: "EdgeFunction") -> "EdgeFunction":
        self._same(other)
        return EdgeFunction(self.map, self.values - other.values, check=False)

    def __neg__(self) -> "EdgeFunction":
        return EdgeFunction(self.map, -self.values, check=False)

    def __mul__(self, c: float) -> "EdgeFunction":
        return EdgeFunction(self.map, self.values * float(c), check=False)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "EdgeFunction":
        return EdgeFunction(self.map, self.values / float(c), check=False)

    def support(self, tol: float = 0.0) -> list[int]:
        return [int(e) for e in np.flatnonzero(np.abs(self.on_edges()) > tol)]

    def to_dict(self) -> dict:
        first = self.map.edge_darts[:, 0]
        return {"darts": {str(int(d)): float(self.values[d]) for d in first}}

    @classmethod
    def from_dict(cls, pmap: PlanarMap, data: dict) -> "EdgeFunction":
        try:
            return cls.from_darts(pmap, {int(k): v for k, v in data["darts"].items()})
        except (KeyError, AttributeError, ValueError) as exc:
            if isinstance(exc, StructuralError):
                raise
            raise StructuralError(f"bad flow JSON: {exc}") from None

    def __repr__(self) -> str:
        return f"EdgeFunction(E={self.map.n_edges}, energy={float(np.sum(self.on_edges() ** 2)):.6g})"


@dataclass
class Potential:
    """Real function on vertices with an optional set of prescribed vertices."""

    map: PlanarMap
    values: np.ndarray
    boundary: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.map.n_vertices,):
            raise StructuralError(f"expected {self.map.n_vertices} vertex values")
        self.boundary = frozenset(int(v) for v in self.boundary)

    def __getitem__(self, v: int) -> float:
        return float(self.values[v])

    def to_dict(self) -> dict:
        out = {"vertices": {str(v): float(x) for v, x in enumerate(self.values)}}
        if self.boundary:
            out["boundary"] = sorted(self.boundary)
        return out

    @classmethod
    def from_dict(cls, pmap: PlanarMap, data: dict) -> "Potential":
        values = np.zeros(pmap.n_vertices)
        for k, x in data["vertices"].items():
            v = int(k)
            if not 0 <= v < pmap.n_vertices:
                raise StructuralError(f"unknown vertex {v}")
            values[v] = float(x)
        return cls(pmap, values, frozenset(data.get("boundary", ())))
