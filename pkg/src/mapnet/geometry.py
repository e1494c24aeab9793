"""geometry"""

from __future__ import annotations
from dataclasses import dataclass
import math

import numpy as np


@dataclass
class Region:
    """
    Bounded box a MAP may occupy. UEs live on its ground footprint (z = 0).

    Attributes
    ----------
    x_min, x_max : `float = 0, 200`
        Horizontal extent along x in meters
    y_min, y_max : `float = 0, 200`
        Horizontal extent along y in meters
    h_min, h_max : `float = 20, 120`
        Altitude band of the MAPs in meters
    """

    x_min: float = 0.0
    x_max: float = 200.0
    y_min: float = 0.0
    y_max: float = 200.0
    h_min: float = 20.0
    h_max: float = 120.0

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min, self.h_min])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.x_max, self.y_max, self.h_max])

    @property
    def extents(self) -> np.ndarray:
        """Side lengths (x, y, z) used to normalize observations"""

        return self.upper - self.lower

    @property
    def diameter(self) -> float:
        """Largest distance between two points of the box"""

        return float(np.linalg.norm(self.extents))

    @property
    def mid_height(self) -> float:
        return 0.5 * (self.h_min + self.h_max)

    def contains(self, loc: np.ndarray, tol: float = 1e-9) -> bool:
        """Check a 3D location lies inside the box"""

        return bool(np.all(loc >= self.lower - tol) and np.all(loc <= self.upper + tol))

    def clip(self, loc: np.ndarray) -> np.ndarray:
        return np.clip(loc, self.lower, self.upper)

    def clip_ground(self, loc: np.ndarray) -> np.ndarray:
        return np.clip(loc, self.lower[:2], self.upper[:2])

    def uniform_ground(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` points uniformly on the footprint, shape (size, 2)"""

        return rng.uniform(self.lower[:2], self.upper[:2], size=(size, 2))

    def uniform(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` points uniformly inside the box, shape (size, 3)"""

        return rng.uniform(self.lower, self.upper, size=(size, 3))

    def translated(self, offset: np.ndarray) -> Region:
        return Region(
            x_min=self.x_min + float(offset[0]),
            x_max=self.x_max + float(offset[0]),
            y_min=self.y_min + float(offset[1]),
            y_max=self.y_max + float(offset[1]),
            h_min=self.h_min + float(offset[2]),
            h_max=self.h_max + float(offset[2]),
        )

    def validate(self) -> None | list[ValueError]:
        """
        Validate the bounds. Valid regions return `None`, otherwise a list of `ValueError`'s

        Returns
        -------
        `None | list[ValueError]`
        """

        errors: list[ValueError] = []
        if not self.x_max > self.x_min:
            errors.append(ValueError("region x_max should be greater than x_min"))

        if not self.y_max > self.y_min:
            errors.append(ValueError("region y_max should be greater than y_min"))

        if not self.h_max > self.h_min:
            errors.append(ValueError("region h_max should be greater than h_min"))

        if self.h_min < 0:
            errors.append(ValueError("region h_min should be positive"))

        if not all(math.isfinite(v) for v in (self.x_min, self.x_max, self.y_min, self.y_max, self.h_min, self.h_max)):
            errors.append(ValueError("region bounds should be finite"))

        if len(errors) > 0:
            return errors

        return None


def ground(loc: np.ndarray) -> np.ndarray:
    """Lift a 2D ground location to 3D (z = 0)"""

    return np.array([loc[0], loc[1], 0.0])


def distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))


def elevation_deg(tx: np.ndarray, rx: np.ndarray) -> float:
    """Elevation angle in degrees of the segment between two 3D points, seen from the lower end"""

    horizontal = float(np.hypot(tx[0] - rx[0], tx[1] - rx[1]))
    return math.degrees(math.atan2(abs(float(tx[2] - rx[2])), horizontal))
