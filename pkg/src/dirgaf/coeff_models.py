"""Coefficient distributions for the random series and reproducible sampling streams.

The series coefficients are i.i.d. copies of a centered R^2-valued vector
(eta, theta) with finite second moment.  This module defines the supported
distribution zoo, the exact covariance structure of each model, and
counter-based random streams that make draw k of replicate j a pure function
of (master_seed, j, k), independent of thread count and evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from .errors import ArgumentError

_MASK64 = (1 << 64) - 1

# Publicly documented model names (config key ``coefficients.kind``).
MODEL_NAMES = ("rademacher", "gauss-real", "gauss-complex", "circle", "two-point")


@dataclass(frozen=True)
class CovarianceSpec:
    """Second-moment structure of (eta, theta): variances and the cross term."""

    sigma1_sq: float
    sigma2_sq: float
    rho: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma1_sq < 0 or self.sigma2_sq < 0:
            raise ArgumentError("variances must be nonnegative")
        if self.rho ** 2 > self.sigma1_sq * self.sigma2_sq + 1e-15:
            raise ArgumentError(
                f"rho^2={self.rho ** 2:g} exceeds sigma1_sq*sigma2_sq="
                f"{self.sigma1_sq * self.sigma2_sq:g}: not a covariance matrix"
            )
        if self.sigma1_sq + self.sigma2_sq <= 0:
            raise ArgumentError("degenerate model: sigma1_sq + sigma2_sq must be positive")

    @property
    def second_moment(self) -> float:
        """E(eta^2 + theta^2)."""
        return self.sigma1_sq + self.sigma2_sq

    @property
    def is_isotropic(self) -> bool:
        return math.isclose(self.sigma1_sq, self.sigma2_sq, rel_tol=0, abs_tol=1e-12) and abs(self.rho) < 1e-12

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.sigma1_sq, self.rho], [self.rho, self.sigma2_sq]])


@dataclass(frozen=True)
class CoefficientModel:
    """A mean-zero law for (eta, theta), selected by ``kind``.

    Two-point models carry their atoms and hit probability in ``params``;
    the other kinds are parameter-free.
    """

    kind: str
    params: tuple = field(default=())

    def __post_init__(self) -> None:
        if self.kind not in MODEL_NAMES:
            raise ArgumentError(f"unknown coefficient model {self.kind!r}; expected one of {MODEL_NAMES}")
        if self.kind == "two-point":
            if len(self.params) != 5:
                raise ArgumentError("two-point model needs params (x1, y1, x2, y2, p)")
            x1, y1, x2, y2, p = self.params
            if not 0 < p < 1:
                raise ArgumentError("two-point probability must lie in (0, 1)")
            mx = p * x1 + (1 - p) * x2
            my = p * y1 + (1 - p) * y2
            if abs(mx) > 1e-12 or abs(my) > 1e-12:
                raise ArgumentError(f"two-point atoms are not centered: mean=({mx:g}, {my:g})")
            if x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2 == 0:
                raise ArgumentError("two-point atoms are all zero")
        elif self.params:
            raise ArgumentError(f"model {self.kind!r} takes no parameters")

    # -- constructors ------------------------------------------------------

    @classmethod
    def rademacher(cls) -> "CoefficientModel":
        """eta = +/-1 with probability 1/2 each, theta = 0."""
        return cls("rademacher")

    @classmethod
    def gauss_real(cls) -> "CoefficientModel":
        """eta standard real Gaussian, theta = 0."""
        return cls("gauss-real")

    @classmethod
    def gauss_complex(cls) -> "CoefficientModel":
        """eta + i*theta standard complex Gaussian (Var eta = Var theta = 1/2)."""
        return cls("gauss-complex")

    @classmethod
    def circle(cls) -> "CoefficientModel":
        """(eta, theta) uniform on the unit circle."""
        return cls("circle")

    @classmethod
    def two_point(cls, point: complex, p: float = 0.5) -> "CoefficientModel":
        """Two-atom law along ``point`` with hit probability ``p``, centered by construction.

        Atoms are point*sqrt((1-p)/p) with probability p and -point*sqrt(p/(1-p))
        with probability 1-p, so the mean vanishes for any p in (0, 1).
        """
        if not 0 < p < 1:
            raise ArgumentError("two-point probability must lie in (0, 1)")
        z1 = complex(point) * math.sqrt((1 - p) / p)
        z2 = -complex(point) * math.sqrt(p / (1 - p))
        return cls("two-point", (z1.real, z1.imag, z2.real, z2.imag, float(p)))

    @classmethod
    def from_name(cls, name: str, **kwargs) -> "CoefficientModel":
        if name == "two-point":
            return cls.two_point(complex(kwargs.get("point", 1.0)), float(kwargs.get("p", 0.2)))
        return cls(name)

    # -- properties --------------------------------------------------------

    @property
    def is_real(self) -> bool:
        """True when theta is almost surely zero."""
        if self.kind in ("rademacher", "gauss-real"):
            return True
        if self.kind == "two-point":
            _, y1, _, y2, _ = self.params
            return y1 == 0 and y2 == 0
        return False


def implied_covariance(model: CoefficientModel) -> CovarianceSpec:
    """Exact (Var eta, Var theta, Cov) of the model's law."""
    if model.kind in ("rademacher", "gauss-real"):
        return CovarianceSpec(1.0, 0.0, 0.0)
    if model.kind in ("gauss-complex", "circle"):
        return CovarianceSpec(0.5, 0.5, 0.0)
    x1, y1, x2, y2, p = model.params
    q = 1 - p
    return CovarianceSpec(
        p * x1 * x1 + q * x2 * x2,
        p * y1 * y1 + q * y2 * y2,
        p * x1 * y1 + q * x2 * y2,
    )


def covariance_sqrt(spec: CovarianceSpec) -> np.ndarray:
    """Symmetric PSD square root M of the 2x2 covariance matrix, M @ M = C."""
    c = spec.as_matrix()
    w, v = np.linalg.eigh(c)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def _words_to_uniform(words: np.ndarray) -> np.ndarray:
    # 53-bit mantissa from the top bits, shifted into the open interval (0, 1)
    return (words >> np.uint64(11)).astype(np.float64) * 2.0 ** -53 + 2.0 ** -54


# Lane tags separating independent randomness channels of one replicate.
LANE_PAIRS = 0
LANE_TAIL = 1
LANE_AUX = 2


@dataclass(frozen=True)
class CoefficientStream:
    """Reproducible source of (eta, theta) draws for one replicate.

    Draw k consumes exactly one 4-word Philox block at counter position k,
    so any contiguous range of draws can be produced without generating its
    prefix, and the sequence never depends on scheduling.
    """

    model: CoefficientModel
    master_seed: int
    replicate_id: int = 0

    def __post_init__(self) -> None:
        if self.replicate_id < 0:
            raise ArgumentError("replicate_id must be >= 0")

    def _key(self, lane: int) -> np.ndarray:
        return np.array(
            [self.master_seed & _MASK64, ((self.replicate_id << 2) | lane) & _MASK64],
            dtype=np.uint64,
        )

    def _raw_blocks(self, lane: int, offset: int, count: int) -> np.ndarray:
        bg = Philox(key=self._key(lane))
        if offset:
            bg.advance(offset)
        return bg.random_raw(4 * count).reshape(count, 4)

    def pairs(self, count: int, offset: int = 0) -> np.ndarray:
        """Draws offset..offset+count-1 as an array of shape (count, 2)."""
        if count < 0:
            raise ArgumentError("count must be nonnegative")
        if count == 0:
            return np.empty((0, 2))
        words = self._raw_blocks(LANE_PAIRS, offset, count)
        out = np.zeros((count, 2))
        kind = self.model.kind
        if kind == "rademacher":
            out[:, 0] = np.where(words[:, 0] >> np.uint64(63), 1.0, -1.0)
        elif kind == "gauss-real":
            out[:, 0] = ndtri(_words_to_uniform(words[:, 0]))
        elif kind == "gauss-complex":
            root_half = math.sqrt(0.5)
            out[:, 0] = ndtri(_words_to_uniform(words[:, 0])) * root_half
            out[:, 1] = ndtri(_words_to_uniform(words[:, 1])) * root_half
        elif kind == "circle":
            t = 2.0 * math.pi * _words_to_uniform(words[:, 0])
            out[:, 0] = np.cos(t)
            out[:, 1] = np.sin(t)
        else:  # two-point
            x1, y1, x2, y2, p = self.model.params
            hit = _words_to_uniform(words[:, 0]) < p
            out[:, 0] = np.where(hit, x1, x2)
            out[:, 1] = np.where(hit, y1, y2)
        return out

    def tail_normals(self, count: int, offset: int = 0) -> np.ndarray:
        """Standard normal pairs, shape (count, 2), from the tail lane."""
        if count == 0:
            return np.empty((0, 2))
        words = self._raw_blocks(LANE_TAIL, offset, count)
        out = np.empty((count, 2))
        out[:, 0] = ndtri(_words_to_uniform(words[:, 0]))
        out[:, 1] = ndtri(_words_to_uniform(words[:, 1]))
        return out

    def bulk_generator(self, lane: int = LANE_AUX) -> Generator:
        """numpy Generator bound to this stream identity, for bulk sampling.

        Unlike :meth:`pairs`, consumption is sequential; use for replicate-level
        Monte Carlo where only the (seed, replicate) binding must be stable.
        """
        return Generator(Philox(key=self._key(lane)))


def sample_pairs(stream: CoefficientStream, count: int) -> np.ndarray:
    """First ``count`` coefficient pairs of the stream, indices n = 2..count+1."""
    if count < 1:
        raise ArgumentError("empty request: count must be >= 1")
    return stream.pairs(count)


def draw_pairs_bulk(model: CoefficientModel, rng: Generator, count: int) -> np.ndarray:
    """Fast bulk draws of (eta, theta) from a numpy Generator.

    Same laws as :meth:`CoefficientStream.pairs` but using the generator's
    native samplers; meant for high-replicate experiments where per-index
    addressing is unnecessary.
    """
    out = np.zeros((count, 2))
    kind = model.kind
    if kind == "rademacher":
        out[:, 0] = rng.integers(0, 2, size=count) * 2.0 - 1.0
    elif kind == "gauss-real":
        out[:, 0] = rng.standard_normal(count)
    elif kind == "gauss-complex":
        out[:, :] = rng.standard_normal((count, 2)) * math.sqrt(0.5)
    elif kind == "circle":
        t = 2.0 * math.pi * rng.random(count)
        out[:, 0] = np.cos(t)
        out[:, 1] = np.sin(t)
    else:
        x1, y1, x2, y2, p = model.params
        hit = rng.random(count) < p
        out[:, 0] = np.where(hit, x1, x2)
        out[:, 1] = np.where(hit, y1, y2)
    return out
