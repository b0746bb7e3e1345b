"""Zero localization for analytic functions by winding numbers and subdivision.

The count of zeros (with multiplicity) inside a contour equals the total phase
change of f along it divided by 2 pi.  Phase change is tracked on an adaptively
refined boundary sample; no derivative of f is needed, and the result is an
exact integer once all increments are below pi/2.  Regions are subdivided
quadtree-style to localize the zeros; cuts that land on (or suspiciously near)
a zero are retried with a deterministic pseudo-random offset so results stay
reproducible.

Functions are evaluated in batches: ``f`` should accept a 1-d complex numpy
array and return the matching array of values (a scalar callable is wrapped
transparently, at a performance cost).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    BoundaryZeroError,
    CoverageError,
    NonConvergenceError,
    UnresolvableBoundaryError,
)

PHASE_CAP = math.pi / 2
MOD_RATIO_CAP = math.e ** 2
MAX_DEPTH = 24
RETRY_BUDGET = 8


@dataclass(frozen=True)
class Region:
    """A rectangle, disk, or real interval where zeros are counted."""

    kind: str
    lo: complex = 0j
    hi: complex = 0j
    center: complex = 0j
    radius: float = 0.0

    @classmethod
    def rectangle(cls, lo: complex, hi: complex) -> "Region":
        lo, hi = complex(lo), complex(hi)
        if not (lo.real < hi.real and lo.imag < hi.imag):
            raise ArgumentError(f"degenerate rectangle corners {lo}, {hi}")
        return cls("rectangle", lo=lo, hi=hi)

    @classmethod
    def disk(cls, center: complex, radius: float) -> "Region":
        if radius <= 0:
            raise ArgumentError("disk radius must be positive")
        return cls("disk", center=complex(center), radius=float(radius))

    @classmethod
    def interval(cls, a: float, b: float) -> "Region":
        if not a < b:
            raise ArgumentError("interval needs a < b")
        return cls("interval", lo=complex(a), hi=complex(b))

    @property
    def diameter(self) -> float:
        if self.kind == "rectangle":
            return max(self.hi.real - self.lo.real, self.hi.imag - self.lo.imag)
        if self.kind == "disk":
            return 2.0 * self.radius
        return self.hi.real - self.lo.real

    def contains(self, z: complex) -> bool:
        z = complex(z)
        if self.kind == "rectangle":
            return self.lo.real < z.real < self.hi.real and self.lo.imag < z.imag < self.hi.imag
        if self.kind == "disk":
            return abs(z - self.center) < self.radius
        return self.lo.real < z.real < self.hi.real and z.imag == 0

    def metadata(self) -> dict:
        if self.kind == "rectangle":
            return {
                "kind": "rectangle",
                "lo": [self.lo.real, self.lo.imag],
                "hi": [self.hi.real, self.hi.imag],
            }
        if self.kind == "disk":
            return {"kind": "disk", "center": [self.center.real, self.center.imag], "radius": self.radius}
        return {"kind": "interval", "a": self.lo.real, "b": self.hi.real}


@dataclass
class PointMeasure:
    """Zeros with multiplicities inside a region, sorted by location."""

    atoms: list  # of (location: complex, multiplicity: int)
    region: Region

    def __post_init__(self) -> None:
        self.atoms = sorted(self.atoms, key=lambda a: (a[0].real, a[0].imag))
        for loc, mult in self.atoms:
            if mult < 1:
                raise ArgumentError(f"multiplicity {mult} < 1 at {loc}")

    def total(self) -> int:
        return sum(m for _, m in self.atoms)

    def to_csv_lines(self):
        import json

        yield "# " + json.dumps(self.region.metadata(), sort_keys=True)
        yield "re,im,multiplicity"
        for loc, mult in self.atoms:
            yield f"{loc.real:.17g},{loc.imag:.17g},{mult}"


def _vectorized(f):
    def call(pts: np.ndarray) -> np.ndarray:
        vals = np.asarray(f(pts))
        if vals.shape != pts.shape:
            vals = np.array([complex(f(p)) for p in pts])
        return vals

    return call


def _boundary_points(region: Region, per_edge: int) -> np.ndarray:
    if region.kind == "rectangle":
        lo, hi = region.lo, region.hi
        corners = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)]
        pts = []
        for c0, c1 in zip(corners, corners[1:] + corners[:1]):
            t = np.arange(per_edge) / per_edge
            pts.append(c0 + (c1 - c0) * t)
        return np.concatenate(pts)
    if region.kind == "disk":
        t = np.arange(4 * per_edge) / (4 * per_edge)
        return region.center + region.radius * np.exp(2j * np.pi * t)
    raise ArgumentError(f"winding is undefined on region kind {region.kind!r}")


def winding_count(
    f,
    region: Region,
    min_modulus: float | None = None,
    per_edge: int = 16,
    clearance: float = 0.0,
) -> int:
    """Number of zeros of f inside the region, with multiplicity.

    Tracks the phase of f along the positively-oriented boundary, inserting
    midpoints into any sampled segment whose phase increment reaches pi/2,
    up to depth 24.  Raises BoundaryZeroError when |f| falls below the
    zero-detection threshold at any sample (default: 1e-13 times the largest
    boundary |f|), and NonConvergenceError at the depth cap.

    ``clearance`` raises the detection threshold to a fraction of the largest
    boundary value; subdivision uses it to keep cut lines well away from
    zeros so that refinement depth stays bounded.
    """
    fv = _vectorized(f)
    pts = _boundary_points(region, per_edge)
    vals = fv(pts)
    threshold = min_modulus if min_modulus is not None else 1e-13 * float(np.abs(vals).max())
    mags = np.abs(vals)
    if float(mags.min()) < threshold:
        raise BoundaryZeroError(f"|f| below {threshold:g} on the boundary of {region.metadata()}")
    if clearance:
        # a sample dipping far below both neighbours flags a zero hugging the contour
        local = np.maximum(np.roll(mags, 1), np.roll(mags, -1))
        if np.any(mags < clearance * local):
            raise BoundaryZeroError("boundary sample dips below the clearance margin")
    p0 = pts
    p1 = np.roll(pts, -1)
    v0 = vals
    v1 = np.roll(vals, -1)
    depth = np.zeros(len(pts), dtype=np.int64)
    total = 0.0
    while len(p0):
        # every live segment is probed at its quarter points; it is accepted
        # only when all four sub-increments stay below pi/2 (so a hidden full
        # revolution from zeros near the contour cannot slip through) and |f|
        # keeps a bounded ratio across the probes (which flags undersampled
        # fast rotation, e.g. near high-degree polynomial corners)
        q1 = 0.75 * p0 + 0.25 * p1
        qm = 0.5 * (p0 + p1)
        q3 = 0.25 * p0 + 0.75 * p1
        vq1, vqm, vq3 = fv(q1), fv(qm), fv(q3)
        probe_mags = np.abs(np.vstack([vq1, vqm, vq3]))
        if float(probe_mags.min()) < threshold:
            raise BoundaryZeroError(f"|f| below {threshold:g} on refined boundary sample")
        if clearance and np.any(
            probe_mags.min(axis=0) < clearance * np.maximum(np.abs(v0), np.abs(v1))
        ):
            raise BoundaryZeroError("refined boundary sample dips below the clearance margin")
        incs = np.vstack(
            [np.angle(vq1 / v0), np.angle(vqm / vq1), np.angle(vq3 / vqm), np.angle(v1 / vq3)]
        )
        all_mags = np.vstack([np.abs(v0), probe_mags, np.abs(v1)])
        done = (np.abs(incs).max(axis=0) < PHASE_CAP) & (
            all_mags.max(axis=0) <= MOD_RATIO_CAP * all_mags.min(axis=0)
        )
        total += float(incs[:, done].sum())
        bad = ~done
        if not bad.any():
            break
        if int(depth[bad].max()) >= MAX_DEPTH:
            raise NonConvergenceError(f"winding refinement hit depth cap {MAX_DEPTH}")
        p0 = np.concatenate([p0[bad], qm[bad]])
        p1 = np.concatenate([qm[bad], p1[bad]])
        v0 = np.concatenate([v0[bad], vqm[bad]])
        v1 = np.concatenate([vqm[bad], v1[bad]])
        depth = np.tile(depth[bad] + 1, 2)
    turns = total / (2.0 * math.pi)
    count = int(round(turns))
    if abs(turns - count) > 1e-6:
        raise NonConvergenceError(f"winding did not close to an integer: {turns}")
    return count


def _jitter(region: Region, attempt: int, extra: int = 0) -> np.ndarray:
    """Deterministic pseudo-random offsets in [-1, 1]^2 keyed to region coordinates."""
    raw = np.array(
        [region.lo.real, region.lo.imag, region.hi.real, region.hi.imag], dtype=np.float64
    ).view(np.uint64)
    seq = np.random.SeedSequence(entropy=[int(x) for x in raw] + [attempt, extra])
    return np.random.default_rng(seq).random(2) * 2.0 - 1.0


CUT_CLEARANCE = 1e-6


def _winding_with_retry(fv, region: Region, min_modulus):
    """Winding count, shifting the region deterministically off boundary zeros.

    A depth-cap failure is treated like a detected boundary zero: phase
    refinement stalls exactly when the contour passes through or hugs a zero.
    """
    current = region
    for attempt in range(RETRY_BUDGET):
        try:
            return winding_count(fv, current, min_modulus), current
        except (BoundaryZeroError, NonConvergenceError):
            step = 1e-3 * region.diameter * _jitter(region, attempt)
            shift = complex(step[0], step[1])
            current = Region.rectangle(region.lo + shift, region.hi + shift)
    raise UnresolvableBoundaryError(
        f"could not shift region off a boundary zero after {RETRY_BUDGET} retries"
    )


def _cut_is_clear(fv, lo: complex, hi: complex, cx: float, cy: float) -> bool:
    """Probe the two candidate cut lines: reject cuts passing near a zero."""
    ts = np.linspace(0.0, 1.0, 33)
    vertical = cx + 1j * (lo.imag + (hi.imag - lo.imag) * ts)
    horizontal = (lo.real + (hi.real - lo.real) * ts) + 1j * cy
    mags = np.abs(fv(np.concatenate([vertical, horizontal])))
    return float(mags.min()) >= CUT_CLEARANCE * float(mags.max())


def _newton_polish(fv, center: complex, tol: float, cell_diam: float) -> complex:
    h = max(tol / 20.0, 1e-12 * (1.0 + abs(center)))
    z = center
    for _ in range(50):
        vals = fv(np.array([z, z + h, z - h], dtype=complex))
        deriv = (vals[1] - vals[2]) / (2.0 * h)
        if deriv == 0:
            break
        step = vals[0] / deriv
        z = z - step
        if abs(step) < tol / 10.0:
            break
    if abs(z - center) > 2.0 * cell_diam:
        return center  # diverged; the cell center is within tol of the zero anyway
    return z


def locate_zeros(f, region: Region, tol: float, min_modulus: float | None = None) -> PointMeasure:
    """All zeros of f in a rectangle, located to ``tol``, with multiplicities.

    Quadtree subdivision: every cell holding zeros is split in four until its
    diameter is below tol; split lines that hit a zero (boundary-zero error or
    a parent/children count mismatch) are re-drawn with a deterministic offset,
    with a retry budget of 8.  Terminal cell centers are Newton-polished with a
    central-difference derivative.  The total multiplicity always equals the
    winding count of the full region boundary.
    """
    if region.kind != "rectangle":
        raise ArgumentError("locate_zeros operates on rectangle regions")
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    fv = _vectorized(f)
    total, root = _winding_with_retry(fv, region, min_modulus)
    atoms: list[tuple[complex, int]] = []
    stack = [(root, total)]
    while stack:
        cell, count = stack.pop()
        if count == 0:
            continue
        if cell.diameter <= tol:
            loc = _newton_polish(fv, 0.5 * (cell.lo + cell.hi), tol, cell.diameter)
            atoms.append((loc, count))
            continue
        lo, hi = cell.lo, cell.hi
        for attempt in range(RETRY_BUDGET):
            frac = np.array([0.5, 0.5])
            if attempt:
                # widen the jitter as retries accumulate
                frac = 0.5 + (0.1 + 0.04 * attempt) * _jitter(cell, attempt, extra=1)
            cx = lo.real + (hi.real - lo.real) * float(frac[0])
            cy = lo.imag + (hi.imag - lo.imag) * float(frac[1])
            if not _cut_is_clear(fv, lo, hi, cx, cy):
                continue
            children = [
                Region.rectangle(lo, complex(cx, cy)),
                Region.rectangle(complex(cx, lo.imag), complex(hi.real, cy)),
                Region.rectangle(complex(lo.real, cy), complex(cx, hi.imag)),
                Region.rectangle(complex(cx, cy), hi),
            ]
            try:
                counts = [winding_count(fv, child, min_modulus) for child in children]
            except (BoundaryZeroError, NonConvergenceError):
                continue
            if sum(counts) == count:
                stack.extend(zip(children, counts))
                break
            # a zero sits close enough to a cut to alias the phase; re-draw
        else:
            raise UnresolvableBoundaryError(
                f"subdivision of cell {cell.metadata()} failed after {RETRY_BUDGET} cut retries"
            )
    measure = PointMeasure(atoms, root)
    assert measure.total() == total, "zero count leaked during subdivision"
    return measure


def real_zeros(f, a: float, b: float, grid_step: float | None = None, tol: float = 1e-10) -> PointMeasure:
    """Sign-change zeros of a real function on (a, b), bisected to width ``tol``.

    Even-multiplicity (tangential) zeros produce no sign change and are not
    detected; all reported atoms carry multiplicity 1.  A grid node evaluating
    exactly to zero is reported as a zero directly.
    """
    if not a < b:
        raise ArgumentError("need a < b")
    if grid_step is None:
        grid_step = (b - a) / 2048.0

    def fv(xs: np.ndarray) -> np.ndarray:
        ys = np.asarray(f(xs))
        if ys.shape != xs.shape:
            ys = np.array([float(f(x)) for x in xs])
        return ys.astype(float)

    n = max(int(math.ceil((b - a) / grid_step)), 2)
    xs = np.linspace(a, b, n + 1)
    ys = fv(xs)
    atoms: list[tuple[complex, int]] = []
    for x, y in zip(xs, ys):
        if y == 0.0 and a < x < b:
            atoms.append((complex(x), 1))
    sign_change = np.nonzero((ys[:-1] * ys[1:]) < 0)[0]
    for i in sign_change:
        lo_x, hi_x = float(xs[i]), float(xs[i + 1])
        lo_y = float(ys[i])
        while hi_x - lo_x > tol:
            mid = 0.5 * (lo_x + hi_x)
            fm = float(fv(np.array([mid]))[0])
            if fm == 0.0:
                lo_x = hi_x = mid
                break
            if (lo_y < 0) != (fm < 0):
                hi_x = mid
            else:
                lo_x, lo_y = mid, fm
        root = 0.5 * (lo_x + hi_x)
        if a < root < b:
            atoms.append((complex(root), 1))
    return PointMeasure(atoms, Region.interval(a, b))


def disk_image(r: float) -> tuple[float, float]:
    """Center and radius of the half-plane image of the centered disk of radius r.

    The map (1+z)/(1-z) sends {|z| < r} onto the disk centered at
    (1+r^2)/(1-r^2) with radius 2r/(1-r^2).
    """
    if not 0 < r < 1:
        raise ArgumentError(f"r must lie in (0, 1), got {r}")
    return (1 + r * r) / (1 - r * r), 2 * r / (1 - r * r)


def count_in_mapped_disk(zeros: PointMeasure, r: float) -> int:
    """Total multiplicity of atoms inside the half-plane image of the r-disk."""
    center, radius = disk_image(r)
    region = zeros.region
    if region.kind == "rectangle":
        covered = (
            region.lo.real <= center - radius
            and region.hi.real >= center + radius
            and region.lo.imag <= -radius
            and region.hi.imag >= radius
        )
    elif region.kind == "disk":
        covered = abs(complex(center) - region.center) + radius <= region.radius
    else:
        covered = False
    if not covered:
        raise CoverageError(f"region {region.metadata()} does not cover the image disk of r={r}")
    return sum(m for loc, m in zeros.atoms if abs(loc - center) < radius)
