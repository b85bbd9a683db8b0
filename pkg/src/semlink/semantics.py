"""Triplets, attention heatmaps, personalised priority and query matching.

Heatmaps are plain 2-D float arrays indexed ``[row, column]`` (``[y, x]``);
boxes are half-open pixel ranges ``[x0, x1) x [y0, y1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "Box",
    "Heatmap",
    "TripletPattern",
    "Triplet",
    "ImageRecord",
    "UserProfile",
    "ScoreReport",
    "normalize_heatmap",
    "fuse_attention",
    "crop",
    "triplet_priority",
    "objective_priority",
    "match_score_am",
    "matching_triplets",
    "image_match_prob",
    "expected_score",
    "realized_score",
]

CONVENTIONS = ("text", "eq17")


@dataclass(frozen=True)
class Box:
    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ShapeError(f"box coordinate {name} must be a non-negative integer, got {v!r}")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ShapeError(f"empty box {self}")

    def fits(self, width: int, height: int) -> bool:
        return self.x1 <= width and self.y1 <= height

    def as_list(self):
        return [self.x0, self.y0, self.x1, self.y1]


class Heatmap:
    """Non-negative attention or saliency grid of shape ``(height, width)``."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.array(values, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ShapeError(f"heatmap must be a non-empty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("heatmap values must be finite and >= 0")
        arr.setflags(write=False)
        self.values = arr

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        return isinstance(other, Heatmap) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.values.shape, self.values.tobytes()))

    def __repr__(self):
        return f"Heatmap({self.height}x{self.width}, max={self.values.max():.3g})"


class TripletPattern(NamedTuple):
    subject: str
    relation: str
    object: str

    def __str__(self):
        return f"{self.subject} {self.relation} {self.object}"


@dataclass(frozen=True, eq=False)
class Triplet:
    subject: str
    relation: str
    object: str
    box_sub: Box
    box_obj: Box
    h_sub: Heatmap
    h_obj: Heatmap

    def __post_init__(self):
        for name in ("subject", "relation", "object"):
            if not getattr(self, name):
                raise DomainError(f"triplet {name} must be a non-empty string")
        if self.h_sub.shape != self.h_obj.shape:
            raise ShapeError("subject and object heatmaps must share dimensions")
        h, w = self.h_sub.shape
        for name in ("box_sub", "box_obj"):
            if not getattr(self, name).fits(w, h):
                raise ShapeError(f"{name} {getattr(self, name)} exceeds heatmap {w}x{h}")

    @property
    def pattern(self) -> TripletPattern:
        return TripletPattern(self.subject, self.relation, self.object)

    def __eq__(self, other):
        if not isinstance(other, Triplet):
            return NotImplemented
        return (self.pattern == other.pattern and self.box_sub == other.box_sub
                and self.box_obj == other.box_obj and self.h_sub == other.h_sub
                and self.h_obj == other.h_obj)


@dataclass(frozen=True, eq=True)
class ImageRecord:
    id: str
    size_bytes: int
    triplets: tuple

    def __post_init__(self):
        object.__setattr__(self, "triplets", tuple(self.triplets))
        if not self.id:
            raise DomainError("image id must be non-empty")
        if int(self.size_bytes) != self.size_bytes or self.size_bytes <= 0:
            raise DomainError(f"size_bytes must be a positive integer, got {self.size_bytes!r}")
        if not self.triplets:
            raise DomainError(f"image {self.id!r} has no triplets")

    @property
    def shape(self):
        return self.triplets[0].h_sub.shape


@dataclass(frozen=True, eq=True)
class UserProfile:
    user_id: int
    query: TripletPattern
    saliency: Mapping[str, Heatmap] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "query", TripletPattern(*self.query))
        if int(self.user_id) != self.user_id or self.user_id < 1:
            raise DomainError(f"user_id must be a positive integer, got {self.user_id!r}")

    def saliency_for(self, image: ImageRecord) -> Heatmap:
        try:
            s = self.saliency[image.id]
        except KeyError:
            raise DomainError(f"user {self.user_id} has no saliency map for image {image.id!r}") from None
        if s.shape != image.shape:
            raise ShapeError(f"saliency of user {self.user_id} for {image.id!r} is {s.shape}, "
                             f"image is {image.shape}")
        return s


@dataclass(frozen=True)
class ScoreReport:
    """Match-score bookkeeping for one user.

    ``n_in`` is a count for a realised transmission and an expectation
    (possibly fractional) for :func:`expected_score`.
    """

    n_rec: int
    n_in: float
    n_truth: int

    @property
    def s(self) -> float:
        return self.n_in / self.n_rec

    @property
    def s_tilde(self) -> float:
        return self.n_truth / self.n_rec

    @property
    def effectiveness(self) -> float:
        return self.s / self.s_tilde if self.n_truth else math.nan


def normalize_heatmap(h: Heatmap) -> Heatmap:
    """Divide by the global maximum; an all-zero grid is returned as is."""
    top = h.values.max()
    if top == 0:
        return h
    return Heatmap(h.values / top)


def fuse_attention(h_obj_attn: Heatmap, s_subj: Heatmap, alpha: float,
                   convention: str = "text") -> Heatmap:
    """Weighted sum of normalised objective attention and subjective saliency.

    ``text``: ``alpha * norm(H) + (1 - alpha) * norm(S)``, so ``alpha`` is
    the objective weight.  ``eq17`` swaps the weights.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if h_obj_attn.shape != s_subj.shape:
        raise ShapeError(f"attention {h_obj_attn.shape} and saliency {s_subj.shape} differ")
    if convention == "text":
        w_h, w_s = alpha, 1.0 - alpha
    elif convention == "eq17":
        w_h, w_s = 1.0 - alpha, alpha
    else:
        raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
    h = normalize_heatmap(h_obj_attn).values
    s = normalize_heatmap(s_subj).values
    # exact endpoints: no 0 * x round-off leaking into the other term
    if w_s == 0.0:
        return Heatmap(h)
    if w_h == 0.0:
        return Heatmap(s)
    return Heatmap(np.clip(w_h * h + w_s * s, 0.0, 1.0))


def crop(f: Heatmap, b: Box) -> Heatmap:
    if not b.fits(f.width, f.height):
        raise ShapeError(f"box {b} exceeds heatmap {f.width}x{f.height}")
    return Heatmap(f.values[b.y0:b.y1, b.x0:b.x1])


def triplet_priority(t: Triplet, s_user: Heatmap, alpha: float, convention: str = "text") -> float:
    f_sub = fuse_attention(t.h_sub, s_user, alpha, convention)
    f_obj = fuse_attention(t.h_obj, s_user, alpha, convention)
    return float(crop(f_sub, t.box_sub).values.max() * crop(f_obj, t.box_obj).values.max())


def objective_priority(t: Triplet) -> float:
    return float(crop(normalize_heatmap(t.h_sub), t.box_sub).values.max()
                 * crop(normalize_heatmap(t.h_obj), t.box_obj).values.max())


def match_score_am(received: Iterable, query) -> int:
    """1 if some received triplet equals the query exactly, else 0."""
    q = TripletPattern(*query)
    for r in received:
        pat = r.pattern if isinstance(r, Triplet) else TripletPattern(*r)
        if pat == q:
            return 1
    return 0


def matching_triplets(image: ImageRecord, query) -> list:
    """Indices of the image's triplets equal to the query."""
    q = TripletPattern(*query)
    return [i for i, t in enumerate(image.triplets) if t.pattern == q]


def image_match_prob(delivery_probs: Sequence[float]) -> float:
    """Probability that at least one of independently dropped matches arrives."""
    miss = 1.0
    for d in delivery_probs:
        if not 0.0 <= d <= 1.0:
            raise DomainError(f"delivery probability must lie in [0, 1], got {d}")
        miss *= 1.0 - d
    return 1.0 - miss


def expected_score(user: UserProfile, dataset: Sequence[ImageRecord],
                   delivery: Mapping) -> ScoreReport:
    """Expected match score under independent triplet drops.

    ``delivery`` maps ``(image_id, triplet_index)`` to a delivery
    probability; only the triplets matching the user's query are looked up.
    """
    n_in = 0.0
    n_truth = 0
    for img in dataset:
        idx = matching_triplets(img, user.query)
        if not idx:
            continue
        n_truth += 1
        n_in += image_match_prob([delivery[(img.id, i)] for i in idx])
    return ScoreReport(len(dataset), n_in, n_truth)


def realized_score(user: UserProfile, dataset: Sequence[ImageRecord], delivered: Mapping) -> ScoreReport:
    """Score of one transmission; ``delivered`` maps ``image_id`` to the received triplets."""
    n_in = 0
    n_truth = 0
    for img in dataset:
        if matching_triplets(img, user.query):
            n_truth += 1
        n_in += match_score_am(delivered.get(img.id, ()), user.query)
    return ScoreReport(len(dataset), n_in, n_truth)


from .dataset import SynthSpec, load_dataset, save_dataset, synth_dataset  # noqa: E402

__all__ += ["SynthSpec", "load_dataset", "save_dataset", "synth_dataset"]
