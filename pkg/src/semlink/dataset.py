"""Dataset manifests, heatmap grid files and the synthetic scene generator.

A manifest is a JSON document::

    {"images": [{"id": "img000", "size_bytes": 1270000,
                 "triplets": [{"subject": "woman", "relation": "has", "object": "hair",
                               "box_sub": [x0, y0, x1, y1], "box_obj": [...],
                               "h_sub": "heatmaps/img000_t0_sub.txt",
                               "h_obj": "heatmaps/img000_t0_obj.txt"}, ...]}, ...],
     "users": [{"id": 1, "query": ["woman", "has", "hair"],
                "saliency": {"img000": "heatmaps/u1_img000.txt", ...}}, ...]}

Heatmap paths are relative to the manifest.  A heatmap file holds a header
line ``H W`` followed by ``H`` rows of ``W`` decimal numbers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, SemlinkError
from .rng import substream
from .semantics import Box, Heatmap, ImageRecord, Triplet, TripletPattern, UserProfile

__all__ = [
    "SynthSpec",
    "REFERENCE_QUERIES",
    "read_heatmap",
    "write_heatmap",
    "load_dataset",
    "save_dataset",
    "synth_dataset",
]

REFERENCE_QUERIES = (
    TripletPattern("woman", "has", "hair"),
    TripletPattern("sign", "on", "building"),
    TripletPattern("woman", "wearing", "shirt"),
)

SUBJECTS = ("man", "woman", "car", "sign", "tree", "person", "bus", "dog")
RELATIONS = ("has", "on", "wearing", "near", "behind", "holding", "in")
OBJECTS = ("hair", "building", "shirt", "street", "window", "sidewalk", "pole", "jacket", "hat")


def read_heatmap(path) -> Heatmap:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read heatmap: {exc.strerror}", path=path) from None
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        raise ConfigError("empty heatmap file", path=path, line=1)
    lineno, header = rows[0]
    try:
        h, w = (int(v) for v in header.split())
    except ValueError:
        raise ConfigError(f"header must be 'H W', got {header!r}", path=path, line=lineno) from None
    if h <= 0 or w <= 0:
        raise ConfigError(f"non-positive dimensions {h}x{w}", path=path, line=lineno)
    body = rows[1:]
    if len(body) != h:
        where = body[-1][0] if body else lineno
        raise ConfigError(f"expected {h} rows, found {len(body)}", path=path, line=where)
    grid = np.empty((h, w))
    for r, (lineno, text) in enumerate(body):
        parts = text.split()
        if len(parts) != w:
            raise ConfigError(f"expected {w} values, found {len(parts)}", path=path, line=lineno)
        try:
            grid[r] = [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"non-numeric value in {text.strip()!r}", path=path, line=lineno) from None
        if not np.all(np.isfinite(grid[r])) or np.any(grid[r] < 0):
            raise ConfigError("values must be finite and >= 0", path=path, line=lineno)
    return Heatmap(grid)


def write_heatmap(path, h: Heatmap) -> None:
    # repr-precision floats so that save -> load reproduces the grid bit for bit
    out = [f"{h.height} {h.width}"]
    out.extend(" ".join(repr(float(v)) for v in row) for row in h.values)
    Path(path).write_text("\n".join(out) + "\n")


def _require(obj, key, where, path, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigError("missing required field", path=path, field=f"{where}.{key}")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}",
                          path=path, field=f"{where}.{key}")
    return val


def _box(raw, where, path) -> Box:
    if not (isinstance(raw, list) and len(raw) == 4 and all(isinstance(v, int) for v in raw)):
        raise ConfigError("box must be a list of 4 integers [x0, y0, x1, y1]", path=path, field=where)
    try:
        return Box(*raw)
    except SemlinkError as exc:
        raise ConfigError(str(exc), path=path, field=where) from None


def _pattern(raw, where, path) -> TripletPattern:
    if isinstance(raw, dict):
        raw = [raw.get("subject"), raw.get("relation"), raw.get("object")]
    if not (isinstance(raw, list) and len(raw) == 3 and all(isinstance(v, str) and v for v in raw)):
        raise ConfigError("query must be three non-empty strings", path=path, field=where)
    return TripletPattern(*raw)


def load_dataset(path):
    """Read a manifest and its heatmaps; returns ``(images, users)``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read manifest: {exc.strerror}", path=path) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, path=path, line=exc.lineno) from None
    base = path.parent
    cache = {}

    def heat(rel, where):
        if not isinstance(rel, str):
            raise ConfigError("heatmap path must be a string", path=path, field=where)
        full = (base / rel).resolve()
        if full not in cache:
            if not full.is_file():
                raise ConfigError(f"heatmap file {rel!r} not found", path=path, field=where)
            cache[full] = read_heatmap(full)
        return cache[full]

    images = []
    seen = set()
    for i, raw in enumerate(_require(doc, "images", "", path, list)):
        where = f"images[{i}]"
        img_id = _require(raw, "id", where, path, str)
        if img_id in seen:
            raise ConfigError(f"duplicate image id {img_id!r}", path=path, field=f"{where}.id")
        seen.add(img_id)
        size = _require(raw, "size_bytes", where, path, int)
        triplets = []
        for j, tr in enumerate(_require(raw, "triplets", where, path, list)):
            tw = f"{where}.triplets[{j}]"
            try:
                triplets.append(Triplet(
                    _require(tr, "subject", tw, path, str),
                    _require(tr, "relation", tw, path, str),
                    _require(tr, "object", tw, path, str),
                    _box(_require(tr, "box_sub", tw, path), f"{tw}.box_sub", path),
                    _box(_require(tr, "box_obj", tw, path), f"{tw}.box_obj", path),
                    heat(_require(tr, "h_sub", tw, path), f"{tw}.h_sub"),
                    heat(_require(tr, "h_obj", tw, path), f"{tw}.h_obj"),
                ))
            except ConfigError:
                raise
            except SemlinkError as exc:
                raise ConfigError(str(exc), path=path, field=tw) from None
        try:
            rec = ImageRecord(img_id, size, triplets)
        except SemlinkError as exc:
            raise ConfigError(str(exc), path=path, field=where) from None
        if any(t.h_sub.shape != rec.shape for t in rec.triplets):
            raise ConfigError("triplet heatmaps of one image must share dimensions", path=path, field=where)
        images.append(rec)

    by_id = {img.id: img for img in images}
    users = []
    for i, raw in enumerate(_require(doc, "users", "", path, list)):
        where = f"users[{i}]"
        uid = _require(raw, "id", where, path, int)
        query = _pattern(_require(raw, "query", where, path), f"{where}.query", path)
        sal = {}
        for img_id, rel in _require(raw, "saliency", where, path, dict).items():
            fw = f"{where}.saliency.{img_id}"
            if img_id not in by_id:
                raise ConfigError(f"unknown image id {img_id!r}", path=path, field=fw)
            h = heat(rel, fw)
            if h.shape != by_id[img_id].shape:
                raise ConfigError(f"saliency is {h.shape}, image is {by_id[img_id].shape}", path=path, field=fw)
            sal[img_id] = h
        try:
            users.append(UserProfile(uid, query, sal))
        except SemlinkError as exc:
            raise ConfigError(str(exc), path=path, field=where) from None
    return images, users


def save_dataset(path, images, users) -> Path:
    """Write a manifest plus a ``heatmaps/`` directory next to it."""
    path = Path(path)
    hdir = path.parent / "heatmaps"
    hdir.mkdir(parents=True, exist_ok=True)

    def put(name, h):
        write_heatmap(hdir / name, h)
        return f"heatmaps/{name}"

    doc = {"images": [], "users": []}
    for img in images:
        trs = []
        for j, t in enumerate(img.triplets):
            trs.append({
                "subject": t.subject, "relation": t.relation, "object": t.object,
                "box_sub": t.box_sub.as_list(), "box_obj": t.box_obj.as_list(),
                "h_sub": put(f"{img.id}_t{j}_sub.txt", t.h_sub),
                "h_obj": put(f"{img.id}_t{j}_obj.txt", t.h_obj),
            })
        doc["images"].append({"id": img.id, "size_bytes": img.size_bytes, "triplets": trs})
    for u in users:
        doc["users"].append({
            "id": u.user_id,
            "query": list(u.query),
            "saliency": {k: put(f"u{u.user_id}_{k}.txt", v) for k, v in sorted(u.saliency.items())},
        })
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=1) + "\n")
    os.replace(tmp, path)
    return path


@dataclass(frozen=True)
class SynthSpec:
    """Knobs of the synthetic scene generator.

    Every image gets ``triplets_per_image`` triplets drawn from the
    vocabulary; each user's query is planted in an image with probability
    ``query_rate``.  Objective attention maps are a Gaussian blob on the
    entity box plus a stray blob of random height in ``stray_level``, so the
    in-box share of attention varies between triplets.  A user's saliency
    puts blobs on the entities of their query (height ``query_salience``)
    and on ``n_decoys`` other triplets' entities (height in ``decoy_level``).
    ``query_stray`` overrides ``stray_level`` for the planted query triplets,
    which makes them more (or less) prominent to the detector.
    """

    n_images: int = 59
    n_users: int = 3
    triplets_per_image: int = 10
    width: int = 32
    height: int = 24
    queries: tuple = REFERENCE_QUERIES
    subjects: tuple = SUBJECTS
    relations: tuple = RELATIONS
    objects: tuple = OBJECTS
    query_rate: float = 0.4
    size_bytes: int = 1_270_000
    blob_sigma: tuple = (1.5, 3.5)
    stray_level: tuple = (0.2, 1.6)
    query_salience: float = 1.0
    decoy_level: tuple = (0.6, 1.0)
    n_decoys: int = 3
    background: float = 0.02
    query_stray: tuple | None = (0.0, 0.3)

    def __post_init__(self):
        if self.n_images < 1 or self.n_users < 1 or self.triplets_per_image < 1:
            raise ConfigError("n_images, n_users and triplets_per_image must be >= 1")
        if self.width < 4 or self.height < 4:
            raise ConfigError("synthetic images must be at least 4x4")
        if not 0.0 <= self.query_rate <= 1.0:
            raise ConfigError("query_rate must lie in [0, 1]", field="query_rate")
        object.__setattr__(self, "queries", tuple(TripletPattern(*q) for q in self.queries))
        if not self.queries:
            raise ConfigError("at least one query is required", field="queries")

    def query_for(self, user_index: int) -> TripletPattern:
        return self.queries[user_index % len(self.queries)]


def _blob(shape, cx, cy, sigma, amp):
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    return amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma**2))


def _random_box(rng, w, h):
    bw = int(rng.integers(3, max(4, w // 3) + 1))
    bh = int(rng.integers(3, max(4, h // 3) + 1))
    x0 = int(rng.integers(0, w - bw + 1))
    y0 = int(rng.integers(0, h - bh + 1))
    return Box(x0, y0, x0 + bw, y0 + bh)


def _centre(b: Box):
    return (b.x0 + b.x1 - 1) / 2.0, (b.y0 + b.y1 - 1) / 2.0


def _attention(rng, spec, box, stray):
    shape = (spec.height, spec.width)
    cx, cy = _centre(box)
    g = _blob(shape, cx, cy, rng.uniform(*spec.blob_sigma), 1.0)
    # stray attention somewhere else in the frame
    sx, sy = rng.uniform(0, spec.width - 1), rng.uniform(0, spec.height - 1)
    g += _blob(shape, sx, sy, rng.uniform(*spec.blob_sigma), rng.uniform(*stray))
    return Heatmap(g + spec.background)


def synth_dataset(spec: SynthSpec = SynthSpec(), seed: int = 0):
    """Deterministic synthetic ``(images, users)`` for the given seed."""
    queries = [spec.query_for(k) for k in range(spec.n_users)]
    images = []
    for i in range(spec.n_images):
        rng = substream(seed, 1, i)
        pats = []
        for q in dict.fromkeys(queries):
            if rng.random() < spec.query_rate and len(pats) < spec.triplets_per_image:
                pats.append(q)
        while len(pats) < spec.triplets_per_image:
            p = TripletPattern(str(rng.choice(spec.subjects)), str(rng.choice(spec.relations)),
                               str(rng.choice(spec.objects)))
            if p not in queries:
                pats.append(p)
        order = rng.permutation(len(pats))
        pats = [pats[j] for j in order]
        triplets = []
        for p in pats:
            bs = _random_box(rng, spec.width, spec.height)
            bo = _random_box(rng, spec.width, spec.height)
            stray = spec.query_stray if (p in queries and spec.query_stray) else spec.stray_level
            triplets.append(Triplet(p.subject, p.relation, p.object, bs, bo,
                                    _attention(rng, spec, bs, stray), _attention(rng, spec, bo, stray)))
        images.append(ImageRecord(f"img{i:03d}", spec.size_bytes, triplets))

    users = []
    shape = (spec.height, spec.width)
    for k, q in enumerate(queries):
        sal = {}
        for i, img in enumerate(images):
            rng = substream(seed, 2, k, i)
            s = np.full(shape, spec.background)
            own = [t for t in img.triplets if t.pattern == q]
            others = [t for t in img.triplets if t.pattern != q]
            for t in own:
                for b in (t.box_sub, t.box_obj):
                    cx, cy = _centre(b)
                    s += _blob(shape, cx, cy, rng.uniform(*spec.blob_sigma), spec.query_salience)
            n_dec = min(spec.n_decoys, len(others))
            for j in rng.choice(len(others), size=n_dec, replace=False) if n_dec else ():
                t = others[int(j)]
                for b in (t.box_sub, t.box_obj):
                    cx, cy = _centre(b)
                    s += _blob(shape, cx, cy, rng.uniform(*spec.blob_sigma), rng.uniform(*spec.decoy_level))
            sal[img.id] = Heatmap(s)
        users.append(UserProfile(k + 1, q, sal))
    return images, users
