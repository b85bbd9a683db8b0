"""Scenario configuration: a YAML (or JSON) file mirroring :class:`ScenarioConfig`.

Every field has a default, so an empty file describes the three-user
reference scenario.  Example::

    seed: 7
    users:                      # per-user overrides of `link`
      - {m_f: 2, m_s: 2}
      - {m_f: 2, m_s: 4}
      - {m_f: 5, m_s: 2}
    link: {distance: 10, p_i: 2, eta_db: -3, d_t: 20, d_e: 3}
    budget: {p_total: 3000}
    fusion: {alpha: 0.2, convention: text}
    dataset: {synth: {n_images: 59}}     # or {path: data/manifest.json}
    sweeps: {alpha: [0, 0.1, 0.2], p_total: [1000, 2000, 3000]}
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .. import allocation, dataset, fading, linkperf
from ..errors import ConfigError, SemlinkError
from ..rng import DEFAULT_SEED

__all__ = [
    "LinkConfig",
    "DatasetConfig",
    "SweepConfig",
    "OpCurveConfig",
    "CommCostConfig",
    "McConfig",
    "ScenarioConfig",
    "load_config",
    "config_from_dict",
]


@dataclass(frozen=True)
class LinkConfig:
    m_f: float = 2.0
    m_s: float = 2.0
    z_bar_db: float = -3.0
    distance: float = 10.0
    path_loss_exp: float = 2.0
    n_antennas: int = 3
    n_interferers: int = 2
    p_i: float = 2.0
    eta_db: float = -3.0
    noise_power: float = 1.0
    lambda1: float = 1.0
    lambda2: float = 0.5
    d_t: int = 20
    d_e: int = 3
    tdp_convention: str = "binomial"

    def sinr(self, p_tx: float = 1.0) -> fading.SinrParams:
        return fading.SinrParams.from_link(
            fading.FadingParams.from_db(self.m_f, self.m_s, self.z_bar_db),
            fading.LinkGeometry(self.distance, self.path_loss_exp, self.n_antennas, self.noise_power),
            fading.InterferenceParams(self.n_interferers, fading.db_to_linear(self.eta_db), self.p_i),
            p_tx,
        )

    def to_link(self) -> allocation.UserLink:
        return allocation.UserLink(
            self.sinr(),
            linkperf.ModulationParams(self.lambda1, self.lambda2),
            linkperf.TripletCoding(self.d_t, self.d_e),
            self.tdp_convention,
        )


REFERENCE_USERS = (
    LinkConfig(m_f=2.0, m_s=2.0),
    LinkConfig(m_f=2.0, m_s=4.0),
    LinkConfig(m_f=5.0, m_s=2.0),
)


@dataclass(frozen=True)
class DatasetConfig:
    path: str | None = None
    synth: dataset.SynthSpec = dataset.SynthSpec()
    seed: int | None = None


@dataclass(frozen=True)
class SweepConfig:
    alpha: tuple = tuple(round(0.1 * i, 10) for i in range(11))
    p_total: tuple = (1000.0, 1500.0, 2000.0, 2500.0, 3000.0)
    m_f: tuple = (1.0, 2.0, 3.0, 4.0, 5.0)
    m_s: tuple = (2.0, 3.0, 4.0, 5.0, 6.0)
    distance: tuple = (5.0, 10.0, 15.0, 20.0, 25.0)
    p_i: tuple = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    simplex_step: float = 0.02
    per_user_power: float = 1000.0
    baseline_m_f: float = 2.0
    baseline_m_s: float = 2.0


@dataclass(frozen=True)
class OpCurveConfig:
    """Single-antenna outage scenario swept over transmit power (dBW)."""

    distance: float = 1.5
    path_loss_exp: float = 2.0
    m_s: float = 5.0
    z_bar_db: float = -1.0
    noise_power: float = 1.0
    eta: float = 0.4
    p_i: float = 5.0
    n_interferers: int = 3
    n_antennas: int = 1
    gamma_th_db: float = 0.0
    m_f: tuple = (1.5, 2.6, 4.0)
    power_dbw: tuple = tuple(2.5 * i for i in range(17))

    def sinr(self, m_f: float, p_tx: float) -> fading.SinrParams:
        return fading.SinrParams.from_link(
            fading.FadingParams.from_db(m_f, self.m_s, self.z_bar_db),
            fading.LinkGeometry(self.distance, self.path_loss_exp, self.n_antennas, self.noise_power),
            fading.InterferenceParams(self.n_interferers, self.eta, self.p_i),
            p_tx,
        )


@dataclass(frozen=True)
class CommCostConfig:
    n_images: int = 59
    image_mb: float = 1.27
    n_users: int = 3
    downloads: int = 64
    n_triplets: int = 873
    triplet_bytes: int = 12


@dataclass(frozen=True)
class McConfig:
    channel_samples: int = 1_000_000
    replications: int = 10_000
    fading_mode: str = "interleaved"


@dataclass(frozen=True)
class ScenarioConfig:
    users: tuple = REFERENCE_USERS
    dataset: DatasetConfig = DatasetConfig()
    budget: allocation.PowerBudget = allocation.PowerBudget.from_power(3000.0)
    alpha: float = 0.2
    convention: str = "text"
    rcga: allocation.RcgaConfig = allocation.RcgaConfig(seed=DEFAULT_SEED)
    sweeps: SweepConfig = SweepConfig()
    op_curve: OpCurveConfig = OpCurveConfig()
    comm_cost: CommCostConfig = CommCostConfig()
    mc: McConfig = McConfig()
    seed: int = DEFAULT_SEED
    threads: int = 1
    out: str = "results"

    def links(self):
        return [u.to_link() for u in self.users]

    def load_data(self):
        """``(images, users)`` from the manifest or the synthetic generator."""
        if self.dataset.path is not None:
            images, profiles = dataset.load_dataset(self.dataset.path)
        else:
            spec = self.dataset.synth
            if spec.n_users != len(self.users):
                spec = replace(spec, n_users=len(self.users))
            seed = self.seed if self.dataset.seed is None else self.dataset.seed
            images, profiles = dataset.synth_dataset(spec, seed)
        if len(profiles) < len(self.users):
            raise ConfigError(f"dataset has {len(profiles)} user profiles, config has "
                              f"{len(self.users)} users", field="users")
        return images, list(profiles[:len(self.users)])

    def scenario(self, images=None, profiles=None, **overrides) -> allocation.Scenario:
        if images is None:
            images, profiles = self.load_data()
        opts = dict(alpha=self.alpha, convention=self.convention, threads=self.threads)
        opts.update(overrides)
        return allocation.Scenario(self.links(), images, profiles, **opts)

    def with_overrides(self, *, seed=None, mc_samples=None, threads=None, out=None) -> "ScenarioConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed, rcga=replace(cfg.rcga, seed=seed))
        if mc_samples is not None:
            cfg = replace(cfg, mc=replace(cfg.mc, channel_samples=mc_samples, replications=mc_samples))
        if threads is not None:
            cfg = replace(cfg, threads=threads, rcga=replace(cfg.rcga, workers=threads))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        return cfg

    def as_dict(self) -> dict:
        return _plain(self)

    def digest(self) -> str:
        """SHA-256 of the resolved configuration (output location excluded)."""
        d = self.as_dict()
        d.pop("out", None)
        d.pop("threads", None)
        d["rcga"].pop("workers", None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, allocation.PowerBudget):
        return {"w_a": obj.w_a, "t_1": obj.t_1}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    return obj


# ---------------------------------------------------------------------------
# parsing


class _Lines:
    """Maps dotted field paths to source line numbers of a YAML document."""

    def __init__(self, text):
        try:
            self.root = yaml.compose(text)
        except yaml.YAMLError:
            self.root = None

    def line(self, path):
        node = self.root
        for part in path:
            if isinstance(node, yaml.MappingNode):
                hit = [v for k, v in node.value if k.value == str(part)]
                if not hit:
                    return None if node is self.root else node.start_mark.line + 1
                node = hit[0]
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
                node = node.value[part]
            else:
                break
        return node.start_mark.line + 1 if node is not None else None


class _Ctx:
    def __init__(self, source=None, lines=None):
        self.source = source
        self.lines = lines

    def error(self, msg, path):
        line = self.lines.line(path) if self.lines else None
        name = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path).lstrip(".") or None
        return ConfigError(msg, path=self.source, line=line, field=name)


def _number(ctx, val, path, kind=float):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ctx.error(f"expected a number, got {val!r}", path)
    if kind is int:
        if isinstance(val, float) and not val.is_integer():
            raise ctx.error(f"expected an integer, got {val!r}", path)
        return int(val)
    if not math.isfinite(val):
        raise ctx.error(f"expected a finite number, got {val!r}", path)
    return float(val)


def _coerce(ctx, template, val, path):
    """Convert ``val`` to the type of the default ``template``."""
    if isinstance(template, bool):
        if not isinstance(val, bool):
            raise ctx.error(f"expected true/false, got {val!r}", path)
        return val
    if isinstance(template, int):
        return _number(ctx, val, path, int)
    if isinstance(template, float):
        return _number(ctx, val, path)
    if isinstance(template, str) or template is None:
        if val is not None and not isinstance(val, (str, int)):
            raise ctx.error(f"expected a string, got {val!r}", path)
        return val if val is None or isinstance(val, str) else val
    if isinstance(template, tuple):
        if not isinstance(val, list) or not val:
            raise ctx.error("expected a non-empty list", path)
        if template and isinstance(template[0], tuple):
            return tuple(tuple(v) if isinstance(v, list) else v for v in val)
        elem = template[0] if template else 0.0
        if isinstance(elem, (int, float)):
            return tuple(_number(ctx, v, path + [i]) for i, v in enumerate(val))
        return tuple(val)
    return val


def _build(ctx, cls, raw, path, base=None):
    """Instantiate dataclass ``cls`` from mapping ``raw`` over defaults ``base``."""
    base = base if base is not None else cls()
    if raw is None:
        return base
    if not isinstance(raw, dict):
        raise ctx.error("expected a mapping", path)
    names = {f.name for f in fields(cls)}
    kw = {}
    for key, val in raw.items():
        if key not in names:
            raise ctx.error(f"unknown field (allowed: {', '.join(sorted(names))})", path + [key])
        template = getattr(base, key)
        if key == "tdp_convention" or key == "fading_mode" or key == "convention":
            kw[key] = val
        elif key in ("blob_sigma", "stray_level", "decoy_level", "query_stray"):
            if val is None and key == "query_stray":
                kw[key] = None
            elif not (isinstance(val, list) and len(val) == 2):
                raise ctx.error("expected a [low, high] pair", path + [key])
            else:
                kw[key] = tuple(_number(ctx, v, path + [key, i]) for i, v in enumerate(val))
        elif key == "queries":
            if not isinstance(val, list) or not all(isinstance(q, list) and len(q) == 3 for q in val):
                raise ctx.error("expected a list of [subject, relation, object] lists", path + [key])
            kw[key] = tuple(tuple(q) for q in val)
        else:
            kw[key] = _coerce(ctx, template, val, path + [key])
    try:
        return replace(base, **kw)
    except (SemlinkError, ValueError, TypeError) as exc:
        raise ctx.error(str(exc), path) from None


TOP_KEYS = ("seed", "threads", "out", "users", "link", "dataset", "budget", "fusion", "rcga",
            "sweeps", "op_curve", "comm_cost", "mc")


def config_from_dict(raw, source=None, lines=None) -> ScenarioConfig:
    ctx = _Ctx(source, lines)
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ctx.error("top level must be a mapping", [])
    for key in raw:
        if key not in TOP_KEYS:
            raise ctx.error(f"unknown section (allowed: {', '.join(TOP_KEYS)})", [key])
    cfg = ScenarioConfig()
    kw = {}
    if "seed" in raw:
        seed = _number(ctx, raw["seed"], ["seed"], int)
        if not 0 <= seed < 2**64:
            raise ctx.error("seed must fit in an unsigned 64-bit integer", ["seed"])
        kw["seed"] = seed
    if "threads" in raw:
        kw["threads"] = max(1, _number(ctx, raw["threads"], ["threads"], int))
    if "out" in raw:
        kw["out"] = str(raw["out"])

    link_base = _build(ctx, LinkConfig, raw.get("link"), ["link"])
    users_raw = raw.get("users")
    if users_raw is None:
        users = tuple(replace(link_base, m_f=u.m_f, m_s=u.m_s) for u in REFERENCE_USERS)
    else:
        if not isinstance(users_raw, list) or not users_raw:
            raise ctx.error("expected a non-empty list of users", ["users"])
        users = tuple(_build(ctx, LinkConfig, u, ["users", i], link_base) for i, u in enumerate(users_raw))
    for i, u in enumerate(users):
        try:
            u.to_link()
        except (SemlinkError, ValueError) as exc:
            raise ctx.error(str(exc), ["users", i] if users_raw is not None else ["link"]) from None
    kw["users"] = users

    ds = raw.get("dataset") or {}
    if not isinstance(ds, dict):
        raise ctx.error("expected a mapping", ["dataset"])
    for key in ds:
        if key not in ("path", "synth", "seed"):
            raise ctx.error("unknown field (allowed: path, seed, synth)", ["dataset", key])
    path = ds.get("path")
    if path is not None:
        p = Path(path)
        if source is not None and not p.is_absolute():
            p = Path(source).parent / p
        if not p.is_file():
            raise ctx.error(f"dataset manifest {str(p)!r} does not exist", ["dataset", "path"])
        path = str(p)
    synth = _build(ctx, dataset.SynthSpec, ds.get("synth"), ["dataset", "synth"])
    ds_seed = _number(ctx, ds["seed"], ["dataset", "seed"], int) if "seed" in ds else None
    kw["dataset"] = DatasetConfig(path, synth, ds_seed)

    b = raw.get("budget") or {}
    if not isinstance(b, dict) or set(b) - {"p_total", "w_a", "t_1"}:
        raise ctx.error("budget takes p_total or w_a, and optionally t_1", ["budget"])
    t_1 = _number(ctx, b.get("t_1", 1.0), ["budget", "t_1"])
    try:
        if "w_a" in b:
            kw["budget"] = allocation.PowerBudget(_number(ctx, b["w_a"], ["budget", "w_a"]), t_1)
        else:
            kw["budget"] = allocation.PowerBudget.from_power(
                _number(ctx, b.get("p_total", 3000.0), ["budget", "p_total"]), t_1)
    except SemlinkError as exc:
        raise ctx.error(str(exc), ["budget"]) from None

    fu = raw.get("fusion") or {}
    if not isinstance(fu, dict) or set(fu) - {"alpha", "convention"}:
        raise ctx.error("fusion takes alpha and convention", ["fusion"])
    if "alpha" in fu:
        a = _number(ctx, fu["alpha"], ["fusion", "alpha"])
        if not 0 <= a <= 1:
            raise ctx.error("alpha must lie in [0, 1]", ["fusion", "alpha"])
        kw["alpha"] = a
    if "convention" in fu:
        if fu["convention"] not in ("text", "eq17"):
            raise ctx.error("convention must be 'text' or 'eq17'", ["fusion", "convention"])
        kw["convention"] = fu["convention"]

    rc = _build(ctx, allocation.RcgaConfig, raw.get("rcga"), ["rcga"])
    if not (isinstance(raw.get("rcga"), dict) and "seed" in raw["rcga"]):
        # the GA follows the top-level seed unless pinned separately
        rc = replace(rc, seed=kw.get("seed", cfg.seed))
    kw["rcga"] = rc

    sw = _build(ctx, SweepConfig, raw.get("sweeps"), ["sweeps"])
    for name in ("alpha", "p_total", "m_f", "m_s", "distance", "p_i"):
        grid = getattr(sw, name)
        if list(grid) != sorted(grid):
            raise ctx.error("sweep grid must be sorted ascending", ["sweeps", name])
    if any(not 0 <= a <= 1 for a in sw.alpha):
        raise ctx.error("alpha grid must lie in [0, 1]", ["sweeps", "alpha"])
    step = sw.simplex_step
    if not (0 < step <= 1 and math.isclose(round(1 / step) * step, 1.0, rel_tol=1e-9)):
        raise ctx.error("simplex_step must divide 1", ["sweeps", "simplex_step"])
    kw["sweeps"] = sw

    op = _build(ctx, OpCurveConfig, raw.get("op_curve"), ["op_curve"])
    if list(op.power_dbw) != sorted(op.power_dbw):
        raise ctx.error("power grid must be sorted ascending", ["op_curve", "power_dbw"])
    try:
        op.sinr(op.m_f[0], 1.0)
    except (SemlinkError, ValueError) as exc:
        raise ctx.error(str(exc), ["op_curve"]) from None
    kw["op_curve"] = op
    kw["comm_cost"] = _build(ctx, CommCostConfig, raw.get("comm_cost"), ["comm_cost"])
    mc = _build(ctx, McConfig, raw.get("mc"), ["mc"])
    if mc.channel_samples < 1 or mc.replications < 1:
        raise ctx.error("sample counts must be >= 1", ["mc"])
    if mc.fading_mode not in ("interleaved", "block"):
        raise ctx.error("fading_mode must be 'interleaved' or 'block'", ["mc", "fading_mode"])
    kw["mc"] = mc
    return replace(cfg, **kw)


def load_config(path=None) -> ScenarioConfig:
    """Parse a config file; ``None`` gives the defaults."""
    if path is None:
        return ScenarioConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed file: {getattr(exc, 'problem', exc)}", path=path,
                          line=mark.line + 1 if mark else None) from None
    return config_from_dict(raw, source=path, lines=_Lines(text))
