"""Experiment configuration and the simulate -> decoy -> SDP -> key-rate pipeline."""

from __future__ import annotations

import copy
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace, asdict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from . import decoy
from .keyrate import RatePoint, secret_key_rate
from .protocol import ESTIMATORS, ChannelModel, TallyCounts, run_session
from .secbound import CapabilityError, Policy, SecurityBound, Status, ef_bound
from .source import DecoyIntensities, TransmitterConfig

TRANSMITTER_KEYS = ("dim", "p_time", "bin_width")
INTENSITY_KEYS = tuple(f.name for f in fields(DecoyIntensities))
CHANNEL_KEYS = tuple(f.name for f in fields(ChannelModel))


class ConfigError(ValueError):
    pass


@dataclass
class G2ScanConfig:
    mu: float = 0.016
    frames: int = 1_000_000
    overlaps: list[float] = field(default_factory=lambda: [1.0, 0.0])
    delays: list[float] | None = None
    estimator: str = "expected"


@dataclass
class ExperimentConfig:
    transmitter: TransmitterConfig
    channel: ChannelModel
    frames: int = 10_000_000
    seed: int = 0
    estimator: str = "sampled"
    policy: str = "one"
    sdp_time_error: str = "symmetric"
    entropy_variant: str = "printed"
    sweep: dict[str, list] = field(default_factory=dict)
    output_dir: str = "out"
    formats: list[str] = field(default_factory=lambda: ["csv", "json"])
    workers: int = 1
    g2scan: G2ScanConfig = field(default_factory=G2ScanConfig)

    def __post_init__(self):
        if self.frames < 1:
            raise ConfigError(f"frames must be >= 1, got {self.frames}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}")
        if self.sdp_time_error not in ("symmetric", "measured"):
            raise ConfigError("sdp_time_error must be 'symmetric' or 'measured'")
        Policy(self.policy)
        for name in self.sweep:
            if name not in TRANSMITTER_KEYS + INTENSITY_KEYS + CHANNEL_KEYS:
                raise ConfigError(f"sweep parameter {name!r} is not a config field")
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")

    # -------------------------------------------------------- (de)serialization

    def to_dict(self) -> dict:
        tx = self.transmitter
        ch = {k: v for k, v in asdict(self.channel).items() if v is not None}
        g2 = {k: v for k, v in asdict(self.g2scan).items() if v is not None}
        return {
            "frames": self.frames,
            "seed": self.seed,
            "estimator": self.estimator,
            "workers": self.workers,
            "transmitter": {
                "dim": tx.dim,
                "p_time": tx.p_time,
                "bin_width": tx.bin_width,
                "intensities": asdict(tx.intensities),
            },
            "channel": ch,
            "analysis": {
                "policy": self.policy,
                "sdp_time_error": self.sdp_time_error,
                "entropy_variant": self.entropy_variant,
            },
            "sweep": dict(self.sweep),
            "output": {"dir": self.output_dir, "formats": list(self.formats)},
            "g2scan": g2,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = copy.deepcopy(data)
        known = {"frames", "seed", "estimator", "workers", "transmitter", "channel", "analysis", "sweep", "output", "g2scan"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config sections/keys: {sorted(unknown)}")
        try:
            txd = data["transmitter"]
            intens = DecoyIntensities(**txd.pop("intensities"))
            tx = TransmitterConfig(intensities=intens, **txd)
            ch = ChannelModel(**data.get("channel", {}))
            an = data.get("analysis", {})
            out = data.get("output", {})
            return cls(
                transmitter=tx,
                channel=ch,
                frames=int(data.get("frames", 10_000_000)),
                seed=int(data.get("seed", 0)),
                estimator=data.get("estimator", "sampled"),
                workers=int(data.get("workers", 1)),
                policy=an.get("policy", "one"),
                sdp_time_error=an.get("sdp_time_error", "symmetric"),
                entropy_variant=an.get("entropy_variant", "printed"),
                sweep=dict(data.get("sweep", {})),
                output_dir=out.get("dir", "out"),
                formats=list(out.get("formats", ["csv", "json"])),
                g2scan=G2ScanConfig(**data.get("g2scan", {})),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(tomllib.loads(text))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML: {exc}") from exc

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            text = fh.read().decode()
        return cls.from_toml(text)

    # -------------------------------------------------------- variations

    def with_params(self, **params) -> "ExperimentConfig":
        tx, ch = self.transmitter, self.channel
        it = tx.intensities
        tx_kw = {k: v for k, v in params.items() if k in TRANSMITTER_KEYS}
        in_kw = {k: v for k, v in params.items() if k in INTENSITY_KEYS}
        ch_kw = {k: v for k, v in params.items() if k in CHANNEL_KEYS}
        rest = set(params) - set(tx_kw) - set(in_kw) - set(ch_kw)
        if rest:
            raise ConfigError(f"unknown parameters {sorted(rest)}")
        if in_kw:
            it = replace(it, **in_kw)
        tx = replace(tx, intensities=it, **tx_kw)
        ch = replace(ch, **ch_kw)
        return replace(self, transmitter=tx, channel=ch, sweep={})

    def grid(self) -> list[dict]:
        if not self.sweep:
            return [{}]
        names = list(self.sweep)
        return [dict(zip(names, vals)) for vals in itertools.product(*(self.sweep[n] for n in names))]


@dataclass
class PointResult:
    params: dict
    tallies: TallyCounts
    observables: decoy.DecoyObservables
    bounds: decoy.YieldBounds
    security: SecurityBound | None
    e_t: float
    r_t: float
    rates: list[RatePoint]


def analyze(cfg: ExperimentConfig, tallies: TallyCounts, params: dict | None = None) -> PointResult:
    tx, ch = cfg.transmitter, cfg.channel
    obs = decoy.DecoyObservables.from_tallies(tallies, tx.intensities)
    bounds = decoy.estimate(obs, p_time=tx.p_time)
    time_cells = [tallies.time(la) for la in ("mu1", "mu2", "mu3")]
    clicks = sum(c.clicked for c in time_cells)
    e_t = float(sum(c.errors for c in time_cells) / clicks) if clicks > 0 else 0.0
    r_t = float(clicks / tallies.frames)
    common = dict(
        dim=tx.dim,
        r_t1=bounds.r_t1,
        r_t=r_t,
        e_t=e_t,
        e_f=bounds.ef,
        rep_rate=tx.rep_rate,
        loss_db=ch.loss_db,
        p_time=tx.p_time,
        variant=cfg.entropy_variant,
    )
    rates = [secret_key_rate(ef_upper=bounds.ef, curve="theory", **common)]
    security = None
    try:
        sdp_et = None if cfg.sdp_time_error == "symmetric" else e_t
        security = ef_bound(tx.dim, sdp_et, bounds.ef, cfg.policy)
    except CapabilityError:
        pass
    if security is not None and security.status is Status.OPTIMAL:
        rates.append(secret_key_rate(ef_upper=security.ef_upper, curve="sdp", **common))
    return PointResult(params or {}, tallies, obs, bounds, security, e_t, r_t, rates)


def run_point(cfg: ExperimentConfig, params: dict | None = None) -> PointResult:
    point_cfg = cfg.with_params(**(params or {}))
    tallies = run_session(
        point_cfg.transmitter, point_cfg.channel, point_cfg.frames, seed=point_cfg.seed, estimator=point_cfg.estimator
    )
    return analyze(point_cfg, tallies, params)


def _run_point_args(args):
    return run_point(*args)


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[PointResult]:
    cells = cfg.grid()
    workers = cfg.workers if workers is None else workers
    workers = max(1, min(workers, len(cells), os.cpu_count() or 1))
    jobs = [(cfg, p) for p in cells]
    if workers == 1:
        return [run_point(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_point_args, jobs))
