"""Non-stationary cluster-based channel generator.

Scatterer clusters with exponential delays, lognormal per-cluster
shadowing, and wrapped-Gaussian ray angles evolve over time through a
memoryless birth-death process; snapshots combine a Ricean line-of-sight
term with the cluster rays on a uniform delay grid, including per-antenna
array phases and velocity-driven Doppler and delay drift.  Everything is
deterministic under the configured seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from chantool.core import (
    SPEED_OF_LIGHT,
    CirSnapshot,
    FrequencyBand,
    BAND_28,
    Point3,
    RandomStream,
    derive_substream,
)

# Snapshots-per-run ceiling for run_scenario; larger requests raise SizingError.
MAX_SNAPSHOTS = 10_000_000


class SizingError(RuntimeError):
    """A requested scenario would produce an unreasonable amount of output."""


@dataclass(frozen=True)
class GbsmConfig:
    """Scenario parameters for the cluster channel generator.

    Velocities affect ray Doppler phases and delay drift; the configured
    positions are the time-zero reference geometry.
    """

    band: FrequencyBand = BAND_28
    n_tx: int = 1
    n_rx: int = 1
    antenna_spacing_m: float = 0.075
    k_factor_db: float = 6.0
    mean_clusters: float = 5.0
    rays_per_cluster: int = 20
    delay_scale_s: float = 50e-9
    per_cluster_shadow_db: float = 3.0
    birth_rate_hz: float = 2.0
    death_rate_hz: float = 2.0
    snapshot_interval_s: float = 62.5e-6
    tx_velocity: Point3 = field(default_factory=lambda: Point3(0.0, 0.0, 0.0))
    rx_velocity: Point3 = field(default_factory=lambda: Point3(0.0, 0.0, 0.0))
    duration_s: float = 0.0625
    seed: int = 0
    tx_position: Point3 = field(default_factory=lambda: Point3(0.0, 0.0, 1.5))
    rx_position: Point3 = field(default_factory=lambda: Point3(10.0, 0.0, 1.5))
    ray_angle_spread_rad: float = 0.2
    ray_delay_scale_s: float = 5e-9
    delay_resolution_s: float = 1.0 / 1.28e9

    def __post_init__(self) -> None:
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be >= 1")
        if not self.antenna_spacing_m > 0.0:
            raise ValueError("antenna_spacing_m must be positive")
        if not self.mean_clusters > 0.0:
            raise ValueError("mean_clusters must be positive")
        if self.rays_per_cluster < 1:
            raise ValueError("rays_per_cluster must be >= 1")
        if not self.delay_scale_s > 0.0 or not self.ray_delay_scale_s > 0.0:
            raise ValueError("delay scales must be positive")
        if self.per_cluster_shadow_db < 0.0:
            raise ValueError("per_cluster_shadow_db must be >= 0")
        if self.birth_rate_hz < 0.0 or self.death_rate_hz < 0.0:
            raise ValueError("birth and death rates must be >= 0")
        if not self.snapshot_interval_s > 0.0:
            raise ValueError("snapshot_interval_s must be positive")
        if self.duration_s < 0.0:
            raise ValueError("duration_s must be >= 0")
        if not self.ray_angle_spread_rad >= 0.0:
            raise ValueError("ray_angle_spread_rad must be >= 0")
        if not self.delay_resolution_s > 0.0:
            raise ValueError("delay_resolution_s must be positive")
        if self.tx_position == self.rx_position:
            raise ValueError("tx and rx positions must differ")


@dataclass(frozen=True)
class Ray:
    aoa_rad: float
    aod_rad: float
    phase_rad: float
    sub_delay_s: float


@dataclass(frozen=True)
class Cluster:
    id: int
    delay_s: float
    power_linear: float
    rays: tuple[Ray, ...]
    # Unnormalized power weight fixed at birth; power_linear is this weight
    # divided by the current total over all live clusters.
    weight: float


@dataclass(frozen=True)
class ClusterState:
    clusters: tuple[Cluster, ...]
    t_s: float
    next_id: int

    def __post_init__(self) -> None:
        total = sum(c.power_linear for c in self.clusters)
        if self.clusters and abs(total - 1.0) > 1e-9:
            raise ValueError(f"cluster powers must sum to 1, got {total}")
        ids = [c.id for c in self.clusters]
        if len(set(ids)) != len(ids):
            raise ValueError("cluster ids must be unique")
        if any(c.delay_s < 0.0 for c in self.clusters):
            raise ValueError("cluster delays must be >= 0")


def cluster_powers_from_delays(
    delays_s: np.ndarray, shadows_db: np.ndarray, delay_scale_s: float
) -> np.ndarray:
    """Normalized cluster powers: shadowed exponential delay decay."""
    delays_s = np.asarray(delays_s, dtype=float)
    shadows_db = np.asarray(shadows_db, dtype=float)
    weights = np.exp(-delays_s / delay_scale_s) * 10.0 ** (-shadows_db / 10.0)
    return weights / weights.sum()


def _make_clusters(
    cfg: GbsmConfig, stream: RandomStream, count: int, first_id: int
) -> list[Cluster]:
    """Draw `count` fresh clusters; power_linear is left unnormalized (equal
    to the raw weight) for the caller to renormalize."""
    rng = stream.rng
    out = []
    for i in range(count):
        delay = float(rng.exponential(cfg.delay_scale_s))
        shadow = float(rng.normal(0.0, cfg.per_cluster_shadow_db))
        weight = math.exp(-delay / cfg.delay_scale_s) * 10.0 ** (-shadow / 10.0)
        mean_aoa = float(rng.uniform(0.0, 2.0 * math.pi))
        mean_aod = float(rng.uniform(0.0, 2.0 * math.pi))
        m = cfg.rays_per_cluster
        aoas = np.mod(mean_aoa + rng.normal(0.0, cfg.ray_angle_spread_rad, m), 2.0 * math.pi)
        aods = np.mod(mean_aod + rng.normal(0.0, cfg.ray_angle_spread_rad, m), 2.0 * math.pi)
        phases = rng.uniform(0.0, 2.0 * math.pi, m)
        subs = rng.exponential(cfg.ray_delay_scale_s, m)
        rays = tuple(
            Ray(float(a), float(d), float(p), float(s))
            for a, d, p, s in zip(aoas, aods, phases, subs)
        )
        out.append(Cluster(first_id + i, delay, weight, rays, weight))
    return out


def _renormalize(clusters: Sequence[Cluster]) -> tuple[Cluster, ...]:
    total = sum(c.weight for c in clusters)
    return tuple(replace(c, power_linear=c.weight / total) for c in clusters)


def init_clusters(cfg: GbsmConfig, stream: RandomStream) -> ClusterState:
    """Initial cluster population: Poisson count (at least one), exponential
    delays, shadowed-exponential powers normalized to unit sum."""
    count = max(1, int(stream.rng.poisson(cfg.mean_clusters)))
    clusters = _make_clusters(cfg, stream, count, first_id=0)
    return ClusterState(_renormalize(clusters), t_s=0.0, next_id=count)


def _radial_velocity(cfg: GbsmConfig) -> float:
    los = cfg.rx_position - cfg.tx_position
    d = los.norm()
    u = los.scale(1.0 / d)
    rel = cfg.rx_velocity - cfg.tx_velocity
    return rel.dot(u)


def evolve_clusters(
    state: ClusterState, cfg: GbsmConfig, dt_s: float, stream: RandomStream
) -> ClusterState:
    """One birth-death step: independent survival with exp(-death_rate*dt),
    Poisson(birth_rate*dt) fresh clusters, radial delay drift on survivors,
    and renormalized powers.  A fresh cluster is forced in if all die."""
    if not dt_s > 0.0:
        raise ValueError("dt_s must be positive")
    rng = stream.rng
    p_survive = math.exp(-cfg.death_rate_hz * dt_s)
    drift = _radial_velocity(cfg) / SPEED_OF_LIGHT * dt_s
    survivors = []
    for cluster in state.clusters:
        if rng.uniform() < p_survive:
            survivors.append(
                replace(cluster, delay_s=max(cluster.delay_s + drift, 0.0))
            )
    n_births = int(rng.poisson(cfg.birth_rate_hz * dt_s))
    if not survivors and n_births == 0:
        n_births = 1
    born = _make_clusters(cfg, stream, n_births, first_id=state.next_id)
    return ClusterState(
        _renormalize(survivors + born),
        t_s=state.t_s + dt_s,
        next_id=state.next_id + n_births,
    )


def _k_linear(cfg: GbsmConfig) -> float:
    return 10.0 ** (cfg.k_factor_db / 10.0)


def _los_delay(cfg: GbsmConfig, t_s: float) -> float:
    base = (cfg.rx_position - cfg.tx_position).norm() / SPEED_OF_LIGHT
    return max(base + _radial_velocity(cfg) / SPEED_OF_LIGHT * t_s, 0.0)


def synthesize_snapshot(
    state: ClusterState,
    cfg: GbsmConfig,
    t_s: float,
    tx_idx: int,
    rx_idx: int,
    n_bins: int | None = None,
) -> CirSnapshot:
    """Delay-gridded CIR for one antenna pair at one instant.

    The line-of-sight term carries sqrt(K/(K+1)) and the geometric phase of
    its (drifting) delay; each ray carries sqrt(power/(M(K+1))), its stored
    phase, a uniform-linear-array phase for the element indices, and a
    Doppler phase from the configured velocities.  Delays land on the
    nearest grid bin; a grid shorter than the longest delay is extended to
    that delay plus ten bins.
    """
    if not 0 <= tx_idx < cfg.n_tx:
        raise ValueError(f"tx_idx {tx_idx} outside [0, {cfg.n_tx})")
    if not 0 <= rx_idx < cfg.n_rx:
        raise ValueError(f"rx_idx {rx_idx} outside [0, {cfg.n_rx})")

    lam = cfg.band.wavelength_m
    k_lin = _k_linear(cfg)
    res = cfg.delay_resolution_s
    fc = cfg.band.carrier_hz

    delays = [_los_delay(cfg, t_s)]
    amps = [
        math.sqrt(k_lin / (k_lin + 1.0))
        * np.exp(-2j * math.pi * fc * delays[0])
    ]
    m = cfg.rays_per_cluster
    vt, vr = cfg.tx_velocity, cfg.rx_velocity
    for cluster in state.clusters:
        ray_amp = math.sqrt(cluster.power_linear / (m * (k_lin + 1.0)))
        for ray in cluster.rays:
            delays.append(cluster.delay_s + ray.sub_delay_s)
            array_phase = (
                2.0 * math.pi / lam * cfg.antenna_spacing_m
                * (tx_idx * math.sin(ray.aod_rad) + rx_idx * math.sin(ray.aoa_rad))
            )
            doppler_hz = (
                vt.x * math.cos(ray.aod_rad) + vt.y * math.sin(ray.aod_rad)
                + vr.x * math.cos(ray.aoa_rad) + vr.y * math.sin(ray.aoa_rad)
            ) / lam
            phase = ray.phase_rad + array_phase + 2.0 * math.pi * doppler_hz * t_s
            amps.append(ray_amp * np.exp(1j * phase))

    bins = np.rint(np.asarray(delays) / res).astype(np.int64)
    needed = int(bins.max()) + 11
    if n_bins is None or n_bins < needed:
        n_bins = needed
    h = np.zeros(n_bins, dtype=np.complex128)
    np.add.at(h, bins, np.asarray(amps))
    return CirSnapshot(t_s=t_s, sample_period_s=res, samples=h)


@dataclass(frozen=True)
class CirSequence:
    """A run's worth of CIR snapshots on a common delay grid.

    cir is indexed (time, tx, rx, delay); snapshot() wraps one entry as a
    CirSnapshot without copying.  config is None for sequences loaded from
    an archive; mean_cluster_count is NaN unless the sequence came out of
    run_scenario.
    """

    config: GbsmConfig | None
    t0_s: float
    dt_s: float
    sample_period_s: float
    cir: np.ndarray
    mean_cluster_count: float = math.nan

    def __post_init__(self) -> None:
        if not self.dt_s > 0.0:
            raise ValueError("dt_s must be positive")
        if self.cir.ndim != 4:
            raise ValueError("cir must be (time, tx, rx, delay)")

    @property
    def n_time(self) -> int:
        return self.cir.shape[0]

    @property
    def times_s(self) -> np.ndarray:
        return self.t0_s + self.dt_s * np.arange(self.n_time)

    def snapshot(self, t_idx: int, tx_idx: int = 0, rx_idx: int = 0) -> CirSnapshot:
        return CirSnapshot(
            t_s=self.t0_s + self.dt_s * t_idx,
            sample_period_s=self.sample_period_s,
            samples=self.cir[t_idx, tx_idx, rx_idx],
        )


def _evolution(cfg: GbsmConfig, n_steps: int) -> list[ClusterState]:
    states = [init_clusters(cfg, derive_substream(cfg.seed, "gbsm-init", 0))]
    for step in range(1, n_steps):
        states.append(
            evolve_clusters(
                states[-1],
                cfg,
                cfg.snapshot_interval_s,
                derive_substream(cfg.seed, "gbsm-evolve", step),
            )
        )
    return states


def run_scenario(cfg: GbsmConfig, threads: int | None = None) -> CirSequence:
    """Full deterministic run: cluster evolution, then snapshot synthesis
    for every (time, tx, rx) on a delay grid sized once for the whole run.

    The thread count only partitions the synthesis work; outputs are
    byte-identical for any value.
    """
    n_steps = max(1, int(round(cfg.duration_s / cfg.snapshot_interval_s)))
    total = n_steps * cfg.n_tx * cfg.n_rx
    if total > MAX_SNAPSHOTS:
        raise SizingError(
            f"scenario would produce {total} snapshots (limit {MAX_SNAPSHOTS})"
        )
    states = _evolution(cfg, n_steps)

    max_delay = 0.0
    for i, state in enumerate(states):
        t = i * cfg.snapshot_interval_s
        max_delay = max(max_delay, _los_delay(cfg, t))
        for cluster in state.clusters:
            max_delay = max(
                max_delay,
                cluster.delay_s + max(r.sub_delay_s for r in cluster.rays),
            )
    n_bins = int(round(max_delay / cfg.delay_resolution_s)) + 11

    cir = np.zeros((n_steps, cfg.n_tx, cfg.n_rx, n_bins), dtype=np.complex128)

    def fill(t_range) -> None:
        for t_idx in t_range:
            t = t_idx * cfg.snapshot_interval_s
            for q in range(cfg.n_tx):
                for p in range(cfg.n_rx):
                    snap = synthesize_snapshot(states[t_idx], cfg, t, q, p, n_bins)
                    cir[t_idx, q, p] = snap.samples

    if threads is None or threads <= 1 or n_steps == 1:
        fill(range(n_steps))
    else:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(np.arange(n_steps), min(threads, n_steps))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, chunks))

    return CirSequence(
        config=cfg,
        t0_s=0.0,
        dt_s=cfg.snapshot_interval_s,
        sample_period_s=cfg.delay_resolution_s,
        cir=cir,
        mean_cluster_count=float(np.mean([len(s.clusters) for s in states])),
    )
