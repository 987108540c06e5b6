"""Strict INI-style configuration.

Sections [blockage], [pathloss], [gbsm], [sounder], [analysis]; every
tunable default is overridable here.  Unknown sections, unknown keys,
duplicate keys, and malformed values are hard errors carrying the file
line number, so typos never pass silently.  All dimensioned keys carry a
unit suffix (_m, _ghz, _db, _s, ...).
"""

from __future__ import annotations

from dataclasses import dataclass

from chantool.blockage import (
    DEFAULT_ANTENNA_HEIGHT_M,
    DEFAULT_BLOCKER_CENTER_Z_M,
    DEFAULT_CYLINDER_HEIGHT_M,
    DEFAULT_CYLINDER_RADIUS_M,
    DEFAULT_SCREEN_HEIGHT_M,
    DEFAULT_SCREEN_WIDTH_M,
)
from chantool.core import FrequencyBand, Point3
from chantool.gbsm import GbsmConfig
from chantool.sounder import LinkBudget, MpcExtractionPolicy, WaveformSpec


class ConfigError(ValueError):
    """Configuration file problem, formatted as path:line: message."""

    def __init__(self, path: str, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _choice(*options: str):
    def parse(raw: str) -> str:
        if raw not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {raw!r}")
        return raw

    return parse


def _float(raw: str) -> float:
    return float(raw)


def _int(raw: str) -> int:
    return int(raw, 10)


SCHEMA: dict[str, dict[str, object]] = {
    "blockage": {
        "scenario": _choice("crossing", "along"),
        "carrier_ghz": _float,
        "link_length_m": _float,
        "antenna_height_m": _float,
        "screen_width_m": _float,
        "screen_height_m": _float,
        "cylinder_radius_m": _float,
        "cylinder_height_m": _float,
        "blocker_center_z_m": _float,
        "along_position_m": _float,
        "lateral_offset_m": _float,
    },
    "pathloss": {
        "model": _choice("ci", "fi", "abg"),
        "fix_gamma": _float,
    },
    "gbsm": {
        "carrier_ghz": _float,
        "bandwidth_ghz": _float,
        "n_tx": _int,
        "n_rx": _int,
        "antenna_spacing_m": _float,
        "k_factor_db": _float,
        "mean_clusters": _float,
        "rays_per_cluster": _int,
        "delay_scale_s": _float,
        "per_cluster_shadow_db": _float,
        "birth_rate_hz": _float,
        "death_rate_hz": _float,
        "snapshot_interval_s": _float,
        "duration_s": _float,
        "seed": _int,
        "tx_velocity_x_mps": _float,
        "tx_velocity_y_mps": _float,
        "tx_velocity_z_mps": _float,
        "rx_velocity_x_mps": _float,
        "rx_velocity_y_mps": _float,
        "rx_velocity_z_mps": _float,
        "tx_position_x_m": _float,
        "tx_position_y_m": _float,
        "tx_position_z_m": _float,
        "rx_position_x_m": _float,
        "rx_position_y_m": _float,
        "rx_position_z_m": _float,
        "ray_angle_spread_rad": _float,
        "ray_delay_scale_s": _float,
        "delay_resolution_s": _float,
    },
    "sounder": {
        "pn_order": _int,
        "pad_head": _int,
        "pad_tail": _int,
        "interp_factor": _int,
        "rrc_rolloff": _float,
        "sample_rate_ghz": _float,
        "band_fraction": _float,
        "gt_dbi": _float,
        "gr_dbi": _float,
        "p_pa_dbm": _float,
        "p_cal_dbm": _float,
        "g_lna_db": _float,
        "l_cable_db": _float,
        "max_paths": _int,
        "rel_threshold_db": _float,
        "noise_margin_db": _float,
        "noise_tail_fraction": _float,
    },
    "analysis": {
        "threshold": _float,
    },
}


@dataclass(frozen=True)
class Config:
    """Validated configuration: section name -> key -> typed value."""

    path: str
    sections: dict[str, dict[str, object]]

    def section(self, name: str) -> dict[str, object] | None:
        return self.sections.get(name)


def parse_config(text: str, path: str = "<config>") -> Config:
    sections: dict[str, dict[str, object]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in SCHEMA:
                raise ConfigError(
                    path, lineno,
                    f"unknown section [{name}]; expected one of "
                    f"{', '.join(sorted(SCHEMA))}",
                )
            if name in sections:
                raise ConfigError(path, lineno, f"duplicate section [{name}]")
            sections[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ConfigError(path, lineno, f"expected key = value, got {line!r}")
        if current is None:
            raise ConfigError(path, lineno, "key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        section_schema = SCHEMA[current]
        if key not in section_schema:
            raise ConfigError(path, lineno, f"unknown key {key!r} in [{current}]")
        if key in sections[current]:
            raise ConfigError(path, lineno, f"duplicate key {key!r} in [{current}]")
        try:
            sections[current][key] = section_schema[key](value)
        except ValueError as err:
            raise ConfigError(path, lineno, f"bad value for {key!r}: {err}") from None
    return Config(path=path, sections=sections)


def load_config(path: str) -> Config:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read(), path)


# ---------------------------------------------------------------------------
# Builders: turn validated sections into module-level parameter objects.


def blockage_settings(section: dict[str, object]) -> dict[str, object]:
    out = {
        "scenario": "crossing",
        "carrier_ghz": 28.0,
        "link_length_m": 10.0,
        "antenna_height_m": DEFAULT_ANTENNA_HEIGHT_M,
        "screen_width_m": DEFAULT_SCREEN_WIDTH_M,
        "screen_height_m": DEFAULT_SCREEN_HEIGHT_M,
        "cylinder_radius_m": DEFAULT_CYLINDER_RADIUS_M,
        "cylinder_height_m": DEFAULT_CYLINDER_HEIGHT_M,
        "blocker_center_z_m": DEFAULT_BLOCKER_CENTER_Z_M,
        "along_position_m": None,
        "lateral_offset_m": 0.0,
    }
    out.update(section)
    if out["along_position_m"] is None:
        out["along_position_m"] = out["link_length_m"] / 2.0
    return out


def gbsm_config(section: dict[str, object], seed: int | None = None) -> GbsmConfig:
    base = GbsmConfig()
    carrier = section.get("carrier_ghz", base.band.carrier_hz / 1e9)
    bandwidth = section.get("bandwidth_ghz", base.band.bandwidth_hz / 1e9)

    def vec(prefix: str, unit: str, default: Point3) -> Point3:
        keys = [f"{prefix}_{axis}_{unit}" for axis in "xyz"]
        if not any(k in section for k in keys):
            return default
        return Point3(
            float(section.get(keys[0], default.x)),
            float(section.get(keys[1], default.y)),
            float(section.get(keys[2], default.z)),
        )

    return GbsmConfig(
        band=FrequencyBand.preset(float(carrier), float(bandwidth)),
        n_tx=section.get("n_tx", base.n_tx),
        n_rx=section.get("n_rx", base.n_rx),
        antenna_spacing_m=section.get("antenna_spacing_m", base.antenna_spacing_m),
        k_factor_db=section.get("k_factor_db", base.k_factor_db),
        mean_clusters=section.get("mean_clusters", base.mean_clusters),
        rays_per_cluster=section.get("rays_per_cluster", base.rays_per_cluster),
        delay_scale_s=section.get("delay_scale_s", base.delay_scale_s),
        per_cluster_shadow_db=section.get(
            "per_cluster_shadow_db", base.per_cluster_shadow_db
        ),
        birth_rate_hz=section.get("birth_rate_hz", base.birth_rate_hz),
        death_rate_hz=section.get("death_rate_hz", base.death_rate_hz),
        snapshot_interval_s=section.get(
            "snapshot_interval_s", base.snapshot_interval_s
        ),
        tx_velocity=vec("tx_velocity", "mps", base.tx_velocity),
        rx_velocity=vec("rx_velocity", "mps", base.rx_velocity),
        duration_s=section.get("duration_s", base.duration_s),
        seed=seed if seed is not None else section.get("seed", base.seed),
        tx_position=vec("tx_position", "m", base.tx_position),
        rx_position=vec("rx_position", "m", base.rx_position),
        ray_angle_spread_rad=section.get(
            "ray_angle_spread_rad", base.ray_angle_spread_rad
        ),
        ray_delay_scale_s=section.get("ray_delay_scale_s", base.ray_delay_scale_s),
        delay_resolution_s=section.get("delay_resolution_s", base.delay_resolution_s),
    )


def sounder_settings(
    section: dict[str, object],
) -> tuple[WaveformSpec, LinkBudget, MpcExtractionPolicy, float]:
    spec = WaveformSpec(
        pn_order=section.get("pn_order", 12),
        pad_head=section.get("pad_head", 104),
        pad_tail=section.get("pad_tail", 800),
        interp_factor=section.get("interp_factor", 4),
        rrc_rolloff=section.get("rrc_rolloff", 0.5),
        sample_rate_hz=section.get("sample_rate_ghz", 1.28) * 1e9,
    )
    budget = LinkBudget(
        gt_dbi=section.get("gt_dbi", 20.0),
        gr_dbi=section.get("gr_dbi", 20.0),
        p_pa_dbm=section.get("p_pa_dbm", 24.0),
        p_cal_dbm=section.get("p_cal_dbm", 5.0),
        g_lna_db=section.get("g_lna_db", 30.0),
        l_cable_db=section.get("l_cable_db", 4.0),
    )
    policy = MpcExtractionPolicy(
        max_paths=section.get("max_paths", 30),
        rel_threshold_db=section.get("rel_threshold_db", 25.0),
        noise_margin_db=section.get("noise_margin_db", 6.0),
        noise_tail_fraction=section.get("noise_tail_fraction", 0.1),
    )
    band_fraction = section.get("band_fraction", 0.6)
    return spec, budget, policy, float(band_fraction)
