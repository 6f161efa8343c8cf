"""Plain-text experiment configuration.

Config files are INI-style: flat key = value lines grouped under section
headers, with # or ; comments.  Every key has a default, unknown keys are
rejected with a spelling suggestion, and a parsed config serializes back
to an equivalent file (round-trip stable).
"""

from __future__ import annotations

import configparser
import difflib
import io
import math
from dataclasses import dataclass, replace

from .channel import SPEED_OF_LIGHT, ArrayGeometry, ClusterScenario, SubcarrierGrid
from .evaluate import DENOISE_MODES, PREDICTORS, ExperimentConfig


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


DEFAULT_CARRIER_HZ = 3.5e9

# Antenna-count sweep values map to fixed UPA layouts (n_v rows, n_h cols).
ANTENNA_LAYOUTS = {
    4: (1, 4), 8: (2, 4), 16: (2, 8), 32: (4, 8), 64: (4, 16),
    128: (8, 16), 256: (8, 32), 512: (16, 32), 1024: (16, 64), 2048: (32, 64),
}

SWEEP_AXES = ("snr_db", "speed", "n_antennas", "history_len", "predictor")
PREDICTOR_LABELS = PREDICTORS + ("stationary",)

_SCHEMA = {
    "experiment": (
        "n_ues", "n_rx_antennas", "ue_speeds_kmh", "delta_t_ms", "csi_delay_ms",
        "history_len", "predictor", "pad_order", "sample_snr_db", "denoise",
        "gamma", "gamma_tk", "noise_tail_fraction", "covariance_window", "snr_db",
        "drops", "seed", "doppler_two_pi",
    ),
    "geometry": ("n_v", "n_h", "d_v_wavelengths", "d_h_wavelengths", "carrier_hz"),
    "grid": ("n_f", "delta_f_hz", "f1_hz"),
    "scenario": (
        "n_clusters", "rays_per_cluster", "zod_range_deg", "aod_range_deg",
        "zoa_range_deg", "aoa_range_deg", "ray_angle_spread_deg", "delay_spread_ns",
        "cluster_decay_db",
    ),
    "sweep": ("axis", "values", "predictors"),
}


def _suggest(name: str, candidates) -> str:
    close = difflib.get_close_matches(name, candidates, n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def _reject_unknown(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]{_suggest(section, _SCHEMA)}")
        known = _SCHEMA[section]
        for key in parser[section]:
            if key not in known:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]{_suggest(key, known)}")


class _Section:
    def __init__(self, parser, name):
        self._sec = parser[name] if parser.has_section(name) else {}
        self._name = name

    def _raw(self, key):
        return self._sec.get(key) if key in self._sec else None

    def value(self, key, default, conv):
        raw = self._raw(key)
        if raw is None:
            return default
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r} in [{self._name}]: {exc}") from exc


def _to_int(raw: str) -> int:
    return int(raw.strip())


def _to_float(raw: str) -> float:
    return float(raw.strip())


def _to_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _to_float_list(raw: str) -> tuple:
    vals = tuple(float(v) for v in raw.split(",") if v.strip())
    if not vals:
        raise ValueError("expected a comma-separated list of numbers")
    return vals


def _to_str_list(raw: str) -> tuple:
    vals = tuple(v.strip() for v in raw.split(",") if v.strip())
    if not vals:
        raise ValueError("expected a comma-separated list")
    return vals


def _to_snr(raw: str) -> float:
    if raw.strip().lower() == "ideal":
        return math.inf
    return float(raw)


def _to_deg_range(raw: str) -> tuple:
    vals = _to_float_list(raw)
    if len(vals) != 2 or vals[0] > vals[1]:
        raise ValueError("expected 'low,high' in degrees with low <= high")
    return (math.radians(vals[0]), math.radians(vals[1]))


@dataclass(frozen=True)
class SweepSpec:
    """A one-axis sweep over a base experiment config.

    Each axis value is evaluated for every predictor label; the label
    'stationary' runs the no-prediction baseline with all speeds forced
    to zero.
    """

    axis: str
    values: tuple
    predictors: tuple
    base: ExperimentConfig

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}"
                              f"{_suggest(self.axis, SWEEP_AXES)}")
        if not self.values:
            raise ConfigError("sweep needs at least one axis value")
        for p in self.predictors:
            if p not in PREDICTOR_LABELS:
                raise ConfigError(f"unknown predictor label {p!r}"
                                  f"{_suggest(p, PREDICTOR_LABELS)}")
        if self.axis == "n_antennas":
            for v in self.values:
                n = int(v)
                if n not in ANTENNA_LAYOUTS:
                    raise ConfigError(
                        f"no UPA layout declared for n_antennas = {n}; "
                        f"known sizes: {sorted(ANTENNA_LAYOUTS)}")


def apply_axis(base: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    """Base config with one sweep-axis value substituted in."""
    if axis == "snr_db":
        return replace(base, snr_db=float(value))
    if axis == "speed":
        return replace(base, ue_speeds_kmh=(float(value),))
    if axis == "history_len":
        return replace(base, history_len=int(value))
    if axis == "n_antennas":
        n_v, n_h = ANTENNA_LAYOUTS[int(value)]
        return replace(base, geometry=replace(base.geometry, n_v=n_v, n_h=n_h))
    if axis == "predictor":
        return apply_predictor_label(base, str(value))
    raise ConfigError(f"unknown sweep axis {axis!r}")


def apply_predictor_label(base: ExperimentConfig, label: str) -> ExperimentConfig:
    """Config for a curve label ('stationary' = no prediction at 0 km/h)."""
    if label == "stationary":
        return replace(base, predictor="none", ue_speeds_kmh=(0.0,))
    if label not in PREDICTORS:
        raise ConfigError(f"unknown predictor label {label!r}"
                          f"{_suggest(label, PREDICTOR_LABELS)}")
    return replace(base, predictor=label)


def _build_experiment(parser: configparser.ConfigParser) -> ExperimentConfig:
    geo = _Section(parser, "geometry")
    carrier = geo.value("carrier_hz", DEFAULT_CARRIER_HZ, _to_float)
    lam = SPEED_OF_LIGHT / carrier
    geometry = ArrayGeometry(
        n_v=geo.value("n_v", 2, _to_int),
        n_h=geo.value("n_h", 8, _to_int),
        d_v=geo.value("d_v_wavelengths", 0.8, _to_float) * lam,
        d_h=geo.value("d_h_wavelengths", 0.5, _to_float) * lam,
        lambda0=lam,
    )

    gr = _Section(parser, "grid")
    n_f = gr.value("n_f", 51, _to_int)
    delta_f = gr.value("delta_f_hz", 30e3, _to_float)
    f1_default = carrier - delta_f * (n_f - 1) / 2.0
    grid = SubcarrierGrid(n_f=n_f, delta_f=delta_f,
                          f1=gr.value("f1_hz", f1_default, _to_float))

    sc = _Section(parser, "scenario")
    base_scenario = ClusterScenario()
    scenario = ClusterScenario(
        n_clusters=sc.value("n_clusters", 23, _to_int),
        rays_per_cluster=sc.value("rays_per_cluster", 20, _to_int),
        zod_range=sc.value("zod_range_deg", base_scenario.zod_range, _to_deg_range),
        aod_range=sc.value("aod_range_deg", base_scenario.aod_range, _to_deg_range),
        zoa_range=sc.value("zoa_range_deg", base_scenario.zoa_range, _to_deg_range),
        aoa_range=sc.value("aoa_range_deg", base_scenario.aoa_range, _to_deg_range),
        ray_angle_spread=math.radians(sc.value("ray_angle_spread_deg", 5.0, _to_float)),
        delay_spread=sc.value("delay_spread_ns", 300.0, _to_float) * 1e-9,
        cluster_decay_db=sc.value("cluster_decay_db", 3.0, _to_float),
        seed=0,
    )

    ex = _Section(parser, "experiment")
    delta_t_ms = ex.value("delta_t_ms", 0.5, _to_float)
    csi_delay_ms = ex.value("csi_delay_ms", 4.0, _to_float)
    if delta_t_ms <= 0:
        raise ConfigError("delta_t_ms must be positive")
    ratio = csi_delay_ms / delta_t_ms
    if abs(ratio - round(ratio)) > 1e-6 * max(1.0, abs(ratio)):
        raise ConfigError(
            f"csi_delay_ms = {csi_delay_ms} must be an integer multiple of "
            f"delta_t_ms = {delta_t_ms}")
    try:
        return ExperimentConfig(
            geometry=geometry,
            grid=grid,
            scenario=scenario,
            n_ues=ex.value("n_ues", 8, _to_int),
            n_rx_antennas=ex.value("n_rx_antennas", 2, _to_int),
            ue_speeds_kmh=ex.value("ue_speeds_kmh", (30.0,), _to_float_list),
            delta_t=delta_t_ms * 1e-3,
            csi_delay=csi_delay_ms * 1e-3,
            history_len=ex.value("history_len", 7, _to_int),
            predictor=ex.value("predictor", "pad", str.strip),
            pad_order=ex.value("pad_order", 0, _to_int),
            sample_snr_db=ex.value("sample_snr_db", math.inf, _to_snr),
            denoise=ex.value("denoise", "off", str.strip),
            gamma=ex.value("gamma", 0.99, _to_float),
            gamma_tk=ex.value("gamma_tk", 0.99, _to_float),
            noise_tail_fraction=ex.value("noise_tail_fraction", 0.25, _to_float),
            covariance_window=ex.value("covariance_window", 64, _to_int),
            snr_db=ex.value("snr_db", 20.0, _to_float),
            drops=ex.value("drops", 10, _to_int),
            seed=ex.value("seed", 0, _to_int),
            doppler_two_pi=ex.value("doppler_two_pi", True, _to_bool),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_sweep(parser: configparser.ConfigParser, base: ExperimentConfig) -> SweepSpec:
    sw = _Section(parser, "sweep")
    axis = sw.value("axis", "snr_db", str.strip)
    if axis == "predictor":
        values = sw.value("values", ("pad",), _to_str_list)
    elif axis in ("n_antennas", "history_len"):
        values = tuple(int(v) for v in sw.value("values", (), _to_float_list))
    else:
        values = sw.value("values", (), _to_float_list)
    if not values:
        raise ConfigError(f"sweep over {axis!r} needs a 'values' list")
    predictors = sw.value("predictors", (base.predictor,), _to_str_list)
    return SweepSpec(axis=axis, values=values, predictors=predictors, base=base)


def parse_config_text(text: str):
    """Parse config text into an ExperimentConfig or, with [sweep], a SweepSpec."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    _reject_unknown(parser)
    base = _build_experiment(parser)
    if parser.has_section("sweep"):
        return _build_sweep(parser, base)
    return base


def parse_config(path: str):
    """Parse a config file; see parse_config_text."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def serialize_config(config) -> str:
    """Render a config (or a sweep's) back to INI text; parse round-trips."""
    sweep = None
    if isinstance(config, SweepSpec):
        sweep, config = config, config.base
    geom, grid, scen = config.geometry, config.grid, config.scenario
    lam = geom.lambda0
    carrier = SPEED_OF_LIGHT / lam
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "n_ues": str(config.n_ues),
        "n_rx_antennas": str(config.n_rx_antennas),
        "ue_speeds_kmh": ",".join(repr(v) for v in config.ue_speeds_kmh),
        "delta_t_ms": repr(config.delta_t * 1e3),
        "csi_delay_ms": repr(config.csi_delay * 1e3),
        "history_len": str(config.history_len),
        "predictor": config.predictor,
        "pad_order": str(config.pad_order),
        "sample_snr_db": "ideal" if math.isinf(config.sample_snr_db)
                         else repr(config.sample_snr_db),
        "denoise": config.denoise,
        "gamma": repr(config.gamma),
        "gamma_tk": repr(config.gamma_tk),
        "noise_tail_fraction": repr(config.noise_tail_fraction),
        "covariance_window": str(config.covariance_window),
        "snr_db": repr(config.snr_db),
        "drops": str(config.drops),
        "seed": str(config.seed),
        "doppler_two_pi": "true" if config.doppler_two_pi else "false",
    }
    parser["geometry"] = {
        "n_v": str(geom.n_v),
        "n_h": str(geom.n_h),
        "d_v_wavelengths": repr(geom.d_v / lam),
        "d_h_wavelengths": repr(geom.d_h / lam),
        "carrier_hz": repr(carrier),
    }
    parser["grid"] = {
        "n_f": str(grid.n_f),
        "delta_f_hz": repr(grid.delta_f),
        "f1_hz": repr(grid.f1),
    }
    parser["scenario"] = {
        "n_clusters": str(scen.n_clusters),
        "rays_per_cluster": str(scen.rays_per_cluster),
        "zod_range_deg": _range_deg(scen.zod_range),
        "aod_range_deg": _range_deg(scen.aod_range),
        "zoa_range_deg": _range_deg(scen.zoa_range),
        "aoa_range_deg": _range_deg(scen.aoa_range),
        "ray_angle_spread_deg": repr(math.degrees(scen.ray_angle_spread)),
        "delay_spread_ns": repr(scen.delay_spread * 1e9),
        "cluster_decay_db": repr(scen.cluster_decay_db),
    }
    if sweep is not None:
        parser["sweep"] = {
            "axis": sweep.axis,
            "values": ",".join(str(v) for v in sweep.values),
            "predictors": ",".join(sweep.predictors),
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def _range_deg(rng: tuple) -> str:
    return f"{math.degrees(rng[0])!r},{math.degrees(rng[1])!r}"
