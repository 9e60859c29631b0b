"""LFM-CW chirp parameterization, per-type waveform randomization and clock drift.

Waveform ranges for the three analysis radar classes (LRR / SRR / SBZA) are
uniformly randomized; the USRR class exists only as an interferer profile for
the chamber/field experiment analogs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError

SWEEP_BAND_HZ = 4e9          # 77-81 GHz automotive band
DEFAULT_ADC_RATE_HZ = 25e6   # complex IF sampling rate shared by all profiles


class RadarType(enum.Enum):
    LRR = "LRR"
    SRR = "SRR"
    SBZA = "SBZA"
    USRR = "USRR"   # interferer-only profile


@dataclass(frozen=True)
class WaveformConfig:
    pri: float               # chirp repetition interval [s]
    slope: float             # chirp slope [Hz/s]
    chirp_duration: float    # [s]
    carrier: float           # [Hz]
    n_chirps: int            # chirps per dwell
    fps: float               # frames (dwells) per second
    n_elements: int
    tx_power: float          # per-element transmit power [W]
    element_gain: float      # linear gain per element
    adc_rate: float          # complex sampling rate f_s [Hz]
    start_offset: float = 0.0

    def __post_init__(self):
        if min(self.pri, self.slope, self.chirp_duration, self.carrier,
               self.n_chirps, self.fps, self.n_elements, self.tx_power,
               self.element_gain, self.adc_rate) <= 0:
            raise ConfigurationError("waveform fields must be strictly positive")
        if self.chirp_duration > self.pri * (1 + 1e-12):
            raise ConfigurationError("chirp_duration must fit inside the PRI")
        if self.slope * self.chirp_duration > SWEEP_BAND_HZ * (1 + 1e-12):
            raise ConfigurationError("sweep exceeds the 4 GHz band")
        if self.n_chirps * self.pri > (1.0 / self.fps) * (1 + 1e-12):
            raise ConfigurationError("dwell does not fit inside a frame")

    @property
    def sweep_bandwidth(self) -> float:
        return self.slope * self.chirp_duration

    @property
    def n_fast(self) -> int:
        # tolerate fp noise so exact products do not floor one short
        return int(math.floor(self.adc_rate * self.chirp_duration * (1 + 1e-12)))

    @property
    def dwell_duration(self) -> float:
        return self.n_chirps * self.pri

    @property
    def erp(self) -> float:
        """Effective radiated power P_t * n_el * g_el [W]."""
        return self.tx_power * self.n_elements * self.element_gain

    @property
    def rx_gain(self) -> float:
        """Receive antenna gain inside the FOV sector (linear)."""
        return self.n_elements * self.element_gain


@dataclass(frozen=True)
class ClockModel:
    drift_ppm: float = 0.0

    def __post_init__(self):
        if abs(self.drift_ppm) > 100:
            raise ConfigurationError("clock drift limited to +/-100 ppm")


def _dbm(x):
    return 10 ** (x / 10.0) * 1e-3


def _dbi(x):
    return 10 ** (x / 10.0)


# (min, max) ranges in SI units; fixed fields as scalars.
WAVEFORM_RANGES = {
    RadarType.LRR: dict(
        pri=(18e-6, 20e-6), slope=(9e12, 11e12), chirp_duration=(14e-6, 16e-6),
        carrier=(77e9, 81e9), n_chirps=(256, 512), fps=(25.0, 30.0),
        n_elements=12, tx_power=_dbm(10), element_gain=_dbi(14),
    ),
    RadarType.SRR: dict(
        pri=(22e-6, 27e-6), slope=(27e12, 33e12), chirp_duration=(15e-6, 20e-6),
        carrier=(77e9, 81e9), n_chirps=(128, 256), fps=(25.0, 30.0),
        n_elements=8, tx_power=_dbm(10), element_gain=_dbi(12.8),
    ),
    RadarType.SBZA: dict(
        pri=(30e-6, 35e-6), slope=(35e12, 39e12), chirp_duration=(20e-6, 25e-6),
        carrier=(77e9, 81e9), n_chirps=(128, 256), fps=(25.0, 30.0),
        n_elements=4, tx_power=_dbm(10), element_gain=_dbi(12.8),
    ),
    # Interferer-only experiment-analog profile: SRR timing with a low-gain
    # single-channel front end.
    RadarType.USRR: dict(
        pri=(22e-6, 27e-6), slope=(27e12, 33e12), chirp_duration=(15e-6, 20e-6),
        carrier=(77e9, 81e9), n_chirps=(128, 256), fps=(25.0, 30.0),
        n_elements=8, tx_power=_dbm(10), element_gain=_dbi(10),
    ),
}


def sample_waveform(radar_type: RadarType, rng: np.random.Generator,
                    ranges=None, adc_rate: float = DEFAULT_ADC_RATE_HZ,
                    interferer_ok: bool = False) -> WaveformConfig:
    """Draw one waveform uniformly from the per-type parameter ranges."""
    if not isinstance(radar_type, RadarType):
        raise ConfigurationError(f"unknown radar type: {radar_type!r}")
    if radar_type is RadarType.USRR and not interferer_ok:
        raise ConfigurationError("USRR is an interferer-only profile")
    spec = (ranges or WAVEFORM_RANGES)[radar_type]

    pri = rng.uniform(*spec["pri"])
    slope = rng.uniform(*spec["slope"])
    chirp_duration = rng.uniform(*spec["chirp_duration"])
    # Re-draw the chirp duration if the draw order allowed a violation.
    for _ in range(1000):
        if chirp_duration <= pri:
            break
        chirp_duration = rng.uniform(*spec["chirp_duration"])
    else:
        raise ConfigurationError("chirp_duration range incompatible with PRI range")
    carrier = rng.uniform(*spec["carrier"])
    n_chirps = int(rng.integers(spec["n_chirps"][0], spec["n_chirps"][1] + 1))
    fps = rng.uniform(*spec["fps"])
    start_offset = rng.uniform(0.0, pri)
    return WaveformConfig(
        pri=pri, slope=slope, chirp_duration=chirp_duration, carrier=carrier,
        n_chirps=n_chirps, fps=fps, n_elements=spec["n_elements"],
        tx_power=spec["tx_power"], element_gain=spec["element_gain"],
        adc_rate=adc_rate, start_offset=start_offset,
    )


def chirp_value(cfg: WaveformConfig, t: float) -> complex:
    """Single chirp sample exp(-j2pi(f_c t + slope t^2 / 2)); zero outside [0, T_c]."""
    if t < 0.0 or t > cfg.chirp_duration:
        return 0j
    cycles = cfg.carrier * t + 0.5 * cfg.slope * t * t
    return complex(math.cos(2 * math.pi * (cycles % 1.0)),
                   -math.sin(2 * math.pi * (cycles % 1.0)))


def apply_clock_drift(cfg: WaveformConfig, clock: ClockModel) -> WaveformConfig:
    """Scale frequencies up and times down by the same (1 + ppm*1e-6) factor."""
    f = 1.0 + clock.drift_ppm * 1e-6
    if f == 1.0:
        return cfg
    return replace(cfg, carrier=cfg.carrier * f, slope=cfg.slope * f,
                   pri=cfg.pri / f, chirp_duration=cfg.chirp_duration / f)


def chirp_start_times(cfg: WaveformConfig, dwell_index: int) -> np.ndarray:
    """Absolute start times of the n_chirps chirps of one dwell (no dithering)."""
    if dwell_index < 0:
        raise ConfigurationError("dwell_index must be >= 0")
    base = cfg.start_offset + dwell_index / cfg.fps
    return base + np.arange(cfg.n_chirps) * cfg.pri
