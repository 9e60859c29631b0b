"""Batch experiment driver: penetration sweeps over the 27-cell scene matrix,
chamber/field noise-rise analogs, and diagnostic map dumps.

Everything is keyed off one integer run seed; per-seed, per-rate and per-dwell
randomness comes from SeedSequence substreams so results are independent of
execution order and worker count.
"""
from __future__ import annotations

import concurrent.futures
import csv
import io
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c as C0

from .errors import ConfigurationError
from .metrics import SweepResult, probability_of_detection, stable_mean
from .mitigation import (MitigationPlan, Technique, apply_technique,
                         cross_pol_factor)
from .processing import (ca_cfar, noise_floor, range_chirp, range_doppler,
                         target_detected, target_exclusion_cells, target_snr_db)
from .propagation import (PathKind, VehicleRects, echo_power, one_way_gain,
                          paths)
from .scenario import (RadarInstance, Scenario, Topology, advance,
                       assign_penetration, generate_highway,
                       install_host_radar, install_radars, load_scenario)
from .synthesis import (Emitter, TargetEcho, ThermalModel, can_beat_in_band,
                        chirp_times_in_window, host_chirp_times,
                        synthesize_dwell, write_cube)
from .waveform import RadarType, WaveformConfig, ClockModel, sample_waveform

# rng substream tags (arbitrary distinct constants)
SCEN_TAG = 0x5C3E
PEN_TAG = 0x9E4A
TECH_TAG = 0x7EC4
NOISE_TAG = 0x401E
CHAMBER_TAG = 0xA4EC

PENETRATION_GRID = (0.0, 0.1, 0.25, 0.5, 0.75, 1.0)

DENSITY_ORDER = ("low", "medium", "high")
TOPOLOGY_ORDER = (Topology.FRONT, Topology.PARTIAL, Topology.FULL)
HOST_ORDER = (RadarType.SBZA, RadarType.SRR, RadarType.LRR)

# Chamber host profile ("Radar A"): 27.4 us PRI, 26 MHz/us slope, 18.88 us
# chirps at 76.889 GHz, 512 chirps per frame at 15 fps.
RADAR_A = WaveformConfig(
    pri=27.4e-6, slope=26e12, chirp_duration=18.88e-6, carrier=76.889e9,
    n_chirps=512, fps=15.0, n_elements=12, tx_power=10 ** (10 / 10.0) * 1e-3,
    element_gain=10 ** (14 / 10.0), adc_rate=25e6)

# Effective receiver noise level of the chamber host.  The experiment reports
# only relative floor rises, so the absolute scale (receiver noise figure,
# front-end losses, interferer duty alignment) is folded into one calibrated
# constant: 15 field-layout interferers raise the floor by about 6 dB and the
# chamber counts 5/15/30 track the 2.5/5/8 dB progression.
RADAR_A_NOISE_FIGURE_DB = 50.6

DEFAULT_NOISE_FIGURE_DB = 12.0

# Reference-target range per host radar class: near the class's maximum
# operating range while keeping the beat tone inside the IF passband for
# every slope draw of that class.
HOST_TARGET_RANGE = {RadarType.LRR: 300.0, RadarType.SRR: 110.0,
                     RadarType.SBZA: 92.0}


def table2_cells():
    """The 27 (density, topology, host type) scene-matrix cells in row order."""
    return [(d, t, h) for d in DENSITY_ORDER for t in TOPOLOGY_ORDER
            for h in HOST_ORDER]


@dataclass(frozen=True)
class RunConfig:
    label: str = "run"
    density: str = "low"
    topology: Topology = Topology.FRONT
    host_type: RadarType = RadarType.LRR
    plan: MitigationPlan = MitigationPlan()
    penetration_rates: tuple = PENETRATION_GRID
    n_seeds: int = 1
    seed: int = 0
    duration: float = 10.0
    n_dwells: int = 0                 # 0 = as many dwells as fit the duration
    target_range: float = 0.0         # 0 = per-host-type default
    target_rcs_dbsm: float = 10.0
    noise_figure_db: float = DEFAULT_NOISE_FIGURE_DB
    window: str = "hann"
    lpf_gating: bool = True
    cfar_guard: int = 2
    cfar_train: int = 8
    cfar_pfa: float = 1e-4
    workers: int = 1
    output_dir: str = "out"
    scenario_file: str = ""           # explicit scene instead of a density draw
    dump_maps: bool = False

    def __post_init__(self):
        rates = tuple(self.penetration_rates)
        if list(rates) != sorted(rates) or any(not 0 <= r <= 1 for r in rates):
            raise ConfigurationError("penetration rates must be sorted within [0, 1]")
        if self.n_seeds < 1:
            raise ConfigurationError("n_seeds must be >= 1")

    def metadata(self):
        md = {
            "label": self.label, "density": self.density,
            "topology": self.topology.value, "host_type": self.host_type.value,
            "penetration_rates": ",".join(repr(r) for r in self.penetration_rates),
            "n_seeds": self.n_seeds, "seed": self.seed,
            "duration": repr(self.duration), "n_dwells": self.n_dwells,
            "target_range": repr(self.target_range),
            "target_rcs_dbsm": repr(self.target_rcs_dbsm),
            "noise_figure_db": repr(self.noise_figure_db),
            "window": self.window, "lpf_gating": self.lpf_gating,
            "cfar_guard": self.cfar_guard, "cfar_train": self.cfar_train,
            "cfar_pfa": repr(self.cfar_pfa),
            "scenario_file": self.scenario_file,
        }
        md.update(self.plan.params_dict())
        return md


def preset_config(index: int, **overrides) -> RunConfig:
    """RunConfig for scene-matrix cell `index` (0..26)."""
    cells = table2_cells()
    if not 0 <= index < len(cells):
        raise ConfigurationError("preset index out of range")
    d, t, h = cells[index]
    base = dict(label=f"cell{index:02d}_{d}_{t.value}_{h.value}",
                density=d, topology=t, host_type=h)
    base.update(overrides)
    return RunConfig(**base)


def output_dir(cfg: RunConfig) -> str:
    return os.environ.get("MIRS_OUTPUT_DIR", cfg.output_dir)


def config_from_dict(d: dict) -> RunConfig:
    """Build a RunConfig from plain config-file keys (flat key-value plus an
    optional nested `plan` section and a `preset` index)."""
    d = dict(d)
    preset = d.pop("preset", None)
    plan_d = dict(d.pop("plan", {}) or {})
    if "technique" in d:
        plan_d.setdefault("technique", d.pop("technique"))
    if plan_d:
        if "technique" in plan_d:
            plan_d["technique"] = Technique(plan_d["technique"])
        d["plan"] = MitigationPlan(**plan_d)
    if "topology" in d:
        d["topology"] = Topology(d["topology"])
    if "host_type" in d:
        d["host_type"] = RadarType(d["host_type"])
    if "penetration_rates" in d:
        d["penetration_rates"] = tuple(d["penetration_rates"])
    try:
        if preset is not None:
            return preset_config(int(preset), **d)
        return RunConfig(**d)
    except TypeError as e:
        raise ConfigurationError(f"bad config key: {e}")


def load_config(path) -> RunConfig:
    import yaml
    with open(path) as f:
        doc = yaml.safe_load(f) or {}
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# scene preparation

def build_scene(cfg: RunConfig, seed_index: int) -> Scenario:
    """Draw the scene and install radars; independent of rate and technique."""
    rng = np.random.default_rng(
        np.random.SeedSequence([cfg.seed, seed_index, SCEN_TAG]))
    if cfg.scenario_file:
        scen = load_scenario(cfg.scenario_file)
        return scen
    t_range = cfg.target_range or HOST_TARGET_RANGE[cfg.host_type]
    scen = generate_highway(cfg.density, rng=rng, duration=cfg.duration,
                            target_rcs_dbsm=cfg.target_rcs_dbsm,
                            target_range=t_range)
    out = []
    for v in scen.vehicles:
        if v.id == scen.host_vehicle_id:
            out.append(install_host_radar(v, cfg.host_type, rng))
        else:
            out.append(install_radars(v, cfg.topology, rng))
    return scen.with_vehicles(out)


def prepare_scene(cfg: RunConfig, seed_index: int, rate: float) -> Scenario:
    scen = build_scene(cfg, seed_index)
    rng_p = np.random.default_rng(np.random.SeedSequence(
        [cfg.seed, seed_index, PEN_TAG, int(round(rate * 1000))]))
    scen = assign_penetration(scen, rate, rng_p)
    tech_idx = list(Technique).index(cfg.plan.technique)
    rng_t = np.random.default_rng(
        np.random.SeedSequence([cfg.seed, seed_index, TECH_TAG, tech_idx]))
    return apply_technique(scen, cfg.plan, rng_t)


def dwell_schedule(cfg: RunConfig, scen: Scenario):
    """(n_dwells, frame_period) for the host radar of a prepared scene."""
    hr = scen.host_radar
    frame_p = hr.tf_slot[3] if hr.tf_slot is not None else 1.0 / hr.waveform.fps
    n_max = max(1, int(scen.duration / frame_p))
    n = min(cfg.n_dwells, n_max) if cfg.n_dwells > 0 else n_max
    return n, frame_p


# ---------------------------------------------------------------------------
# single dwell

@dataclass
class DwellResult:
    detected: bool
    floor_db: float
    target_snr_db: float
    n_emitters: int = 0
    cube: object = None
    rd: object = None


def build_emitters(snap: Scenario, host_pos, host_bore, hr: RadarInstance,
                   host_wf: WaveformConfig, t0: float, t1: float,
                   seed_key) -> list:
    """One Emitter per interferer radar and unblocked propagation path."""
    rects = VehicleRects(snap.vehicles)
    host_id = snap.host_vehicle_id
    out = []
    for v in snap.vehicles:
        if v.id == host_id:
            continue
        for ri, r in enumerate(v.radars):
            wf_i = r.drifted()
            if not can_beat_in_band(host_wf, wf_i):
                continue
            pos_i = v.radar_world_position(r)
            bore_i = v.radar_world_boresight(r)
            times = None
            for p in paths(pos_i, host_pos, snap, exclude_ids=(v.id, host_id),
                           rects=rects):
                if p.blocked:
                    continue
                g = one_way_gain(p, r, bore_i, hr, host_bore)
                if g <= 0.0:
                    continue
                g *= cross_pol_factor(r.polarization, hr.polarization,
                                      reflected=p.kind is not PathKind.DIRECT)
                delay = p.length / C0
                if times is None:
                    times = chirp_times_in_window(
                        wf_i, t0 - delay, t1 - delay, tf_slot=r.tf_slot,
                        dither_bound=r.dither_bound,
                        dither_seed=tuple(seed_key) + (v.id, ri))
                if times.size == 0:
                    continue
                out.append(Emitter(
                    waveform=wf_i, amplitude=math.sqrt(wf_i.tx_power * g),
                    chirp_times=times + delay, key=(v.id, ri, p.kind.value)))
    return out


def simulate_dwell(cfg: RunConfig, scen: Scenario, seed_index: int,
                   dwell_index: int, frame_p: float,
                   collect: bool = False, with_interference: bool = True) -> DwellResult:
    snap = advance(scen, dwell_index * frame_p)
    host_v = snap.host
    hr = snap.host_radar
    host_pos = host_v.radar_world_position(hr)
    host_bore = host_v.radar_world_boresight(hr)
    host_wf = hr.drifted()

    host_times = host_chirp_times(
        host_wf, dwell_index, tf_slot=hr.tf_slot, dither_bound=hr.dither_bound,
        dither_seed=(cfg.seed, seed_index, host_v.id, snap.host_radar_index))

    # reference target rides along with the host (zero radial speed), placed
    # on the host radar's boresight so every host class can see it
    tgt = snap.reference_target
    tgt_range = math.hypot(*tgt.position)
    tgt_pos = (host_pos[0] + tgt_range * math.cos(host_bore),
               host_pos[1] + tgt_range * math.sin(host_bore))
    p_echo = echo_power(hr, host_pos, host_bore, tgt_pos, tgt.rcs)
    targets = [TargetEcho(power=p_echo, range_m=tgt_range)] if p_echo > 0 else []

    emitters = []
    if with_interference:
        t0 = host_times[0]
        t1 = host_times[-1] + host_wf.chirp_duration
        emitters = build_emitters(snap, host_pos, host_bore, hr, host_wf,
                                  t0, t1, (cfg.seed, seed_index))

    noise = ThermalModel(noise_figure_db=cfg.noise_figure_db)
    noise_rng = np.random.default_rng(np.random.SeedSequence(
        [cfg.seed, seed_index, NOISE_TAG, dwell_index]))
    cube = synthesize_dwell(host_wf, host_times, targets, emitters, noise,
                            noise_rng, lpf_gating=cfg.lpf_gating)

    rd = range_doppler(cube, window=cfg.window)
    f_b = 2.0 * tgt_range * host_wf.slope / C0
    rb = int(round(f_b / (host_wf.adc_rate / cube.n_fast)))
    db = rd.zero_doppler_bin
    excl = target_exclusion_cells(rd, rb, db)
    floor = noise_floor(rd, exclusion=excl)
    dets = ca_cfar(rd, guard=cfg.cfar_guard, train=cfg.cfar_train,
                   pfa=cfg.cfar_pfa)
    hit = bool(targets) and target_detected(dets, rb, db, rd.n_doppler_bins)
    snr = target_snr_db(rd, rb, db, floor) if targets else float("nan")
    return DwellResult(detected=hit, floor_db=floor, target_snr_db=snr,
                       n_emitters=len(emitters),
                       cube=cube if collect else None,
                       rd=rd if collect else None)


# ---------------------------------------------------------------------------
# sweep

def run_cell(cfg: RunConfig, seed_index: int, rate: float) -> SweepResult:
    scen = prepare_scene(cfg, seed_index, rate)
    n_dwells, frame_p = dwell_schedule(cfg, scen)
    hits, floors, snrs = [], [], []
    for d in range(n_dwells):
        r = simulate_dwell(cfg, scen, seed_index, d, frame_p)
        hits.append(r.detected)
        floors.append(r.floor_db)
        snrs.append(r.target_snr_db)
    return SweepResult(
        scenario_label=cfg.density, topology=cfg.topology.value,
        host_radar_type=cfg.host_type.value,
        technique=cfg.plan.technique.value, penetration_rate=rate,
        pd=probability_of_detection(hits),
        mean_noise_floor_db=stable_mean(floors),
        mean_target_snr_db=stable_mean(snrs),
        n_dwells=n_dwells, seed=seed_index)


def _cell_task(args):
    cfg, seed_index, rate = args
    return (seed_index, rate), run_cell(cfg, seed_index, rate)


def run_sweep(cfg: RunConfig, csv_path: str = None):
    """All (seed, rate) cells of one config; returns SweepResults in a fixed
    order and optionally writes them as one CSV."""
    tasks = [(cfg, s, r) for s in range(cfg.n_seeds)
             for r in cfg.penetration_rates]
    if cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(cfg.workers) as pool:
            got = dict(pool.map(_cell_task, tasks))
    else:
        got = dict(_cell_task(t) for t in tasks)
    results = [got[(s, r)] for s in range(cfg.n_seeds)
               for r in cfg.penetration_rates]
    if csv_path is not None:
        text = results_csv(cfg, results)
        os.makedirs(os.path.dirname(csv_path) or ".", exist_ok=True)
        with open(csv_path, "w", newline="") as f:
            f.write(text)
    return results


CSV_FIELDS = ("scenario_label", "topology", "host_radar_type", "technique",
              "penetration_rate", "seed", "n_dwells", "pd",
              "mean_noise_floor_db", "mean_target_snr_db")


def results_csv(cfg: RunConfig, results) -> str:
    buf = io.StringIO()
    for k in sorted(cfg.metadata()):
        buf.write(f"# {k}={cfg.metadata()[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in results:
        w.writerow([r.scenario_label, r.topology, r.host_radar_type,
                    r.technique, repr(r.penetration_rate), r.seed, r.n_dwells,
                    repr(r.pd), repr(r.mean_noise_floor_db),
                    repr(r.mean_target_snr_db)])
    return buf.getvalue()


def read_results_csv(path):
    rows = []
    with open(path) as f:
        rdr = csv.DictReader(l for l in f if not l.startswith("#"))
        for row in rdr:
            rows.append(row)
    return rows


def report(csv_paths, out_path=None) -> str:
    """Aggregate sweep CSVs into a per-(technique, rate) mean-PD table."""
    acc = {}
    for path in csv_paths:
        for row in read_results_csv(path):
            key = (row["technique"], float(row["penetration_rate"]))
            acc.setdefault(key, []).append(float(row["pd"]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("technique", "penetration_rate", "mean_pd", "n_cells"))
    for (tech, rate) in sorted(acc):
        vals = acc[(tech, rate)]
        w.writerow((tech, repr(rate), repr(stable_mean(vals)), len(vals)))
    text = buf.getvalue()
    if out_path is not None:
        with open(out_path, "w", newline="") as f:
            f.write(text)
    return text


# ---------------------------------------------------------------------------
# chamber / field noise-rise analogs (free space, direct paths only)

def chamber_layout(n: int = 30, distance: float = 7.0):
    """n interferers fanned out `distance` ahead of the host, all inside a
    long-range FOV, each aimed straight back at the host."""
    ys = np.linspace(-1.5, 1.5, n) if n > 1 else np.zeros(1)
    return [(distance, float(y)) for y in ys]


def field_layout(per_array: int = 5, distances=(5.0, 10.0, 15.0)):
    """Arrays of `per_array` interferers at the given down-range distances."""
    out = []
    for d in distances:
        ys = np.linspace(-0.6, 0.6, per_array)
        out.extend((d, float(y)) for y in ys)
    return out


def _free_space_rx(host_wf: WaveformConfig, wf_i: WaveformConfig,
                   pos, fov_halfwidth: float) -> float:
    """Direct-path receive power from an aimed interferer at `pos`; the host
    sits at the origin looking along +x."""
    L = math.hypot(*pos)
    ang = math.atan2(pos[1], pos[0])
    if abs(ang) > fov_halfwidth:
        return 0.0
    lam = C0 / wf_i.carrier
    return (wf_i.tx_power * wf_i.rx_gain * host_wf.rx_gain
            * (lam / (4 * math.pi * L)) ** 2)


def run_anechoic_analog(host_profile: WaveformConfig = RADAR_A,
                        n_interferers: int = 30, layout=None, counts=None,
                        n_seeds: int = 10, n_dwells: int = 50, seed: int = 0,
                        noise_figure_db: float = None,
                        interferer_type: RadarType = RadarType.USRR,
                        fov_halfwidth: float = math.radians(15.0),
                        co_band: bool = True, lpf_gating: bool = True):
    """Mean noise floor versus number of active interferers, free space.

    Interferers activate in layout order; returns {count: mean floor dB}.
    """
    layout = layout if layout is not None else chamber_layout(n_interferers)
    if len(layout) < n_interferers:
        raise ConfigurationError("layout smaller than n_interferers")
    if counts is None:
        counts = sorted({0, n_interferers} | set(range(0, n_interferers + 1, 5)))
    if max(counts) > n_interferers:
        raise ConfigurationError("count exceeds n_interferers")

    nf = noise_figure_db if noise_figure_db is not None else RADAR_A_NOISE_FIGURE_DB
    noise = ThermalModel(noise_figure_db=nf)
    floors = {}
    for count in counts:
        per_dwell = []
        for s in range(n_seeds):
            rng = np.random.default_rng(
                np.random.SeedSequence([seed, s, CHAMBER_TAG]))
            emitter_specs = []
            for i in range(count):
                wf = sample_waveform(interferer_type, rng, interferer_ok=True)
                if co_band:
                    # pin the carrier near the host band for worst-case overlap
                    wf = replace(wf, carrier=host_profile.carrier
                                 + rng.uniform(-50e6, 50e6))
                drift = rng.uniform(-20.0, 20.0)
                wf = RadarInstance(
                    mount=(0.0, 0.0), boresight=0.0, fov_halfwidth=math.pi,
                    radar_type=interferer_type, waveform=wf,
                    clock=ClockModel(drift_ppm=drift)).drifted()
                p_rx = _free_space_rx(host_profile, wf, layout[i], fov_halfwidth)
                emitter_specs.append((wf, p_rx, layout[i]))
            for d in range(n_dwells):
                host_times = host_chirp_times(host_profile, d)
                t0, t1 = host_times[0], host_times[-1] + host_profile.chirp_duration
                emitters = []
                for wf, p_rx, pos in emitter_specs:
                    if p_rx <= 0.0 or not can_beat_in_band(host_profile, wf):
                        continue
                    delay = math.hypot(*pos) / C0
                    times = chirp_times_in_window(wf, t0 - delay, t1 - delay)
                    emitters.append(Emitter(waveform=wf,
                                            amplitude=math.sqrt(p_rx),
                                            chirp_times=times + delay))
                noise_rng = np.random.default_rng(np.random.SeedSequence(
                    [seed, s, NOISE_TAG, d]))
                cube = synthesize_dwell(host_profile, host_times, [], emitters,
                                        noise, noise_rng, lpf_gating=lpf_gating)
                rd = range_doppler(cube)
                per_dwell.append(10 ** (noise_floor(rd) / 10.0))
        floors[count] = 10.0 * math.log10(stable_mean(per_dwell))
    return floors


# ---------------------------------------------------------------------------
# diagnostic map dumps

def dump_maps(outdir, n_interferers: int = 5, dwell_index: int = 0,
              seed: int = 0, host_profile: WaveformConfig = RADAR_A,
              distance: float = 7.0):
    """Write time-chirp, range-chirp and range-Doppler matrices with and
    without interference (six binary files plus headers) for one chamber
    dwell.  Returns the file paths."""
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as e:
        raise ConfigurationError(f"map dump failed for {outdir}: {e}")
    written = []
    for tag, count in (("clean", 0), ("interf", n_interferers)):
        cube = chamber_cube(host_profile, count, dwell_index, seed,
                            distance=distance)
        rc = range_chirp(cube)
        rd = range_doppler(cube)
        mats = (("time_chirp", cube.samples),
                ("range_chirp", rc.astype(np.complex128)),
                ("range_doppler", rd.power.astype(np.complex128)))
        for name, mat in mats:
            path = os.path.join(outdir, f"{name}_{tag}.bin")
            try:
                write_cube(path, mat, host_profile.adc_rate,
                           header_extra={"stage": name, "interferers": count,
                                         "dwell_index": dwell_index,
                                         "seed": seed})
            except OSError as e:
                raise ConfigurationError(f"map dump failed for {path}: {e}")
            written.append(path)
    return written


def chamber_cube(host_profile: WaveformConfig, count: int, dwell_index: int,
                 seed: int, distance: float = 7.0):
    """One chamber dwell cube with `count` co-band interferers active."""
    layout = chamber_layout(max(count, 1), distance)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0, CHAMBER_TAG]))
    noise = ThermalModel(noise_figure_db=RADAR_A_NOISE_FIGURE_DB)
    host_times = host_chirp_times(host_profile, dwell_index)
    t0, t1 = host_times[0], host_times[-1] + host_profile.chirp_duration
    emitters = []
    for i in range(count):
        wf = sample_waveform(RadarType.USRR, rng, interferer_ok=True)
        wf = replace(wf, carrier=host_profile.carrier + rng.uniform(-50e6, 50e6))
        p_rx = _free_space_rx(host_profile, wf, layout[i], math.radians(15.0))
        if p_rx <= 0.0:
            continue
        delay = math.hypot(*layout[i]) / C0
        times = chirp_times_in_window(wf, t0 - delay, t1 - delay)
        emitters.append(Emitter(waveform=wf, amplitude=math.sqrt(p_rx),
                                chirp_times=times + delay))
    noise_rng = np.random.default_rng(
        np.random.SeedSequence([seed, 0, NOISE_TAG, dwell_index]))
    return synthesize_dwell(host_profile, host_times, [], emitters, noise,
                            noise_rng)
