"""Scenario configuration, default geometry and config-file handling.

The default scenario places four base stations at the corners of a 60 m
square (the first at the origin), one surface near each of the first two
stations plus two more at the documented fixed spots, and the users at the
corners of a small 2.5 m square whose origin corner sits at (30, 60).  All
values are plain config fields and can be overridden from an INI-style
``key = value`` file.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import NetworkTopology, generate_channels
from .circuit import ElementCircuit, SubcarrierGrid
from .errors import ConfigError
from .solver import SolverConfig

DEFAULT_RIS_XY = ((-2.5, 8.5), (62.5, 8.5), (-2.5, 111.5), (62.5, 111.5))
DEFAULT_POWER_DBM = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0)
DEFAULT_VARIANTS = ("bd", "diag", "none", "bd-pi0", "diag-pi0", "none-pi0")


def dbm_to_watt(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(p_watt):
    return 10.0 * np.log10(np.asarray(p_watt, dtype=float)) + 30.0


@dataclass
class ScenarioConfig:
    """Complete description of one simulated deployment."""

    num_bs: int = 4
    num_antennas: int = 4
    num_elements: int = 100
    users_per_bs: tuple = (1, 1, 1, 1)

    bs_square_width: float = 60.0
    bs_height: float = 5.0
    ue_square_origin: tuple = (30.0, 60.0)
    ue_square_width: float = 2.5
    ue_height: float = 1.5
    ris_height: float = 3.0
    ris_xy: tuple | None = None  # defaults to DEFAULT_RIS_XY prefix

    carrier_frequency: float = 3.5e9
    bandwidth: float = 0.1e9
    num_subcarriers: int = 64
    num_taps: int = 16

    alpha_bs_ue: float = 3.7
    alpha_bs_ris: float = 2.2
    alpha_ris_ue: float = 2.6

    noise_dbm: float = -90.0
    power_dbm: tuple = DEFAULT_POWER_DBM

    trials: int = 100
    seed: int = 1
    variants: tuple = DEFAULT_VARIANTS

    circuit: ElementCircuit = field(default_factory=ElementCircuit)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if isinstance(self.users_per_bs, int):
            self.users_per_bs = (self.users_per_bs,) * self.num_bs
        self.users_per_bs = tuple(int(l) for l in self.users_per_bs)
        if len(self.users_per_bs) != self.num_bs:
            raise ConfigError("network.L_q must list one entry per BS")
        if self.trials < 1:
            raise ConfigError("simulation.trials must be >= 1")
        if self.num_bs < 1 or self.num_antennas < 1 or self.num_elements < 1:
            raise ConfigError("network sizes must be >= 1")

    @property
    def num_users(self):
        return sum(self.users_per_bs)

    @property
    def noise_power(self):
        return float(dbm_to_watt(self.noise_dbm))

    @property
    def power_watts(self):
        return tuple(float(dbm_to_watt(p)) for p in self.power_dbm)

    def grid(self):
        return SubcarrierGrid(self.carrier_frequency, self.bandwidth,
                              self.num_subcarriers)

    def exponents(self):
        return (self.alpha_bs_ue, self.alpha_bs_ris, self.alpha_ris_ue)


def _corner_grid(count, width, origin=(0.0, 0.0)):
    """Corners of a square walked row by row: (0,0), (w,0), (0,w), (w,w), ..."""
    pts = []
    for i in range(count):
        pts.append((origin[0] + width * (i % 2), origin[1] + width * (i // 2)))
    return np.array(pts)


def build_scenario(config):
    """Node geometry of a configuration, as a :class:`NetworkTopology`."""
    q_n = config.num_bs
    bs_xy = _corner_grid(q_n, config.bs_square_width)
    ue_xy = _corner_grid(config.num_users, config.ue_square_width,
                         config.ue_square_origin)
    if config.ris_xy is not None:
        ris_xy = np.asarray(config.ris_xy, dtype=float)
        if ris_xy.shape != (q_n, 2):
            raise ConfigError("geometry.ris_positions must list one x,y pair per BS")
    elif q_n <= len(DEFAULT_RIS_XY):
        ris_xy = np.asarray(DEFAULT_RIS_XY[:q_n], dtype=float)
    else:
        raise ConfigError("geometry.ris_positions is required for more than "
                          f"{len(DEFAULT_RIS_XY)} base stations")
    stack = lambda xy, z: np.column_stack([xy, np.full(len(xy), z)])
    return NetworkTopology(stack(bs_xy, config.bs_height),
                           stack(ue_xy, config.ue_height),
                           stack(ris_xy, config.ris_height),
                           config.num_antennas, config.num_elements,
                           config.users_per_bs)


def trial_seed(root_seed, trial):
    """Stable per-trial channel seed derived from the root seed."""
    ss = np.random.SeedSequence(root_seed, spawn_key=(int(trial),))
    return int(ss.generate_state(1, np.uint64)[0])


def channels_for_trial(config, trial, topology=None):
    """One channel realization of the configured scenario."""
    topology = topology or build_scenario(config)
    return generate_channels(topology, config.grid(), config.exponents(),
                             trial_seed(config.seed, trial),
                             num_taps=config.num_taps, circuit=config.circuit)


# ---------------------------------------------------------------------------
# INI config files
# ---------------------------------------------------------------------------

def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _pairs(text):
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        x, y = chunk.split(",")
        out.append((float(x), float(y)))
    return tuple(out)


def load_config(path):
    """Read a scenario from an INI file; unset keys keep their defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    cfg = ScenarioConfig()
    try:
        if parser.has_section("network"):
            sec = parser["network"]
            num_bs = sec.getint("Q", cfg.num_bs)
            users = sec.get("L_q", None)
            if users is None:
                per_bs = cfg.users_per_bs if num_bs == cfg.num_bs else (1,) * num_bs
            else:
                vals = tuple(int(x) for x in users.split(","))
                per_bs = vals * num_bs if len(vals) == 1 else vals
            cfg = replace(cfg, num_bs=num_bs,
                          num_antennas=sec.getint("N", cfg.num_antennas),
                          num_elements=sec.getint("M", cfg.num_elements),
                          users_per_bs=per_bs)
        if parser.has_section("geometry"):
            sec = parser["geometry"]
            ris_xy = cfg.ris_xy
            if sec.get("ris_positions", None):
                ris_xy = _pairs(sec["ris_positions"])
            origin = cfg.ue_square_origin
            if sec.get("ue_square_origin", None):
                origin = _floats(sec["ue_square_origin"])
            cfg = replace(cfg,
                          bs_square_width=sec.getfloat("bs_square_width", cfg.bs_square_width),
                          bs_height=sec.getfloat("bs_height", cfg.bs_height),
                          ue_square_origin=origin,
                          ue_square_width=sec.getfloat("ue_square_width", cfg.ue_square_width),
                          ue_height=sec.getfloat("ue_height", cfg.ue_height),
                          ris_height=sec.getfloat("ris_height", cfg.ris_height),
                          ris_xy=ris_xy)
        if parser.has_section("ofdm"):
            sec = parser["ofdm"]
            cfg = replace(cfg,
                          carrier_frequency=sec.getfloat("f_c", cfg.carrier_frequency),
                          bandwidth=sec.getfloat("BW", cfg.bandwidth),
                          num_subcarriers=sec.getint("K", cfg.num_subcarriers),
                          num_taps=sec.getint("delay_taps", cfg.num_taps))
        if parser.has_section("pathloss"):
            sec = parser["pathloss"]
            cfg = replace(cfg,
                          alpha_bs_ue=sec.getfloat("bs_ue", cfg.alpha_bs_ue),
                          alpha_bs_ris=sec.getfloat("bs_ris", cfg.alpha_bs_ris),
                          alpha_ris_ue=sec.getfloat("ris_ue", cfg.alpha_ris_ue))
        if parser.has_section("power"):
            sec = parser["power"]
            sweep = cfg.power_dbm
            if sec.get("power_dbm", None):
                sweep = _floats(sec["power_dbm"])
            cfg = replace(cfg, noise_dbm=sec.getfloat("noise_dbm", cfg.noise_dbm),
                          power_dbm=sweep)
        if parser.has_section("circuit"):
            sec = parser["circuit"]
            base = cfg.circuit
            cfg = replace(cfg, circuit=ElementCircuit(
                sec.getfloat("resistance", base.resistance),
                sec.getfloat("L1", base.inductance_l1),
                sec.getfloat("L2", base.inductance_l2),
                sec.getfloat("Z0", base.z0),
                sec.getfloat("c_min", base.c_min),
                sec.getfloat("c_max", base.c_max)))
        if parser.has_section("solver"):
            sec = parser["solver"]
            base = cfg.solver
            cfg = replace(cfg, solver=SolverConfig(
                tau=sec.getfloat("tau", base.tau),
                alpha0=sec.getfloat("alpha0", base.alpha0),
                epsilon=sec.getfloat("epsilon", base.epsilon),
                max_iters=sec.getint("max_iters", base.max_iters),
                tol=sec.getfloat("tol", base.tol),
                switch_hold_iters=sec.getint("switch_hold_iters", base.switch_hold_iters)))
        if parser.has_section("simulation"):
            sec = parser["simulation"]
            variants = cfg.variants
            if sec.get("variants", None):
                variants = tuple(v.strip() for v in sec["variants"].split(",") if v.strip())
            cfg = replace(cfg, trials=sec.getint("trials", cfg.trials),
                          seed=sec.getint("seed", cfg.seed), variants=variants)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return cfg
