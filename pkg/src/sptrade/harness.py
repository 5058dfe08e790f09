"""Monte Carlo sweeps, MC-side power accounting and CSV output.

Every drop is generated from the seed pair ``(master seed, drop index)``
through :class:`numpy.random.SeedSequence`, so drop ``i`` is the same
realization at every sweep point and in every run, whatever the order in
which drops are processed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .allocator import ENERGY_EFFICIENCY, THROUGHPUT, SolveOptions, solve
from .linkmath import mu_power_for_rate
from .scenario import (ChannelParams, DropGeometry, Scenario, SystemDefaults, draw_channel_gain,
                       generate_drop, make_rng, parse_floats, parse_kv)
from .selection import (EXHAUSTIVE, NON_SPT, SCHEMES, SPT_ORDER, THROUGHPUT_SCHEME,
                        SelectionResult, run_scheme)

EE_VS_PMAX = "ee-vs-pmax"
EE_VS_PC = "ee-vs-pc"
EE_VS_DISTANCE = "ee-and-saving-vs-distance"
EE_VS_WMC = "ee-and-count-vs-wmc"
SINGLE_DROP = "single-drop"

# experiment -> (sweep column, default sweep values)
EXPERIMENTS = {
    EE_VS_PMAX: ("p_max_dbm", [12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0]),
    EE_VS_PC: ("p_c_w", [0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0]),
    EE_VS_DISTANCE: ("mu_mc_distance_m", [300.0, 320.0, 340.0, 360.0, 380.0, 400.0, 420.0,
                                          440.0, 460.0, 480.0]),
    EE_VS_WMC: ("w_mc_khz", [180.0, 240.0, 300.0, 360.0, 420.0, 480.0, 540.0]),
    SINGLE_DROP: ("drop_seed", []),
}

DEFAULT_DROPS = 100
# offloaded MUs are reached from the MC outdoors: no building penetration
MC_LINK = ChannelParams(penetration_loss=0.0)

CSV_COLUMNS = ("scheme", "ee_bits_per_joule", "rate_bits_per_s", "selected_mu_count",
               "feasible_fraction", "mc_power_saved_w")


class ConfigError(ValueError):
    pass


# table fields that a config may override, with their unit conversions
_OVERRIDES = {
    "n_mu": ("n_mu", int), "n_su": ("n_su", int),
    "p_max_dbm": ("p_max_dbm", float), "p_c_w": ("p_c_w", float), "xi": ("xi", float),
    "w_mc_khz": ("w_mc_hz", lambda v: 1e3 * float(v)), "w_mc_hz": ("w_mc_hz", float),
    "b_sc_khz": ("b_sc_hz", lambda v: 1e3 * float(v)), "b_sc_hz": ("b_sc_hz", float),
    "r_mc_kbps": ("r_mc_bps", lambda v: 1e3 * float(v)), "r_mc_bps": ("r_mc_bps", float),
    "r_sc_min_kbps": ("r_sc_min_bps", lambda v: 1e3 * float(v)),
    "r_sc_min_bps": ("r_sc_min_bps", float),
    "n0_dbm_per_hz": ("n0_dbm_per_hz", float),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    values: tuple[float, ...] = ()
    drops: int = DEFAULT_DROPS
    seed: int = 0
    schemes: tuple[str, ...] = (SPT_ORDER, NON_SPT)
    table: SystemDefaults = SystemDefaults()
    geometry: DropGeometry = DropGeometry()
    channel: ChannelParams = ChannelParams()
    mc_channel: ChannelParams = MC_LINK
    enforce_c1: bool = True
    enforce_c4: bool = True
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown {self.experiment!r}; "
                              f"expected one of {', '.join(EXPERIMENTS)}")
        if self.experiment == SINGLE_DROP:
            object.__setattr__(self, "values", (float(self.seed),))
        elif not self.values:
            object.__setattr__(self, "values", tuple(EXPERIMENTS[self.experiment][1]))
        vals = list(self.values)
        if not vals:
            raise ConfigError("values: sweep must be nonempty")
        if vals != sorted(vals):
            raise ConfigError("values: sweep must be sorted ascending")
        if self.drops < 1:
            raise ConfigError("drops: must be >= 1")
        if not self.schemes:
            raise ConfigError("schemes: at least one scheme is required")
        for sch in self.schemes:
            if sch not in SCHEMES:
                raise ConfigError(f"schemes: unknown {sch!r}; expected one of {', '.join(SCHEMES)}")
        if self.table.n_mu < 0 or self.table.n_su < 1:
            raise ConfigError("n_mu must be >= 0 and n_su >= 1")
        if EXHAUSTIVE in self.schemes and self.table.n_mu > 20:
            raise ConfigError("exhaustive search needs n_mu <= 20")

    @property
    def sweep_column(self) -> str:
        return EXPERIMENTS[self.experiment][0]

    @property
    def options(self) -> SolveOptions:
        return SolveOptions(enforce_c1=self.enforce_c1, enforce_c4=self.enforce_c4)


def _bool(key: str, v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {v!r}")


def config_from_kv(kv: dict[str, str]) -> ExperimentConfig:
    """Build a config from parsed ``key = value`` pairs (same format as scenario files)."""
    if "experiment" not in kv:
        raise ConfigError("experiment: missing")
    args: dict = {"experiment": kv["experiment"].strip()}
    table: dict = {}
    try:
        for key, raw in kv.items():
            if key == "experiment":
                continue
            if key == "values":
                args["values"] = tuple(parse_floats(key, raw))
            elif key in ("drops", "seed"):
                args[key] = int(raw)
            elif key == "schemes":
                args["schemes"] = tuple(x.strip() for x in raw.split(",") if x.strip())
            elif key in ("enforce_c1", "enforce_c4"):
                args[key] = _bool(key, raw)
            elif key == "out":
                args["out"] = raw.strip()
            elif key in _OVERRIDES:
                name, conv = _OVERRIDES[key]
                if name in table:
                    raise ConfigError(f"{key}: {name} given more than once")
                table[name] = conv(raw)
            else:
                raise ConfigError(f"{key}: unknown key")
        args["table"] = SystemDefaults(**table)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(**args)


def load_config(path: str | Path) -> ExperimentConfig:
    return config_from_kv(parse_kv(Path(path).read_text()))


@dataclass(frozen=True)
class SweepRow:
    value: float
    scheme: str
    ee: float  # bit/J, nan if no drop was feasible
    rate: float  # bit/s
    selected: float  # mean number of offloaded MUs
    feasible_fraction: float
    mc_power_saved: float | None = None  # W; distance experiment only


def drop_seed(seed: int, index: int) -> list[int]:
    return [int(seed), int(index)]


def mc_power_saved(distances: Sequence[float], r_mc: float, w_mc: float,
                   params: ChannelParams = MC_LINK, rng: np.random.Generator | None = None,
                   n0: float = SystemDefaults().n0_w_per_hz) -> float:
    """Transmit power the MC would spend serving these MUs itself.

    One MC->MU gain is drawn per distance (in order) from ``rng``; each MU
    needs ``mu_power_for_rate(w_mc, r_mc, gain, n0)`` over its full band.
    """
    if rng is None:
        rng = make_rng(0)
    total = 0.0
    for d in distances:
        if not d > 0:
            raise ValueError(f"distance must be > 0, got {d!r}")
        total += mu_power_for_rate(w_mc, r_mc, draw_channel_gain(d, params, rng), n0)
    return total


def _scenario_for(cfg: ExperimentConfig, value: float, index: int) -> Scenario:
    table, pinned = cfg.table, None
    if cfg.experiment == EE_VS_PMAX:
        table = replace(table, p_max_dbm=value)
    elif cfg.experiment == EE_VS_PC:
        table = replace(table, p_c_w=value)
    elif cfg.experiment == EE_VS_WMC:
        table = replace(table, w_mc_hz=1e3 * value)
    elif cfg.experiment == EE_VS_DISTANCE:
        pinned = [_sc_distance(cfg, value)] * table.n_mu
    seed = int(value) if cfg.experiment == SINGLE_DROP else cfg.seed
    return generate_drop(cfg.geometry, cfg.channel, table, drop_seed(seed, index), pinned)


def _sc_distance(cfg: ExperimentConfig, d_mc: float) -> float:
    # MUs sit on the MC->SC axis, d_mc from the MC BS
    return max(abs(cfg.geometry.mc_sc_distance - d_mc), cfg.geometry.mu_dist_min)


def _serve_all(s: Scenario, scheme: str, opts: SolveOptions) -> SelectionResult:
    """Distance experiment: every MU is offloaded, no selection."""
    if scheme == NON_SPT:
        res = solve((), s, opts.replace(objective=ENERGY_EFFICIENCY))
    elif scheme == THROUGHPUT_SCHEME:
        res = solve(range(s.K), s, opts.replace(objective=THROUGHPUT))
    else:
        res = solve(range(s.K), s, opts.replace(objective=ENERGY_EFFICIENCY))
    return SelectionResult(scheme, res.selected if res.feasible else (), res, [res.ee])


@dataclass
class _Acc:
    ee: list[float] = field(default_factory=list)
    rate: list[float] = field(default_factory=list)
    count: list[float] = field(default_factory=list)
    saved: list[float] = field(default_factory=list)
    feasible: int = 0


def _mean(xs: list[float]) -> float:
    return math.fsum(xs) / len(xs) if xs else math.nan


def iter_experiment(cfg: ExperimentConfig) -> Iterator[list[SweepRow]]:
    """Yield the rows of one sweep point at a time (in sweep order)."""
    opts = cfg.options
    n_drops = 1 if cfg.experiment == SINGLE_DROP else cfg.drops
    distance = cfg.experiment == EE_VS_DISTANCE
    for value in cfg.values:
        acc = {sch: _Acc() for sch in cfg.schemes}
        for i in range(n_drops):
            s = _scenario_for(cfg, value, i)
            for sch in cfg.schemes:
                sel = _serve_all(s, sch, opts) if distance else run_scheme(s, sch, opts)
                if not sel.feasible:
                    continue
                a = acc[sch]
                a.feasible += 1
                a.ee.append(sel.ee)
                a.rate.append(sel.final.r_total)
                a.count.append(float(len(sel.chosen)))
                if distance:
                    rng = make_rng(drop_seed(cfg.seed, i) + [1])
                    d = [value] * len(sel.chosen)
                    a.saved.append(mc_power_saved(d, cfg.table.r_mc_bps, cfg.table.w_mc_hz,
                                                  cfg.mc_channel, rng, cfg.table.n0_w_per_hz))
        yield [SweepRow(value, sch, _mean(a.ee), _mean(a.rate), _mean(a.count),
                        a.feasible / n_drops, _mean(a.saved) if distance else None)
               for sch, a in acc.items()]


def run_experiment(cfg: ExperimentConfig) -> list[SweepRow]:
    return [row for point in iter_experiment(cfg) for row in point]


def _fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".10g")


def csv_lines(rows: Iterable[SweepRow], sweep_column: str) -> list[list[str]]:
    out = [[sweep_column, *CSV_COLUMNS]]
    for r in rows:
        out.append([_fmt(r.value), r.scheme, _fmt(r.ee), _fmt(r.rate), _fmt(r.selected),
                    _fmt(r.feasible_fraction), _fmt(r.mc_power_saved)])
    return out


def write_csv(rows: Iterable[SweepRow], path: str | Path, sweep_column: str = "value") -> None:
    """Header plus one line per (sweep value, scheme); floats with 10 significant digits.

    Undefined means (no feasible drop, or no MC saving for this experiment)
    are left blank.
    """
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(csv_lines(rows, sweep_column))
