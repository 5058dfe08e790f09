"""Network drops: data model, channel model, seeded generation and file I/O.

Everything inside a :class:`Scenario` is SI-linear (Hz, W, bit/s, linear
power gains). dB/dBm only appear in :class:`ChannelParams`, the defaults
table and the text file format.

Random numbers come from numpy's PCG64 generator seeded through
``numpy.random.SeedSequence(seed)`` where ``seed`` is an int or a sequence
of ints (the sweep harness uses ``[master_seed, drop_index]``). Draw order
for one drop: MU distances, SU radii, then per-link shadowing and fading
for ``h`` (MU order), ``g`` (SU order), ``g_cross`` (row-major, MU by SU).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class ScenarioError(ValueError):
    """Validation or parse failure; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def w_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """One network drop as seen by the small-cell base station.

    ``w_mc[k]``/``b_sc[n]`` are the licensed bandwidths of MU k / SU n,
    ``h[k]`` the SC-to-MU gain, ``g[n]`` the SC-to-SU gain on the SU's own
    band and ``g_cross[k, n]`` the SC-to-SU-n gain on MU k's band.
    """

    w_mc: np.ndarray
    b_sc: np.ndarray
    r_mc: np.ndarray
    r_sc_min: float
    p_max: float
    p_c: float
    xi: float
    n0: float
    h: np.ndarray
    g: np.ndarray
    g_cross: np.ndarray

    def __post_init__(self):
        for name in ("w_mc", "b_sc", "r_mc", "h", "g"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1))
        gc = np.array(self.g_cross, dtype=float)
        if gc.size == 0:
            gc = gc.reshape(len(self.w_mc), len(self.b_sc))
        object.__setattr__(self, "g_cross", _frozen(gc, 2))
        for name in ("r_sc_min", "p_max", "p_c", "xi", "n0"):
            object.__setattr__(self, name, float(getattr(self, name)))
        self.validate()

    @property
    def K(self) -> int:
        return self.w_mc.size

    @property
    def N(self) -> int:
        return self.b_sc.size

    def validate(self) -> None:
        K, N = self.K, self.N
        if N < 1:
            raise ScenarioError("b_sc", "at least one SU is required")
        for name, size in (("r_mc", K), ("h", K), ("g", N)):
            if getattr(self, name).size != size:
                raise ScenarioError(name, f"expected {size} entries, got {getattr(self, name).size}")
        if self.g_cross.shape != (K, N):
            raise ScenarioError("g_cross", f"expected shape {(K, N)}, got {self.g_cross.shape}")
        for name in ("w_mc", "b_sc", "r_mc", "h", "g", "g_cross"):
            arr = getattr(self, name)
            if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
                raise ScenarioError(name, "all entries must be finite and > 0")
        for name in ("p_c", "n0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ScenarioError(name, f"must be finite and > 0, got {v!r}")
        # a silent SC (p_max = 0) is a legal, if degenerate, configuration
        if not (math.isfinite(self.p_max) and self.p_max >= 0):
            raise ScenarioError("p_max", f"must be finite and >= 0, got {self.p_max!r}")
        if not (math.isfinite(self.r_sc_min) and self.r_sc_min >= 0):
            raise ScenarioError("r_sc_min", f"must be >= 0, got {self.r_sc_min!r}")
        if not (0.0 < self.xi <= 1.0):
            raise ScenarioError("xi", f"must lie in (0, 1], got {self.xi!r}")

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return all(np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self))

    @property
    def best_su(self) -> np.ndarray:
        """Index of the SU with the largest gain on each MU's band (lowest index on ties)."""
        if self.K == 0:
            return np.zeros(0, dtype=int)
        return np.argmax(self.g_cross, axis=1)


# ---------------------------------------------------------------------------
# Channel model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelParams:
    pathloss_a: float = 128.1  # dB at 1 km
    pathloss_b: float = 37.6  # dB per decade
    shadowing_sigma: float = 8.0  # dB
    penetration_loss: float = 20.0  # dB
    fading: bool = True  # Rayleigh

    def __post_init__(self):
        for name in ("pathloss_a", "pathloss_b", "shadowing_sigma", "penetration_loss"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class DropGeometry:
    sc_radius: float = 50.0
    mu_dist_min: float = 20.0
    mu_dist_max: float = 200.0
    mc_sc_distance: float = 500.0
    # keeps SUs off the pole of the path-loss law
    su_dist_min: float = 1.0

    def __post_init__(self):
        if not 0 < self.mu_dist_min < self.mu_dist_max:
            raise ValueError("need 0 < mu_dist_min < mu_dist_max")
        if not 0 < self.su_dist_min < self.sc_radius:
            raise ValueError("need 0 < su_dist_min < sc_radius")
        if self.mc_sc_distance <= 0:
            raise ValueError("mc_sc_distance must be > 0")


@dataclass(frozen=True)
class SystemDefaults:
    """Default system parameters of the simulation table."""

    n_mu: int = 5
    n_su: int = 5
    p_max_dbm: float = 30.0
    w_mc_hz: float = 360e3
    b_sc_hz: float = 180e3
    p_c_w: float = 2.0
    n0_dbm_per_hz: float = -174.0
    xi: float = 0.38
    r_sc_min_bps: float = 1000e3
    r_mc_bps: float = 700e3

    @property
    def n0_w_per_hz(self) -> float:
        return dbm_to_w(self.n0_dbm_per_hz)


def pathloss_db(d: float, p: ChannelParams = ChannelParams()) -> float:
    """Distance-dependent path loss ``a + b*log10(d/1000)`` in dB, ``d`` in metres."""
    if not d > 0:
        raise ValueError(f"distance must be > 0, got {d!r}")
    return p.pathloss_a + p.pathloss_b * math.log10(d / 1000.0)


def draw_channel_gain(d: float, p: ChannelParams, rng: np.random.Generator) -> float:
    """Linear power gain: path loss, lognormal shadowing, penetration, Rayleigh."""
    shadow = rng.normal(0.0, p.shadowing_sigma) if p.shadowing_sigma > 0 else 0.0
    fade = rng.exponential(1.0) if p.fading else 1.0
    loss_db = pathloss_db(d, p) + shadow + p.penetration_loss
    return 10.0 ** (-loss_db / 10.0) * fade


def make_rng(seed: int | Sequence[int]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def generate_drop(geom: DropGeometry = DropGeometry(), params: ChannelParams = ChannelParams(),
                  table: SystemDefaults = SystemDefaults(), seed: int | Sequence[int] = 0,
                  mu_distances: Sequence[float] | None = None) -> Scenario:
    """Random drop: MUs uniform in distance on [mu_dist_min, mu_dist_max],
    SUs uniform over the SC disc area (annulus from ``su_dist_min``).

    ``mu_distances`` pins the SC-to-MU distances (the draws are still made so
    the stream stays aligned with an unpinned drop of the same seed).
    """
    rng = make_rng(seed)
    K, N = table.n_mu, table.n_su
    d_mu = rng.uniform(geom.mu_dist_min, geom.mu_dist_max, size=K)
    u = rng.uniform(0.0, 1.0, size=N)
    d_su = np.sqrt(geom.su_dist_min ** 2 + u * (geom.sc_radius ** 2 - geom.su_dist_min ** 2))
    if mu_distances is not None:
        d_mu = np.broadcast_to(np.asarray(mu_distances, dtype=float), (K,)).copy()
    h = [draw_channel_gain(d, params, rng) for d in d_mu]
    g = [draw_channel_gain(d, params, rng) for d in d_su]
    g_cross = [[draw_channel_gain(d_su[n], params, rng) for n in range(N)] for _ in range(K)]
    return Scenario(
        w_mc=np.full(K, table.w_mc_hz), b_sc=np.full(N, table.b_sc_hz),
        r_mc=np.full(K, table.r_mc_bps), r_sc_min=table.r_sc_min_bps,
        p_max=dbm_to_w(table.p_max_dbm), p_c=table.p_c_w, xi=table.xi,
        n0=table.n0_w_per_hz, h=h, g=g, g_cross=np.array(g_cross).reshape(K, N),
    )


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------
#
#   # comment
#   key = value
#   key = v1, v2, v3          (array)
#   key = a, b; c, d          (matrix, rows split on ';')
#
# Scenario keys (SI unless the suffix says otherwise):
#   k, n                                    counts (optional, checked)
#   w_mc_hz | w_mc_khz                      per-MU licensed bandwidth
#   b_sc_hz | b_sc_khz                      per-SU licensed bandwidth
#   r_mc_bps | r_mc_kbps                    per-MU minimum rate
#   r_sc_min_bps | r_sc_min_kbps            SC minimum system rate
#   p_max_w | p_max_dbm                     SC transmit power budget
#   p_c_w                                   static circuit power
#   xi                                      amplifier efficiency in (0, 1]
#   n0_w_per_hz | n0_dbm_per_hz             noise spectral density
#   h_linear | h_db                         SC->MU gains
#   g_linear | g_db                         SC->SU gains, own band
#   g_cross_linear | g_cross_db             SC->SU gains on MU bands, K rows
# Per-user arrays given as a single value are broadcast over k / n.

def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key in out:
            raise ScenarioError(key, "duplicate key")
        out[key] = value
    return out


def parse_floats(key: str, value: str) -> list[float]:
    if value.strip() == "":
        return []
    try:
        return [float(v) for v in value.replace(";", ",").split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ScenarioError(key, f"not a number list: {value!r}") from exc


def _parse_matrix(key: str, value: str) -> list[list[float]]:
    return [parse_floats(key, row) for row in value.split(";") if row.strip()]


_UNIT_KEYS: Mapping[str, tuple[tuple[str, object], ...]] = {
    "w_mc": (("w_mc_hz", None), ("w_mc_khz", 1e3)),
    "b_sc": (("b_sc_hz", None), ("b_sc_khz", 1e3)),
    "r_mc": (("r_mc_bps", None), ("r_mc_kbps", 1e3)),
    "r_sc_min": (("r_sc_min_bps", None), ("r_sc_min_kbps", 1e3)),
    "p_max": (("p_max_w", None), ("p_max_dbm", "dbm")),
    "p_c": (("p_c_w", None),),
    "xi": (("xi", None),),
    "n0": (("n0_w_per_hz", None), ("n0_dbm_per_hz", "dbm")),
    "h": (("h_linear", None), ("h_db", "db")),
    "g": (("g_linear", None), ("g_db", "db")),
    "g_cross": (("g_cross_linear", None), ("g_cross_db", "db")),
}
_SCALARS = {"r_sc_min", "p_max", "p_c", "xi", "n0"}


def _convert(vals, unit):
    a = np.asarray(vals, dtype=float)
    if unit is None:
        return a
    if unit == "dbm":
        return 10.0 ** ((a - 30.0) / 10.0)
    if unit == "db":
        return 10.0 ** (a / 10.0)
    return a * unit


def scenario_from_kv(kv: Mapping[str, str]) -> Scenario:
    known = {"k", "n"} | {key for alts in _UNIT_KEYS.values() for key, _ in alts}
    for key in kv:
        if key not in known:
            raise ScenarioError(key, "unknown key")
    counts = {}
    for c in ("k", "n"):
        if c in kv:
            try:
                counts[c] = int(kv[c])
            except ValueError as exc:
                raise ScenarioError(c, f"not an integer: {kv[c]!r}") from exc
    values = {}
    for name, alts in _UNIT_KEYS.items():
        present = [(key, unit) for key, unit in alts if key in kv]
        if not present:
            if name == "g_cross" and counts.get("k") == 0:
                values[name] = np.zeros((0, counts.get("n", 0)))
                continue
            raise ScenarioError(name, f"missing (one of {', '.join(k for k, _ in alts)})")
        if len(present) > 1:
            raise ScenarioError(name, "given in more than one unit")
        key, unit = present[0]
        if name == "g_cross":
            rows = _parse_matrix(key, kv[key])
            if rows and len({len(r) for r in rows}) != 1:
                raise ScenarioError("g_cross", "rows have different lengths")
            values[name] = _convert(rows, unit)
        else:
            vals = parse_floats(key, kv[key])
            if name in _SCALARS:
                if len(vals) != 1:
                    raise ScenarioError(name, f"expected a single value, got {len(vals)}")
                values[name] = float(_convert(vals[0], unit))
            else:
                values[name] = _convert(vals, unit)
    for name, count in (("w_mc", "k"), ("r_mc", "k"), ("h", "k"), ("b_sc", "n"), ("g", "n")):
        if count in counts:
            arr = values[name]
            if arr.size == 1 and counts[count] != 1:
                values[name] = np.full(counts[count], float(arr[0]))
            elif arr.size != counts[count]:
                raise ScenarioError(name, f"expected {counts[count]} entries, got {arr.size}")
    return Scenario(**values)


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    return scenario_from_kv(parse_kv(text))


def _fmt(values) -> str:
    return ", ".join(repr(float(v)) for v in np.ravel(values))


def format_scenario(s: Scenario) -> str:
    """Text form using SI keys; floats written with ``repr`` so a reload is exact."""
    lines = [
        "# small-cell drop (SI units)",
        f"k = {s.K}",
        f"n = {s.N}",
        f"w_mc_hz = {_fmt(s.w_mc)}",
        f"b_sc_hz = {_fmt(s.b_sc)}",
        f"r_mc_bps = {_fmt(s.r_mc)}",
        f"r_sc_min_bps = {s.r_sc_min!r}",
        f"p_max_w = {s.p_max!r}",
        f"p_c_w = {s.p_c!r}",
        f"xi = {s.xi!r}",
        f"n0_w_per_hz = {s.n0!r}",
        f"h_linear = {_fmt(s.h)}",
        f"g_linear = {_fmt(s.g)}",
        "g_cross_linear = " + "; ".join(_fmt(row) for row in s.g_cross),
    ]
    return "\n".join(lines) + "\n"


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(format_scenario(s))
