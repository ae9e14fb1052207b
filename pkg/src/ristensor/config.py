"""Scenario configuration: physical and dimensional parameters of the setup.

Defaults reproduce the reference simulation scenario (28 GHz carrier,
half-wavelength RIS spacing, 120 kHz subcarrier spacing, 16 subcarriers,
64 OFDM symbols, 10 m / 5 m link distances, 2 m^2 radar cross section).
The antenna count ``L`` and block count ``K`` are free choices of the
operator; the defaults pick L = 2 and K = N^2 so the full-size scenario is
identifiable out of the box.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

SPEED_OF_LIGHT = 3.0e8  # m/s, matches the 15 m round trip -> 100 ns convention

#: accepted spellings for config-file keys that carry symbols
_KEY_ALIASES = {
    "Δf": "delta_f",
    "λ": "wavelength",
    "σ_RCS": "sigma_rcs",
}

_COUNT_FIELDS = ("L", "N_y", "N_z", "Q", "M", "K")


@dataclass
class ScenarioConfig:
    """All physical and dimensional parameters of one sensing scenario.

    Attributes
    ----------
    L : int
        Number of base-station antennas.
    N_y, N_z : int
        RIS grid size; the surface has ``N = N_y * N_z`` elements.
    Q, M, K : int
        Subcarriers, OFDM symbols per block, and number of blocks.
    delta_f : float
        Subcarrier spacing in Hz.
    T_s : float
        Symbol duration in seconds; must equal ``1 / delta_f``.
    wavelength : float
        Carrier wavelength in metres.
    d1, d2 : float
        BS-RIS and RIS-target distances in metres.
    P_t, G1, G2 : float
        Transmit power (W) and BS transmit/receive antenna gains (linear).
    F1sq, F2sq : float
        Normalized RIS power radiation pattern values (linear, in (0, 1]).
    d_x, d_y : float
        RIS element spacings in metres (default: half wavelength).
    sigma_rcs : float
        Target radar cross section in m^2.
    codebook : str
        RIS phase-shift design used by the simulator, ``"random"`` or
        ``"dft"``.  The random design keeps the angular part of the model
        identifiable; see :func:`ristensor.signal_model.build_dft_codebook`.
    """

    L: int = 2
    N_y: int = 4
    N_z: int = 4
    Q: int = 16
    M: int = 64
    K: int = 256
    delta_f: float = 120e3
    T_s: float | None = None
    wavelength: float = 1.07e-2
    d1: float = 10.0
    d2: float = 5.0
    P_t: float = 1.0
    G1: float = 1.0
    G2: float = 1.0
    F1sq: float = 1.0
    F2sq: float = 1.0
    d_x: float | None = None
    d_y: float | None = None
    sigma_rcs: float = 2.0
    codebook: str = "random"

    def __post_init__(self):
        if self.T_s is None:
            self.T_s = 1.0 / self.delta_f
        if self.d_x is None:
            self.d_x = self.wavelength / 2.0
        if self.d_y is None:
            self.d_y = self.wavelength / 2.0
        self.validate()

    @property
    def N(self) -> int:
        return self.N_y * self.N_z

    def validate(self) -> None:
        for name in _COUNT_FIELDS:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("delta_f", "T_s", "wavelength", "d1", "d2", "P_t", "G1", "G2",
                     "F1sq", "F2sq", "d_x", "d_y", "sigma_rcs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if abs(self.T_s * self.delta_f - 1.0) > 1e-12:
            raise ValueError("T_s must equal 1/delta_f")
        for name in ("F1sq", "F2sq"):
            if getattr(self, name) > 1.0:
                raise ValueError(f"{name} is a normalized power pattern, must be <= 1")
        if self.codebook not in ("random", "dft"):
            raise ValueError(f"codebook must be 'random' or 'dft', got {self.codebook!r}")

    def replace(self, **changes) -> "ScenarioConfig":
        """Return a copy with some fields changed (re-validated)."""
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def small_config(**overrides) -> ScenarioConfig:
    """Desk-scale scenario used by tests and demos: N = 4, K = N^2.

    Keeps every identifiability bound satisfied while remaining fast.
    """
    base = dict(L=2, N_y=2, N_z=2, Q=8, M=8, K=16)
    base.update(overrides)
    return ScenarioConfig(**base)


def default_delay(cfg: ScenarioConfig) -> float:
    """Round-trip propagation delay over the BS-RIS-target-RIS-BS path."""
    return 2.0 * (cfg.d1 + cfg.d2) / SPEED_OF_LIGHT


def _coerce(name: str, raw: str):
    if name in _COUNT_FIELDS:
        return int(raw)
    if name == "codebook":
        return raw
    return float(raw)


def parse_overrides(pairs: list[str]) -> dict:
    """Parse ``key=value`` strings; unknown keys are rejected up front."""
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"override {pair!r} is not of the form key=value")
        key, raw = (s.strip() for s in pair.split("=", 1))
        key = _KEY_ALIASES.get(key, key)
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def load_config(path: str, overrides: list[str] | None = None) -> ScenarioConfig:
    """Load a flat key-value config file (``key = value`` per line, # comments).

    Values from ``overrides`` (``key=value`` strings) take precedence over
    the file, which takes precedence over the built-in defaults.
    """
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else (":" if ":" in line else None)
            if sep is None:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, raw = (s.strip() for s in line.split(sep, 1))
            key = _KEY_ALIASES.get(key, key)
            if key not in {f.name for f in dataclasses.fields(ScenarioConfig)}:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    if overrides:
        values.update(parse_overrides(overrides))
    return ScenarioConfig(**values)
