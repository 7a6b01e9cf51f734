"""Synthetic multipath scenes: ground-truth channels, noisy pilots, and scenario scripts.

The propagation model is deliberately simple (line of sight plus single-bounce
specular scatterer paths with free-space amplitude) but produces spatially
correlated channel structure for the estimator and precoder to work against.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .binio import CHANNEL_MAGIC, read_blob, write_blob
from .errors import ConfigurationError, DegenerateInputError

SCENARIO_LABELS = ("indoor", "UMi-compact", "UMi-dense", "UMi-standard", "UMa")


@dataclass
class AntennaArray:
    """Uniform linear array along ``axis``, centered on the node position."""

    num_elements: int = 1
    spacing: Optional[float] = None  # meters; None means half a wavelength
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def element_offsets(self, wavelength: float) -> np.ndarray:
        spacing = self.spacing if self.spacing is not None else wavelength / 2.0
        axis = np.asarray(self.axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ConfigurationError("antenna axis must be nonzero")
        axis = axis / norm
        k = np.arange(self.num_elements, dtype=float) - (self.num_elements - 1) / 2.0
        return np.outer(k * spacing, axis)


@dataclass
class SceneConfig:
    wavelength: float = 1.0
    diameter: float = 10.0
    num_scatterers: int = 8
    tx_array: AntennaArray = field(default_factory=AntennaArray)
    rx_array: AntennaArray = field(default_factory=AntennaArray)
    noise_floor: float = 1e-9  # watts, shared with the precoder noise covariance
    rng_seed: int = 0
    scatterer_positions: Optional[np.ndarray] = None  # (n, 3) meters
    scatterer_gains: Optional[np.ndarray] = None  # (n,) complex
    include_los: bool = True
    label: str = "custom"

    def validate(self) -> None:
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ConfigurationError(f"wavelength must be positive, got {self.wavelength}")
        if not (self.diameter > 0 and math.isfinite(self.diameter)):
            raise ConfigurationError(f"scene diameter must be positive, got {self.diameter}")
        if self.num_scatterers < 0:
            raise ConfigurationError("num_scatterers must be >= 0")
        if self.tx_array.num_elements < 1 or self.rx_array.num_elements < 1:
            raise ConfigurationError("antenna arrays need at least one element")
        if not (self.noise_floor > 0):
            raise ConfigurationError("noise floor must be positive")
        if self.scatterer_positions is not None:
            pos = np.asarray(self.scatterer_positions, dtype=float)
            if pos.shape != (self.num_scatterers, 3):
                raise ConfigurationError(
                    f"scatterer_positions shape {pos.shape} != ({self.num_scatterers}, 3)"
                )
            if not np.all(np.isfinite(pos)):
                raise ConfigurationError("scatterer positions must be finite")
        if self.scatterer_gains is not None:
            gains = np.asarray(self.scatterer_gains, dtype=complex)
            if gains.shape != (self.num_scatterers,):
                raise ConfigurationError("scatterer_gains length must match num_scatterers")
            if not np.all(np.isfinite(gains)):
                raise ConfigurationError("scatterer gains must be finite")


@dataclass
class LinkGeometry:
    p_tx: np.ndarray
    p_rx: np.ndarray

    def __post_init__(self):
        self.p_tx = np.asarray(self.p_tx, dtype=float).reshape(3)
        self.p_rx = np.asarray(self.p_rx, dtype=float).reshape(3)
        if np.allclose(self.p_tx, self.p_rx):
            raise DegenerateInputError("transmitter and receiver positions coincide")


@dataclass
class ChannelMatrix:
    """Complex transfer matrix with optional slot/user/tone metadata.

    Shape convention here is (N_t, N_r); the precoder module uses its own
    (L_y, L_x) receive-major convention and transposes at the boundary.
    """

    entries: np.ndarray
    t: Optional[int] = None
    user: Optional[int] = None
    tone: Optional[int] = None

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2:
            raise ConfigurationError(f"channel matrix must be 2-D, got shape {self.entries.shape}")
        if not np.all(np.isfinite(self.entries)):
            raise ConfigurationError("channel matrix entries must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))


def as_entries(h) -> np.ndarray:
    """Accept a ChannelMatrix or a bare array and return the complex ndarray."""
    if isinstance(h, ChannelMatrix):
        return h.entries
    return np.asarray(h, dtype=complex)


@dataclass
class Scene:
    config: SceneConfig
    scatterer_positions: np.ndarray  # (n, 3)
    scatterer_gains: np.ndarray  # (n,) complex

    @property
    def wavelength(self) -> float:
        return self.config.wavelength

    @property
    def n_tx(self) -> int:
        return self.config.tx_array.num_elements

    @property
    def n_rx(self) -> int:
        return self.config.rx_array.num_elements

    def contains(self, point: np.ndarray) -> bool:
        return float(np.linalg.norm(np.asarray(point, dtype=float))) <= self.config.diameter / 2 + 1e-9


def generate_scene(config: SceneConfig) -> Scene:
    """Place scatterers deterministically from the config seed.

    Positions are drawn uniformly inside the scene ball unless given
    explicitly; gains get a random phase and a mild amplitude spread.
    """
    config.validate()
    rng = np.random.default_rng(config.rng_seed)
    n = config.num_scatterers
    if config.scatterer_positions is not None:
        positions = np.asarray(config.scatterer_positions, dtype=float).reshape(n, 3)
    else:
        radius = config.diameter / 2.0
        positions = np.empty((n, 3))
        count = 0
        while count < n:
            cand = rng.uniform(-radius, radius, size=(max(n - count, 1), 3))
            keep = cand[np.linalg.norm(cand, axis=1) <= radius]
            take = min(len(keep), n - count)
            positions[count : count + take] = keep[:take]
            count += take
    if config.scatterer_gains is not None:
        gains = np.asarray(config.scatterer_gains, dtype=complex).reshape(n)
    else:
        amp = rng.uniform(0.4, 1.0, size=n)
        phase = rng.uniform(0.0, 2 * np.pi, size=n)
        gains = amp * np.exp(1j * phase)
    return Scene(config=config, scatterer_positions=positions, scatterer_gains=gains)


def _steering(offsets: np.ndarray, direction: np.ndarray, wavelength: float) -> np.ndarray:
    # phase advance of each element relative to the array center, toward `direction`
    return np.exp(1j * 2 * np.pi / wavelength * offsets @ direction)


def ground_truth_channel(scene: Scene, link: LinkGeometry, t: Optional[int] = None) -> ChannelMatrix:
    """Deterministic N_t x N_r channel: LOS plus one bounce per scatterer.

    Each path contributes gain * (lambda / 4 pi d) * exp(-j 2 pi d / lambda)
    times the outer product of TX/RX steering responses.
    """
    cfg = scene.config
    lam = cfg.wavelength
    tx_off = cfg.tx_array.element_offsets(lam)
    rx_off = cfg.rx_array.element_offsets(lam)
    h = np.zeros((scene.n_tx, scene.n_rx), dtype=complex)

    def add_path(gain: complex, d_total: float, dep_dir: np.ndarray, arr_dir: np.ndarray):
        if d_total <= 0:
            raise DegenerateInputError("zero-length propagation path")
        amp = gain * lam / (4 * np.pi * d_total) * np.exp(-2j * np.pi * d_total / lam)
        a_tx = _steering(tx_off, dep_dir, lam)
        a_rx = _steering(rx_off, arr_dir, lam)
        h_local = amp * np.outer(a_tx, a_rx)
        return h_local

    if cfg.include_los:
        delta = link.p_rx - link.p_tx
        d = float(np.linalg.norm(delta))
        if d == 0:
            raise DegenerateInputError("LOS path has zero length")
        u = delta / d
        h = h + add_path(1.0, d, u, -u)
    for pos, gain in zip(scene.scatterer_positions, scene.scatterer_gains):
        v1 = pos - link.p_tx
        v2 = pos - link.p_rx
        d1 = float(np.linalg.norm(v1))
        d2 = float(np.linalg.norm(v2))
        if d1 == 0 or d2 == 0:
            raise DegenerateInputError("scatterer coincides with a terminal")
        h = h + add_path(complex(gain), d1 + d2, v1 / d1, v2 / d2)
    return ChannelMatrix(entries=h, t=t)


def measure_channel(
    scene: Scene,
    link: LinkGeometry,
    snr_db: Optional[float],
    rng: np.random.Generator,
    h_gt: Optional[ChannelMatrix] = None,
) -> ChannelMatrix:
    """Noisy pilot measurement of the ground-truth channel.

    Complex Gaussian noise is scaled so the expected noise energy sits
    ``snr_db`` below the instantaneous channel energy. ``snr_db`` of None or
    +inf returns the exact channel.
    """
    if h_gt is None:
        h_gt = ground_truth_channel(scene, link)
    h = as_entries(h_gt)
    if snr_db is None or math.isinf(snr_db):
        return ChannelMatrix(entries=h.copy(), t=h_gt.t if isinstance(h_gt, ChannelMatrix) else None)
    if not math.isfinite(snr_db):
        raise ConfigurationError("snr_db must be finite or +inf")
    energy = float(np.sum(np.abs(h) ** 2))
    per_entry_var = energy * 10.0 ** (-snr_db / 10.0) / h.size
    noise = np.sqrt(per_entry_var / 2.0) * (
        rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    )
    return ChannelMatrix(entries=h + noise, t=h_gt.t if isinstance(h_gt, ChannelMatrix) else None)


# ---------------------------------------------------------------------------
# scenario scripting


@dataclass
class ScriptSegment:
    duration: int
    scene_config: SceneConfig
    label: str
    snr_start_db: float = 20.0
    snr_end_db: Optional[float] = None  # None -> constant at snr_start_db
    tx_position: tuple[float, float, float] = (0.0, 0.0, 3.0)
    rx_start: tuple[float, float, float] = (2.0, 0.0, 1.5)
    rx_end: tuple[float, float, float] = (3.0, 2.0, 1.5)
    fade_every: int = 0  # every k-th slot gets a deep fade (0 disables)
    fade_depth_db: float = 0.0

    def validate(self) -> None:
        if self.duration < 1:
            raise ConfigurationError("segment duration must be >= 1 slot")
        if self.label not in SCENARIO_LABELS:
            raise ConfigurationError(f"label {self.label!r} not in {SCENARIO_LABELS}")
        for v in (self.snr_start_db, self.snr_end_db if self.snr_end_db is not None else 0.0):
            if not math.isfinite(v):
                raise ConfigurationError("SNR schedule values must be finite")
        self.scene_config.validate()


@dataclass
class ScenarioScript:
    segments: list[ScriptSegment]

    def validate(self) -> None:
        for seg in self.segments:
            seg.validate()

    @property
    def total_slots(self) -> int:
        return sum(seg.duration for seg in self.segments)


@dataclass
class SlotSample:
    t: int
    scenario_label: str
    link: LinkGeometry
    channel: ChannelMatrix
    snr_db: float


@dataclass
class HandoverMarker:
    t: int  # slot index of the first slot after the handover
    from_label: str
    to_label: str


def play_script(script: ScenarioScript) -> Iterator[SlotSample | HandoverMarker]:
    """Stream one SlotSample per slot, with a HandoverMarker between segments."""
    script.validate()
    t = 0
    prev_label = None
    for seg in script.segments:
        if prev_label is not None:
            yield HandoverMarker(t=t, from_label=prev_label, to_label=seg.label)
        scene = generate_scene(seg.scene_config)
        rx_start = np.asarray(seg.rx_start, dtype=float)
        rx_end = np.asarray(seg.rx_end, dtype=float)
        snr_end = seg.snr_end_db if seg.snr_end_db is not None else seg.snr_start_db
        for k in range(seg.duration):
            frac = k / max(seg.duration - 1, 1)
            p_rx = rx_start + frac * (rx_end - rx_start)
            snr = seg.snr_start_db + frac * (snr_end - seg.snr_start_db)
            if seg.fade_every > 0 and k % seg.fade_every == seg.fade_every - 1:
                snr -= seg.fade_depth_db
            link = LinkGeometry(p_tx=np.asarray(seg.tx_position, dtype=float), p_rx=p_rx)
            h = ground_truth_channel(scene, link, t=t)
            yield SlotSample(t=t, scenario_label=seg.label, link=link, channel=h, snr_db=float(snr))
            t += 1
        prev_label = seg.label


# ---------------------------------------------------------------------------
# presets and JSON config files

_PRESETS = {
    "indoor": dict(wavelength=1.0, diameter=10.0, num_scatterers=12, noise_floor=1e-9),
    "UMi-compact": dict(wavelength=2.0, diameter=60.0, num_scatterers=6, noise_floor=1e-9),
    "UMi-dense": dict(wavelength=2.0, diameter=100.0, num_scatterers=16, noise_floor=1e-9),
    "UMi-standard": dict(wavelength=2.0, diameter=100.0, num_scatterers=8, noise_floor=1e-9),
    "UMa": dict(wavelength=4.0, diameter=500.0, num_scatterers=4, noise_floor=1e-9),
}


def scene_preset(label: str, rng_seed: int = 0, **overrides) -> SceneConfig:
    """Named scene configuration. Numeric values are desk-scale stand-ins,
    chosen so the sample densities used in tests resolve the field; they are
    not calibrated link budgets."""
    if label not in _PRESETS:
        raise ConfigurationError(f"unknown preset {label!r}; choose from {sorted(_PRESETS)}")
    params = dict(_PRESETS[label])
    params.update(overrides)
    return SceneConfig(label=label, rng_seed=rng_seed, **params)


def _array_to_dict(arr: AntennaArray) -> dict:
    return {"num_elements": arr.num_elements, "spacing": arr.spacing, "axis": list(arr.axis)}


def scene_config_to_dict(cfg: SceneConfig) -> dict:
    d = {
        "wavelength": cfg.wavelength,
        "diameter": cfg.diameter,
        "num_scatterers": cfg.num_scatterers,
        "tx_array": _array_to_dict(cfg.tx_array),
        "rx_array": _array_to_dict(cfg.rx_array),
        "noise_floor": cfg.noise_floor,
        "rng_seed": cfg.rng_seed,
        "include_los": cfg.include_los,
        "label": cfg.label,
    }
    if cfg.scatterer_positions is not None:
        d["scatterer_positions"] = np.asarray(cfg.scatterer_positions, dtype=float).tolist()
    if cfg.scatterer_gains is not None:
        gains = np.asarray(cfg.scatterer_gains, dtype=complex)
        d["scatterer_gains"] = {"re": gains.real.tolist(), "im": gains.imag.tolist()}
    return d


def scene_config_from_dict(d: dict) -> SceneConfig:
    if "preset" in d:
        overrides = {k: v for k, v in d.items() if k != "preset"}
        return scene_preset(d["preset"], **_scene_kwargs(overrides))
    return SceneConfig(**_scene_kwargs(d))


def _scene_kwargs(d: dict) -> dict:
    kwargs = dict(d)
    for key in ("tx_array", "rx_array"):
        if key in kwargs and isinstance(kwargs[key], dict):
            sub = kwargs[key]
            kwargs[key] = AntennaArray(
                num_elements=int(sub.get("num_elements", 1)),
                spacing=sub.get("spacing"),
                axis=tuple(sub.get("axis", (1.0, 0.0, 0.0))),
            )
    if "scatterer_gains" in kwargs and isinstance(kwargs["scatterer_gains"], dict):
        g = kwargs["scatterer_gains"]
        kwargs["scatterer_gains"] = np.asarray(g["re"], dtype=float) + 1j * np.asarray(g["im"], dtype=float)
    if "scatterer_positions" in kwargs and kwargs["scatterer_positions"] is not None:
        kwargs["scatterer_positions"] = np.asarray(kwargs["scatterer_positions"], dtype=float)
    return kwargs


def script_to_dict(script: ScenarioScript) -> dict:
    return {
        "segments": [
            {
                "duration": seg.duration,
                "scene": scene_config_to_dict(seg.scene_config),
                "label": seg.label,
                "snr_start_db": seg.snr_start_db,
                "snr_end_db": seg.snr_end_db,
                "tx_position": list(seg.tx_position),
                "rx_start": list(seg.rx_start),
                "rx_end": list(seg.rx_end),
                "fade_every": seg.fade_every,
                "fade_depth_db": seg.fade_depth_db,
            }
            for seg in script.segments
        ]
    }


def script_from_dict(d: dict) -> ScenarioScript:
    segments = []
    for s in d.get("segments", []):
        segments.append(
            ScriptSegment(
                duration=int(s["duration"]),
                scene_config=scene_config_from_dict(s["scene"]),
                label=s["label"],
                snr_start_db=float(s.get("snr_start_db", 20.0)),
                snr_end_db=None if s.get("snr_end_db") is None else float(s["snr_end_db"]),
                tx_position=tuple(s.get("tx_position", (0.0, 0.0, 3.0))),
                rx_start=tuple(s.get("rx_start", (2.0, 0.0, 1.5))),
                rx_end=tuple(s.get("rx_end", (3.0, 2.0, 1.5))),
                fade_every=int(s.get("fade_every", 0)),
                fade_depth_db=float(s.get("fade_depth_db", 0.0)),
            )
        )
    return ScenarioScript(segments=segments)


def load_script(path) -> ScenarioScript:
    with open(path) as fh:
        return script_from_dict(json.load(fh))


def save_script(script: ScenarioScript, path) -> None:
    with open(path, "w") as fh:
        json.dump(script_to_dict(script), fh, indent=2, sort_keys=True)


def save_channel(path, h, t: Optional[int] = None, user: Optional[int] = None, tone: Optional[int] = None) -> None:
    """Binary channel dump: JSON header (shape, dtype, indices) + little-endian payload."""
    entries = as_entries(h)
    meta = {"t": t, "user": user, "tone": tone}
    if isinstance(h, ChannelMatrix):
        meta = {"t": h.t if t is None else t, "user": h.user if user is None else user, "tone": h.tone if tone is None else tone}
    write_blob(path, CHANNEL_MAGIC, meta, {"entries": entries.astype(np.complex128)})


def load_channel(path) -> ChannelMatrix:
    header, arrays = read_blob(path, CHANNEL_MAGIC)
    return ChannelMatrix(entries=arrays["entries"], t=header.get("t"), user=header.get("user"), tone=header.get("tone"))
