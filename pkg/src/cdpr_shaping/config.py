"""JSON robot configurations and simulation scenarios."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import shaping
from .control_sim import ControllerGains, FrictionParams
from .errors import ConfigError
from .model import RobotModel, natural_frequencies
from .tension import TensionLimits
from .trajectory import bang_bang_line

REQUIRED_ROBOT_KEYS = ("exit_points", "mass", "cable_modulus_Pa", "cable_area_m2", "winding_ratios", "winch_inertia")


def data_path(name: str) -> Path:
    """Path of a configuration file shipped with the package."""
    return Path(str(resources.files("cdpr_shaping") / "data" / name))


def resolve(path, base: Path | None = None) -> Path:
    """Find ``path`` as given, next to ``base``, or among the shipped files."""
    p = Path(path)
    candidates = [p]
    if base is not None and not p.is_absolute():
        candidates.append(base / p)
    candidates += [data_path(p.name), data_path(p.name + ".json")]
    for c in candidates:
        if c.is_file():
            return c
    raise ConfigError(f"file not found: {path}")


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


@dataclass(frozen=True)
class RobotConfig:
    model: RobotModel
    gains: ControllerGains
    friction: FrictionParams
    limits: TensionLimits
    workspace: tuple | None  # (lower, upper) corners
    source: str = ""


def robot_from_dict(data: dict, source: str = "") -> RobotConfig:
    missing = [k for k in REQUIRED_ROBOT_KEYS if k not in data]
    if missing:
        raise ConfigError(f"{source or 'robot config'}: missing keys {missing}")
    try:
        b = np.asarray(data["exit_points"], dtype=float)
        n = b.shape[0]
        model = RobotModel(
            exit_points=b,
            anchor_points=np.asarray(data.get("anchor_points", np.zeros((n, 3))), dtype=float),
            platform_mass=float(data["mass"]),
            platform_inertia=np.asarray(data.get("inertia", np.zeros((3, 3))), dtype=float),
            com_offset=np.asarray(data.get("com_offset", np.zeros(3)), dtype=float),
            cable_modulus=float(data["cable_modulus_Pa"]),
            cable_area=float(data["cable_area_m2"]),
            winding_ratios=np.asarray(data["winding_ratios"], dtype=float),
            winch_inertia=np.asarray(data["winch_inertia"], dtype=float),
            dof=int(data.get("dof", 3)),
            gravity=np.asarray(data.get("gravity", (0.0, 0.0, -9.81)), dtype=float),
            effective_ea=data.get("effective_EA_N"),
        )
        gains = ControllerGains(**data.get("gains", {}))
        friction = FrictionParams(**data.get("friction", {}))
        limits = TensionLimits(**data.get("limits", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source or 'robot config'}: {exc}") from exc
    box = data.get("workspace")
    workspace = (tuple(box["lower"]), tuple(box["upper"])) if box else None
    return RobotConfig(model, gains, friction, limits, workspace, source)


def load_robot(path="creator.json", raw_ea: bool = False) -> RobotConfig:
    """Load a robot file.  ``raw_ea`` ignores any calibrated axial stiffness."""
    p = resolve(path)
    cfg = robot_from_dict(load_json(p), str(p))
    if raw_ea:
        cfg = replace(cfg, model=cfg.model.with_effective_ea(None))
    return cfg


@dataclass(frozen=True)
class Scenario:
    robot: RobotConfig
    p1: tuple
    p2: tuple
    tf: float
    traj_dt: float = 1e-3
    kind: str = "none"
    frequencies: object = "auto"
    damping: float = 0.0
    dt: float = 1e-4
    control_dt: float = 1e-3
    duration: float | None = None
    friction_smoothing: float | None = 0.01
    cable_damping: float = 0.0
    output_dir: str = "out"

    def __post_init__(self):
        if self.kind not in shaping.KINDS:
            raise ConfigError(f"unknown shaper kind {self.kind!r}; expected one of {shaping.KINDS}")
        if not self.tf > 0:
            raise ConfigError("trajectory tf must be positive")
        if self.duration is not None and self.duration < self.tf:
            raise ConfigError(f"duration {self.duration} s is shorter than the motion time tf = {self.tf} s")
        if not 0 < self.dt <= 1e-3:
            raise ConfigError("sim dt must lie in (0, 1e-3]")

    @property
    def sim_duration(self) -> float:
        return self.tf if self.duration is None else self.duration

    def mode_specs(self):
        """Tuning modes; ``auto`` uses the two lowest frequencies at ``p1``."""
        if isinstance(self.frequencies, str):
            if self.frequencies != "auto":
                raise ConfigError(f"frequencies must be 'auto' or a list, got {self.frequencies!r}")
            f = natural_frequencies(self.robot.model, self.p1)[:2]
        else:
            f = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        return [shaping.ModeSpec(float(v), self.damping) for v in f]

    def shaper(self, kind: str | None = None) -> shaping.ImpulseSequence:
        k = self.kind if kind is None else kind
        return shaping.build(k, self.mode_specs() if k != "none" else [])

    def trajectory(self):
        return bang_bang_line(self.p1, self.p2, self.tf, self.traj_dt)


def scenario_from_dict(data: dict, base: Path | None = None) -> Scenario:
    try:
        robot_cfg = load_robot(resolve(data.get("robot", "creator.json"), base))
        tr = data["trajectory"]
        sh = data.get("shaper", {})
        sim = data.get("sim", {})
        return Scenario(
            robot=robot_cfg,
            p1=tuple(float(v) for v in tr["p1"]),
            p2=tuple(float(v) for v in tr["p2"]),
            tf=float(tr["tf"]),
            traj_dt=float(tr.get("dt", 1e-3)),
            kind=str(sh.get("kind", "none")).lower().replace("-", ""),
            frequencies=sh.get("frequencies", "auto"),
            damping=float(sh.get("damping", 0.0)),
            dt=float(sim.get("dt", 1e-4)),
            control_dt=float(sim.get("control_dt", 1e-3)),
            duration=sim.get("duration"),
            friction_smoothing=sim.get("friction_smoothing", 0.01),
            cable_damping=float(sim.get("cable_damping", 0.0)),
            output_dir=str(data.get("output_dir", "out")),
        )
    except KeyError as exc:
        raise ConfigError(f"scenario is missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_scenario(path="creator_scenario.json") -> Scenario:
    p = resolve(path)
    return scenario_from_dict(load_json(p), p.parent)
