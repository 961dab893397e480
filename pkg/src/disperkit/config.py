"""TOML problem descriptions.

A config names its materials, exactly one geometry section (``plate``,
``annulus``, ``lshape``, ``mesh`` or ``synthetic``), the scales used for
normalisation, the adaptive settings and the output paths. Geometry
lengths for ``annulus`` and ``lshape`` are already in units of ``a``;
plate ply thicknesses are in metres.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adaptive import AdaptiveConfig
from .assembly import Scales, assemble
from .errors import ConfigError, DisperkitError
from .materials import (Layup, Material, isotropic_material, parse_stacking,
                        transversely_isotropic_stiffness)
from .mesh import build_annulus_mesh, build_lshape_mesh, build_plate_mesh, load_mesh
from .synthetic import crossing_family, veering_family

GEOMETRIES = ("plate", "annulus", "lshape", "mesh", "synthetic")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."
    stem: str = "dispersion"
    svg: bool = False


@dataclass(frozen=True)
class ProblemConfig:
    name: str
    geometry: str
    params: dict
    materials: dict
    scales: Scales
    adaptive: AdaptiveConfig
    output: OutputConfig = field(default_factory=OutputConfig)
    source: Path | None = None

    def build_mesh(self):
        p = self.params
        if self.geometry == "plate":
            mat = self.material(p.get("material"))
            angles = parse_stacking(str(p["stacking"]))
            layup = Layup.from_angles(angles, float(p["ply_thickness"]), mat)
            return build_plate_mesh(layup, int(p.get("order", 4)), self.scales.a)
        if self.geometry == "annulus":
            return build_annulus_mesh(float(p["r_in"]), float(p["r_out"]), int(p["n_circ"]),
                                      int(p.get("n_rad", 1)), self.material(p.get("material")))
        if self.geometry == "lshape":
            return build_lshape_mesh(float(p["leg_y"]), float(p["leg_z"]), float(p["thickness"]),
                                     self.material(p.get("material")),
                                     n_thick=int(p.get("n_thick", 2)),
                                     n_y=p.get("n_y"), n_z=p.get("n_z"))
        if self.geometry == "mesh":
            return load_mesh(p["file"])
        return None

    def build_matrices(self):
        if self.geometry == "synthetic":
            family = self.params.get("family", "veering")
            if family == "veering":
                return veering_family(float(self.params.get("w", 0.02)),
                                      float(self.params.get("k_star", 1.05)))
            if family == "crossing":
                return crossing_family(float(self.params.get("k_star", 1.05)))
            raise ConfigError(f"synthetic.family: unknown family {family!r}")
        return assemble(self.build_mesh(), self.scales)

    def material(self, name):
        if name is None:
            if len(self.materials) != 1:
                raise ConfigError(f"{self.geometry}.material is required when several "
                                  "materials are defined")
            return next(iter(self.materials.values()))
        try:
            return self.materials[name]
        except KeyError:
            raise ConfigError(f"{self.geometry}.material: unknown material {name!r}") from None


def _material(entry, idx):
    where = f"materials[{idx}]"
    kind = entry.get("type", "isotropic")
    try:
        if kind == "isotropic":
            return isotropic_material(float(entry["E"]), float(entry["nu"]), float(entry["rho"]),
                                      name=entry.get("name", ""))
        if kind == "transversely_isotropic":
            return transversely_isotropic_stiffness(
                float(entry["E1"]), float(entry["E2"]), float(entry["G12"]),
                float(entry["nu12"]), float(entry["nu23"]), float(entry["rho"]),
                name=entry.get("name", ""))
        if kind == "stiffness":
            return Material(entry["C"], float(entry["rho"]), name=entry.get("name", ""))
    except KeyError as exc:
        raise ConfigError(f"{where}: missing key {exc.args[0]!r}") from None
    except DisperkitError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.type: unknown material type {kind!r}")


def _dataclass_kwargs(cls, table, section):
    known = {f.name for f in fields(cls)}
    extra = set(table) - known
    if extra:
        raise ConfigError(f"{section}: unknown keys {sorted(extra)}")
    return dict(table)


def parse_config(data, source=None):
    """Build a :class:`ProblemConfig` from an already parsed TOML mapping."""
    base = Path(source).parent if source else Path(".")
    problem = data.get("problem", {})
    name = str(problem.get("name", Path(source).stem if source else "problem"))

    materials = {}
    for idx, entry in enumerate(data.get("materials", [])):
        mat = _material(entry, idx)
        materials[entry.get("name", f"material{idx}")] = mat

    present = [g for g in GEOMETRIES if g in data]
    if len(present) != 1:
        raise ConfigError(f"exactly one geometry section of {list(GEOMETRIES)} is required, "
                          f"found {present or 'none'}")
    geometry = present[0]
    params = dict(data[geometry])
    if geometry == "mesh":
        if "file" not in params:
            raise ConfigError("mesh.file is required")
        path = (base / params["file"]).resolve()
        if not path.is_file():
            raise ConfigError(f"mesh.file: {path} does not exist")
        params["file"] = str(path)
    elif geometry != "synthetic" and not materials:
        raise ConfigError("at least one [[materials]] entry is required")

    sc = data.get("scales", {})
    try:
        scales = Scales(float(sc.get("a", 1.0)), float(sc.get("c_T", 1.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scales: {exc}") from None
    if not (scales.a > 0 and scales.c_T > 0):
        raise ConfigError("scales.a and scales.c_T must be positive")

    ad = data.get("adaptive")
    if ad is None:
        raise ConfigError("an [adaptive] section with k_min and k_max is required")
    kwargs = _dataclass_kwargs(AdaptiveConfig, ad, "adaptive")
    for key in ("k_min", "k_max"):
        if key not in kwargs:
            raise ConfigError(f"adaptive.{key} is required")
    try:
        adaptive = AdaptiveConfig(**kwargs)
    except (DisperkitError, TypeError) as exc:
        raise ConfigError(f"adaptive: {exc}") from None

    out = data.get("output", {})
    output = OutputConfig(**_dataclass_kwargs(OutputConfig, out, "output"))
    if "stem" not in out:
        output = OutputConfig(output.directory, name, output.svg)

    cfg = ProblemConfig(name, geometry, params, materials, scales, adaptive, output,
                        Path(source) if source else None)
    if geometry in ("plate", "annulus", "lshape"):
        cfg.material(params.get("material"))
    return cfg


def load_config(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path)
