"""JSON file formats: spaces, densities, families and run configurations.

Space file, either form:
    {"dist": [[...]], "mu": [...], "x0": 0}
    {"grid": {"lo": -6.0, "hi": 6.0, "n": 241, "V": [...],
              "outposts": [[12.0, 1e-8], [-12.0, 1e-8]]}}
(the optional "outposts" list appends remote low-mass nodes to the grid)
Density file:
    {"h": [...]}
Family file, single spec or a bundle:
    {"seed": 7, "kind": "exponential-tilt", "size": 100,
     "params": {"tilt_lo": 1e-3, "tilt_hi": 2.0, "cut_levels": [3.0]}}
    {"families": [ <spec>, ... ]}

All reals are parsed as 64-bit floats.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .space import (
    Density,
    DensityFamily,
    MetricMeasureSpace,
    build_grid_space,
    grid_space_with_outposts,
    validate_density,
)


def _read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def space_from_dict(doc: dict) -> MetricMeasureSpace:
    if "grid" in doc:
        g = doc["grid"]
        try:
            if g.get("outposts"):
                outposts = [(float(p), float(m)) for p, m in g["outposts"]]
                return grid_space_with_outposts(
                    float(g["lo"]), float(g["hi"]), int(g["n"]), g["V"], outposts
                )
            return build_grid_space(float(g["lo"]), float(g["hi"]), int(g["n"]), g["V"])
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad grid space spec: {exc}") from exc
    try:
        dist = np.asarray(doc["dist"], dtype=float)
        mu = np.asarray(doc["mu"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad space spec: {exc}") from exc
    x0 = int(doc.get("x0", 0))
    labels = doc.get("labels")
    if labels is not None:
        labels = np.asarray(labels, dtype=float)
    return MetricMeasureSpace(dist=dist, mu=mu, x0=x0, labels=labels)


def load_space(path) -> MetricMeasureSpace:
    return space_from_dict(_read_json(path))


def load_density(path, space: MetricMeasureSpace) -> Density:
    doc = _read_json(path)
    if "h" not in doc:
        raise ParseError(f"{path} has no 'h' field")
    return validate_density(space, np.asarray(doc["h"], dtype=float))


def family_from_dict(doc: dict) -> DensityFamily:
    try:
        params = doc.get("params", {})
        kwargs = {}
        if "tilt_lo" in params:
            kwargs["tilt_lo"] = float(params["tilt_lo"])
        if "tilt_hi" in params:
            kwargs["tilt_hi"] = float(params["tilt_hi"])
        if "cut_levels" in params:
            kwargs["cut_levels"] = tuple(float(c) for c in params["cut_levels"])
        return DensityFamily(
            seed=int(doc["seed"]), kind=str(doc["kind"]), size=int(doc["size"]), **kwargs
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad family spec: {exc}") from exc


def load_families(path) -> list[DensityFamily]:
    doc = _read_json(path)
    if "families" in doc:
        return [family_from_dict(d) for d in doc["families"]]
    return [family_from_dict(doc)]


def family_to_dict(spec: DensityFamily) -> dict:
    return {
        "seed": spec.seed,
        "kind": spec.kind,
        "size": spec.size,
        "params": {
            "tilt_lo": spec.tilt_lo,
            "tilt_hi": spec.tilt_hi,
            "cut_levels": list(spec.cut_levels),
        },
    }


def save_space(path, space: MetricMeasureSpace) -> None:
    doc = {"dist": space.dist.tolist(), "mu": space.mu.tolist(), "x0": space.x0}
    if space.labels is not None:
        doc["labels"] = space.labels.tolist()
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def save_density(path, nu: Density) -> None:
    Path(path).write_text(json.dumps({"h": nu.h.tolist()}), encoding="utf-8")


def config_paths_relative_to(doc: dict, base: Path) -> dict:
    """Resolve a config's 'path' references relative to the config file."""
    out = dict(doc)
    space = out.get("space")
    if isinstance(space, dict) and "path" in space:
        out["space"] = {"path": str((base / space["path"]).resolve())}
    return out


__all__ = [
    "space_from_dict",
    "load_space",
    "load_density",
    "family_from_dict",
    "load_families",
    "family_to_dict",
    "save_space",
    "save_density",
    "ValidationError",
]
