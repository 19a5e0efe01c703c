"""Scenario configs and experiment runners behind the command-line tool.

A scenario is one JSON document: an experiment kind, a seed, and the
sub-configs the kind needs (grid, physics, potential, evolution, plus
kind-specific sections). Parsing reports the dotted path of every offending
entry. Runners return plain rows; the writer sorts them by a declared key
column so the emitted CSV is byte-identical for a fixed config and seed no
matter how many worker threads computed the rows.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    EvolutionConfig,
    cutoff_scan,
    dressed_propagator,
    evolve,
    gauge_covariance_check,
    pair_creation_probability,
)
from .errors import ConfigError
from .fock import TruncationWindow, FockVector, car_annihilate, car_create, charge_table, vacuum_state
from .grid import Grid, GridSpec, build_grid
from .hsbounds import QuadratureSpec, q_norm_analytic
from .operators import free_data, hs_norm, q_operator, unitarity_defect
from .potentials import (
    GaussianProfile,
    PotentialComponent,
    PotentialSpec,
    make_envelope,
)
from .spinor import PhysicsParams
from .wedge import (
    DiracSea,
    LiftRotation,
    hartree_fock_probability,
    left_op,
    lift_rotation,
    right_op,
    sea_inner,
    transition_probability,
)

__all__ = [
    "CSV_FORMAT",
    "THRESHOLDS",
    "SCENARIO_KINDS",
    "ScenarioConfig",
    "parse_scenario",
    "apply_overrides",
    "config_hash",
    "shipped_default",
    "negative_sea",
    "run_scenario",
]

CSV_FORMAT = 1

SCENARIO_KINDS = ("spectrum", "evolve", "scan", "qnorm", "lift", "gauge", "wedge-suite")

# Tolerances in force across the package, recorded in every metadata file.
THRESHOLDS = {
    "algebra_identity": 1e-12,
    "unitarity_defect": 1e-9,
    "sea_isometry": 1e-8,
    "charge_gray_zone": [1e-8, 1e-4],
    "lift_singular_floor": 1e-10,
    "transition_probability_slack": 1e-9,
    "determinant_oracle_relative": 1e-10,
    "phase_invariance": 1e-12,
    "car_identity": 1e-12,
    "scan_saturate_fraction": 0.05,
    "scan_grow_fraction": 0.20,
}


# ---------------------------------------------------------------------------
# typed dict access with dotted-path errors
# ---------------------------------------------------------------------------


def _as_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value

def _reject_unknown(mapping: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(
            f"{path}.{unknown[0]}" if path else unknown[0],
            f"unknown key (expected one of {sorted(allowed)})",
        )


def _get(mapping: dict, key: str, path: str, required: bool = True, default=None):
    if key not in mapping:
        if required:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required entry")
        return default
    return mapping[key]


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected true or false, got {value!r}")
    return value


def _as_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a list, got {type(value).__name__}")
    return value


# ---------------------------------------------------------------------------
# section parsers
# ---------------------------------------------------------------------------


def _parse_grid(data, path: str) -> GridSpec:
    sec = _as_mapping(data, path)
    _reject_unknown(sec, {"dim", "n", "length"}, path)
    try:
        return GridSpec(
            dim=_as_int(_get(sec, "dim", path), f"{path}.dim"),
            n=_as_int(_get(sec, "n", path), f"{path}.n"),
            length=_as_float(_get(sec, "length", path), f"{path}.length"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_physics(data, path: str) -> PhysicsParams:
    sec = _as_mapping(data, path)
    _reject_unknown(sec, {"mass", "coupling"}, path)
    try:
        return PhysicsParams(
            mass=_as_float(_get(sec, "mass", path), f"{path}.mass"),
            coupling=_as_float(_get(sec, "coupling", path, required=False, default=1.0), f"{path}.coupling"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_component(data, path: str) -> PotentialComponent:
    sec = _as_mapping(data, path)
    _reject_unknown(sec, {"amplitude", "sigma", "center"}, path)
    center_raw = _get(sec, "center", path, required=False, default=[0.0, 0.0, 0.0])
    center = tuple(
        _as_float(c, f"{path}.center[{i}]")
        for i, c in enumerate(_as_list(center_raw, f"{path}.center"))
    )
    try:
        return PotentialComponent(
            amplitude=_as_float(_get(sec, "amplitude", path), f"{path}.amplitude"),
            sigma=_as_float(_get(sec, "sigma", path, required=False, default=1.0), f"{path}.sigma"),
            center=center,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_envelope_section(data, path: str) -> tuple[str, float, float]:
    sec = _as_mapping(data, path)
    _reject_unknown(sec, {"kind", "t_start", "t_end"}, path)
    kind = _as_str(_get(sec, "kind", path), f"{path}.kind")
    t0 = _as_float(_get(sec, "t_start", path), f"{path}.t_start")
    t1 = _as_float(_get(sec, "t_end", path), f"{path}.t_end")
    try:
        make_envelope(kind, t0, t1)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc
    return kind, t0, t1


def _parse_potential(data, path: str) -> PotentialSpec:
    sec = _as_mapping(data, path)
    _reject_unknown(sec, {"envelope", "components"}, path)
    kind, t0, t1 = _parse_envelope_section(_get(sec, "envelope", path), f"{path}.envelope")
    comps_raw = _as_list(_get(sec, "components", path), f"{path}.components")
    if len(comps_raw) != 4:
        raise ConfigError(
            f"{path}.components",
            f"exactly 4 entries required (time component then 3 spatial), got {len(comps_raw)}",
        )
    comps = tuple(
        _parse_component(c, f"{path}.components[{i}]") for i, c in enumerate(comps_raw)
    )
    try:
        return PotentialSpec(components=comps, envelope_kind=kind, t_start=t0, t_end=t1)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_evolution(data, path: str) -> EvolutionConfig:
    sec = _as_mapping(data, path)
    allowed = {"t_start", "t_end", "steps", "method", "born_order", "born_nodes"}
    _reject_unknown(sec, allowed, path)
    try:
        return EvolutionConfig(
            t_start=_as_float(_get(sec, "t_start", path), f"{path}.t_start"),
            t_end=_as_float(_get(sec, "t_end", path), f"{path}.t_end"),
            steps=_as_int(_get(sec, "steps", path), f"{path}.steps"),
            method=_as_str(_get(sec, "method", path, required=False, default="strang"), f"{path}.method"),
            born_order=_as_int(_get(sec, "born_order", path, required=False, default=2), f"{path}.born_order"),
            born_nodes=_as_int(_get(sec, "born_nodes", path, required=False, default=65), f"{path}.born_nodes"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_quadrature(data, path: str, seed: int) -> QuadratureSpec:
    sec = _as_mapping(data, path)
    _reject_unknown(sec, {"kind", "n_points", "radius", "replicates"}, path)
    try:
        return QuadratureSpec(
            kind=_as_str(_get(sec, "kind", path), f"{path}.kind"),
            n_points=_as_int(_get(sec, "n_points", path), f"{path}.n_points"),
            radius=_as_float(_get(sec, "radius", path, required=False, default=10.0), f"{path}.radius"),
            seed=seed,
            replicates=_as_int(_get(sec, "replicates", path, required=False, default=8), f"{path}.replicates"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario: experiment kind plus the sections that kind uses."""

    kind: str
    seed: int
    raw: dict
    grid: GridSpec | None = None
    physics: PhysicsParams | None = None
    potential: PotentialSpec | None = None
    evolution: EvolutionConfig | None = None
    scan_ns: tuple[int, ...] = ()
    qnorm_times: tuple[float, ...] = ()
    quadrature: QuadratureSpec | None = None
    qnorm_operator: bool = False
    gauge_profile: GaussianProfile | None = None
    gauge_ramp: tuple[str, float, float] | None = None
    gauge_steps: tuple[int, ...] = ()
    wedge_space_dim: int = 10
    wedge_sea_dim: int = 4
    wedge_trials: int = 25


_SECTION_KEYS = {
    "kind", "seed", "grid", "physics", "potential", "evolution",
    "scan", "qnorm", "gauge", "wedge",
}

_REQUIRED_SECTIONS = {
    "spectrum": ("grid", "physics"),
    "evolve": ("grid", "physics", "potential", "evolution"),
    "scan": ("grid", "physics", "potential", "evolution", "scan"),
    "qnorm": ("physics", "potential", "qnorm"),
    "lift": ("grid", "physics", "potential", "evolution"),
    "gauge": ("grid", "physics", "potential", "evolution", "gauge"),
    "wedge-suite": (),
}


def parse_scenario(data) -> ScenarioConfig:
    """Validate a scenario document, reporting dotted paths on failure."""
    top = _as_mapping(data, "")
    _reject_unknown(top, _SECTION_KEYS, "")
    kind = _as_str(_get(top, "kind", ""), "kind")
    if kind not in SCENARIO_KINDS:
        raise ConfigError("kind", f"unknown kind {kind!r}; choose from {list(SCENARIO_KINDS)}")
    seed = _as_int(_get(top, "seed", "", required=False, default=0), "seed")
    for section in _REQUIRED_SECTIONS[kind]:
        if section not in top:
            raise ConfigError(section, f"section required for kind {kind!r}")

    fields: dict = {"kind": kind, "seed": seed, "raw": data}
    if "grid" in top:
        fields["grid"] = _parse_grid(top["grid"], "grid")
    if "physics" in top:
        fields["physics"] = _parse_physics(top["physics"], "physics")
    if "potential" in top:
        fields["potential"] = _parse_potential(top["potential"], "potential")
    if "evolution" in top:
        fields["evolution"] = _parse_evolution(top["evolution"], "evolution")

    if "scan" in top:
        sec = _as_mapping(top["scan"], "scan")
        _reject_unknown(sec, {"grid_ns"}, "scan")
        ns = [
            _as_int(v, f"scan.grid_ns[{i}]")
            for i, v in enumerate(_as_list(_get(sec, "grid_ns", "scan"), "scan.grid_ns"))
        ]
        if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("scan.grid_ns", "need at least two strictly increasing sizes")
        fields["scan_ns"] = tuple(ns)

    if "qnorm" in top:
        sec = _as_mapping(top["qnorm"], "qnorm")
        _reject_unknown(sec, {"times", "quadrature", "operator"}, "qnorm")
        times = [
            _as_float(v, f"qnorm.times[{i}]")
            for i, v in enumerate(_as_list(_get(sec, "times", "qnorm"), "qnorm.times"))
        ]
        if not times:
            raise ConfigError("qnorm.times", "need at least one evaluation time")
        fields["qnorm_times"] = tuple(times)
        fields["quadrature"] = _parse_quadrature(_get(sec, "quadrature", "qnorm"), "qnorm.quadrature", seed)
        fields["qnorm_operator"] = _as_bool(
            _get(sec, "operator", "qnorm", required=False, default=False), "qnorm.operator"
        )
        if fields["qnorm_operator"] and "grid" not in top:
            raise ConfigError("grid", "section required when qnorm.operator is true")

    if "gauge" in top:
        sec = _as_mapping(top["gauge"], "gauge")
        _reject_unknown(sec, {"profile", "ramp", "step_counts"}, "gauge")
        fields["gauge_profile"] = _profile_from(_get(sec, "profile", "gauge"), "gauge.profile",
                                                fields.get("grid"))
        fields["gauge_ramp"] = _parse_envelope_section(_get(sec, "ramp", "gauge"), "gauge.ramp")
        steps = [
            _as_int(v, f"gauge.step_counts[{i}]")
            for i, v in enumerate(_as_list(_get(sec, "step_counts", "gauge"), "gauge.step_counts"))
        ]
        if len(steps) < 2 or any(b <= a for a, b in zip(steps, steps[1:])):
            raise ConfigError("gauge.step_counts", "need at least two strictly increasing step counts")
        fields["gauge_steps"] = tuple(steps)

    if "wedge" in top:
        sec = _as_mapping(top["wedge"], "wedge")
        _reject_unknown(sec, {"space_dim", "sea_dim", "trials"}, "wedge")
        fields["wedge_space_dim"] = _as_int(_get(sec, "space_dim", "wedge", required=False, default=10), "wedge.space_dim")
        fields["wedge_sea_dim"] = _as_int(_get(sec, "sea_dim", "wedge", required=False, default=4), "wedge.sea_dim")
        fields["wedge_trials"] = _as_int(_get(sec, "trials", "wedge", required=False, default=25), "wedge.trials")
        if fields["wedge_sea_dim"] >= fields["wedge_space_dim"]:
            raise ConfigError("wedge.sea_dim", "must be smaller than wedge.space_dim")
        if fields["wedge_trials"] < 1:
            raise ConfigError("wedge.trials", "need at least one trial")

    return ScenarioConfig(**fields)


def _profile_from(data, path: str, grid: GridSpec | None) -> GaussianProfile:
    comp = _parse_component(data, path)
    dim = grid.dim if grid is not None else 3
    if dim == 1 and any(c != 0.0 for c in comp.center[1:]):
        raise ConfigError(f"{path}.center", "in dim=1 only the first coordinate may be nonzero")
    return GaussianProfile(amplitude=comp.amplitude, sigma=comp.sigma, center=comp.center[:dim])


# ---------------------------------------------------------------------------
# overrides and hashing
# ---------------------------------------------------------------------------


def apply_overrides(data: dict, assignments: list[str]) -> dict:
    """Apply ``--set path=value`` pairs to a raw config document."""
    out = json.loads(json.dumps(data))
    for entry in assignments:
        if "=" not in entry:
            raise ConfigError("--set", f"expected path=value, got {entry!r}")
        pathstr, _, valstr = entry.partition("=")
        tokens = _path_tokens(pathstr)
        try:
            value = json.loads(valstr)
        except json.JSONDecodeError:
            value = valstr
        node = out
        for i, tok in enumerate(tokens[:-1]):
            key = _index_token(node, tok, pathstr)
            if isinstance(node, list):
                node = node[key]
            else:
                node = node.setdefault(tok, {})
            if not isinstance(node, (dict, list)):
                raise ConfigError(pathstr, f"cannot descend into {'.'.join(tokens[: i + 1])}")
        last = _index_token(node, tokens[-1], pathstr)
        if isinstance(node, list):
            node[last] = value
        else:
            node[tokens[-1]] = value
    return out


def _path_tokens(pathstr: str) -> list[str]:
    """Split a dotted override path; ``a.b[2].c`` and ``a.b.2.c`` both work."""
    tokens: list[str] = []
    for part in pathstr.strip().split("."):
        base = part
        indices: list[str] = []
        while base.endswith("]") and "[" in base:
            base, _, idx = base[:-1].rpartition("[")
            indices.insert(0, idx)
        if not base:
            raise ConfigError("--set", f"empty path component in {pathstr!r}")
        tokens.append(base)
        tokens.extend(indices)
    return tokens


def _index_token(node, token: str, pathstr: str):
    if isinstance(node, list):
        try:
            idx = int(token)
        except ValueError:
            raise ConfigError(pathstr, f"list index expected at {token!r}") from None
        if not 0 <= idx < len(node):
            raise ConfigError(pathstr, f"index {idx} out of range (length {len(node)})")
        return idx
    return token


def config_hash(data: dict) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# shipped scenarios
# ---------------------------------------------------------------------------


def _zero_component() -> dict:
    return {"amplitude": 0.0, "sigma": 1.0}


def shipped_default(kind: str) -> dict:
    """Default scenario document for a subcommand, used when no config is given."""
    if kind == "spectrum":
        return {
            "kind": "spectrum",
            "seed": 0,
            "grid": {"dim": 1, "n": 64, "length": 20.0},
            "physics": {"mass": 1.0, "coupling": 1.0},
        }
    if kind == "evolve":
        return {
            "kind": "evolve",
            "seed": 0,
            "grid": {"dim": 1, "n": 64, "length": 40.0},
            "physics": {"mass": 1.0, "coupling": 0.5},
            "potential": {
                "envelope": {"kind": "sin_squared", "t_start": 0.0, "t_end": 2.0},
                "components": [
                    {"amplitude": 1.0, "sigma": 5.0},
                    _zero_component(),
                    _zero_component(),
                    _zero_component(),
                ],
            },
            "evolution": {"t_start": 0.0, "t_end": 1.0, "steps": 64, "method": "strang"},
        }
    if kind == "scan":
        # Transverse vector component stopped mid-pulse: the undressed
        # propagator keeps acquiring off-diagonal weight under refinement
        # while the dressed one levels off.
        return {
            "kind": "scan",
            "seed": 0,
            "grid": {"dim": 1, "n": 128, "length": 640.0},
            "physics": {"mass": 0.5, "coupling": 0.5},
            "potential": {
                "envelope": {"kind": "sin_squared", "t_start": 0.0, "t_end": 2.0},
                "components": [
                    _zero_component(),
                    _zero_component(),
                    {"amplitude": 1.0, "sigma": 10.0},
                    _zero_component(),
                ],
            },
            "evolution": {"t_start": 0.0, "t_end": 1.0, "steps": 48, "method": "strang"},
            "scan": {"grid_ns": [128, 256, 512]},
        }
    if kind == "qnorm":
        return {
            "kind": "qnorm",
            "seed": 7,
            "physics": {"mass": 1.0, "coupling": 1.0},
            "potential": {
                "envelope": {"kind": "sin_squared", "t_start": 0.0, "t_end": 2.0},
                "components": [
                    {"amplitude": 1.0, "sigma": 1.0},
                    _zero_component(),
                    _zero_component(),
                    _zero_component(),
                ],
            },
            "qnorm": {
                "times": [1.0],
                "quadrature": {"kind": "lattice", "n_points": 16, "radius": 6.0},
            },
        }
    if kind == "lift":
        return {
            "kind": "lift",
            "seed": 3,
            "grid": {"dim": 1, "n": 64, "length": 40.0},
            "physics": {"mass": 1.0, "coupling": 0.5},
            "potential": {
                "envelope": {"kind": "sin_squared", "t_start": 0.0, "t_end": 2.0},
                "components": [
                    {"amplitude": 1.0, "sigma": 5.0},
                    _zero_component(),
                    _zero_component(),
                    _zero_component(),
                ],
            },
            "evolution": {"t_start": 0.0, "t_end": 1.0, "steps": 64, "method": "strang"},
        }
    if kind == "gauge":
        return {
            "kind": "gauge",
            "seed": 0,
            "grid": {"dim": 1, "n": 128, "length": 40.0},
            "physics": {"mass": 1.0, "coupling": 0.3},
            "potential": {
                "envelope": {"kind": "sin_squared", "t_start": 0.0, "t_end": 2.0},
                "components": [
                    {"amplitude": 1.0, "sigma": 4.0},
                    _zero_component(),
                    _zero_component(),
                    _zero_component(),
                ],
            },
            "evolution": {"t_start": 0.0, "t_end": 1.0, "steps": 64, "method": "strang"},
            "gauge": {
                "profile": {"amplitude": 0.5, "sigma": 1.5},
                "ramp": {"kind": "smooth_step", "t_start": 0.1, "t_end": 0.9},
                "step_counts": [64, 128, 256],
            },
        }
    if kind == "wedge-suite":
        return {
            "kind": "wedge-suite",
            "seed": 5,
            "wedge": {"space_dim": 10, "sea_dim": 4, "trials": 25},
        }
    raise ConfigError("kind", f"unknown kind {kind!r}; choose from {list(SCENARIO_KINDS)}")


# ---------------------------------------------------------------------------
# sea construction
# ---------------------------------------------------------------------------


def negative_sea(grid: Grid, params: PhysicsParams) -> DiracSea:
    """Isometry onto the free negative-energy subspace, columns in ascending
    (grid point, band) order."""
    fd = free_data(grid, params)
    _, vecs = np.linalg.eigh(fd.hblocks)
    neg = vecs[:, :, :2]  # (M, 4, 2), the two descending modes per point
    m = neg.shape[0]
    cols = np.zeros((m, 4, m, 2), dtype=complex)
    idx = np.arange(m)
    cols[idx, :, idx, :] = neg
    return DiracSea(cols.reshape(4 * m, 2 * m))


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------


def _pool_map(fn, items, threads: int):
    """Map preserving input order; thread count never affects results."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _offdiag_norms(op, params) -> tuple[float, float]:
    plus_minus = hs_norm(op, params, block="+-").value
    minus_plus = hs_norm(op, params, block="-+").value
    return plus_minus, minus_plus


def _run_spectrum(cfg: ScenarioConfig, threads: int, budget: int | None):
    grid = build_grid(cfg.grid)
    fd = free_data(grid, cfg.physics)
    headers = ["point", *[f"p{i + 1}" for i in range(cfg.grid.dim)], "energy_negative", "energy_positive"]
    rows = []
    for k in range(grid.momenta.shape[0]):
        rows.append([k, *map(float, grid.momenta[k]), float(-fd.energies[k]), float(fd.energies[k])])
    extras = {
        "min_abs_eigenvalue": float(np.min(fd.energies)),
        "mass": cfg.physics.mass,
        "degeneracy_per_sign": 2,
    }
    return headers, rows, "point", extras


def _run_evolve(cfg: ScenarioConfig, threads: int, budget: int | None):
    grid = build_grid(cfg.grid)
    pot = cfg.potential.build(cfg.grid.dim)
    u = evolve(pot, cfg.evolution, grid, cfg.physics, representation="dense", budget=budget)
    dressed = dressed_propagator(pot, cfg.evolution, grid, cfg.physics, budget=budget, raw=u)
    raw_pm, raw_mp = _offdiag_norms(u, cfg.physics)
    dr_pm, dr_mp = _offdiag_norms(dressed.dressed, cfg.physics)
    row = [
        float(cfg.evolution.t_end),
        cfg.evolution.steps,
        cfg.evolution.method,
        unitarity_defect(u),
        float(np.hypot(raw_pm, raw_mp)),
        float(np.hypot(dr_pm, dr_mp)),
        pair_creation_probability(u, cfg.physics),
    ]
    headers = [
        "t_end", "steps", "method", "unitarity_defect",
        "raw_offdiag_hs", "dressed_offdiag_hs", "pair_probability",
    ]
    return headers, [row], "t_end", {}


def _run_scan(cfg: ScenarioConfig, threads: int, budget: int | None):
    pot = cfg.potential.build(cfg.grid.dim)
    specs = [GridSpec(dim=cfg.grid.dim, n=n, length=cfg.grid.length) for n in cfg.scan_ns]
    result = cutoff_scan(
        pot,
        cfg.evolution,
        specs,
        cfg.physics,
        threads=threads,
        budget=budget,
        saturate_threshold=THRESHOLDS["scan_saturate_fraction"],
        grow_threshold=THRESHOLDS["scan_grow_fraction"],
    )
    headers = [
        "cutoff_n", "cutoff", "raw_offdiag_hs", "dressed_offdiag_hs",
        "pair_probability", "unitarity_defect",
        "raw_classification", "dressed_classification",
    ]
    rows = [
        [
            r.cutoff_n, r.cutoff, r.raw_offdiag_hs, r.dressed_offdiag_hs,
            r.pair_probability, r.unitarity_defect,
            result.raw_classification, result.dressed_classification,
        ]
        for r in result.rows
    ]
    extras = {
        "raw_classification": result.raw_classification,
        "dressed_classification": result.dressed_classification,
        "wall_times": [r.wall_time for r in result.rows],
    }
    return headers, rows, "cutoff_n", extras


def _run_qnorm(cfg: ScenarioConfig, threads: int, budget: int | None):
    dim = cfg.grid.dim if cfg.grid is not None else 3
    pot = cfg.potential.build(dim)
    grid = build_grid(cfg.grid) if cfg.qnorm_operator else None
    pot_op = pot

    def one(t: float):
        est = q_norm_analytic(pot, t, cfg.physics, cfg.quadrature)
        row = [float(t), est.value, est.stderr]
        if grid is not None:
            q = q_operator(pot_op, t, grid, cfg.physics, budget=budget)
            row.append(hs_norm(q, cfg.physics).value)
        return row

    rows = _pool_map(one, sorted(cfg.qnorm_times), threads)
    headers = ["time", "quad_value", "quad_stderr"]
    if cfg.qnorm_operator:
        headers.append("operator_value")
    extras = {"quadrature_kind": cfg.quadrature.kind, "n_points": cfg.quadrature.n_points}
    return headers, rows, "time", extras


def _run_lift(cfg: ScenarioConfig, threads: int, budget: int | None):
    grid = build_grid(cfg.grid)
    pot = cfg.potential.build(cfg.grid.dim)
    raw = evolve(pot, cfg.evolution, grid, cfg.physics, representation="dense", budget=budget)
    pack = dressed_propagator(pot, cfg.evolution, grid, cfg.physics, budget=budget, raw=raw)
    sea = negative_sea(grid, cfg.physics)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 41]))
    m = sea.index_dim
    phase_probe = np.linalg.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))[0]
    phase_probe = phase_probe / np.linalg.det(phase_probe) ** (1.0 / m)

    def one(route: str):
        op = pack.dressed if route == "dressed" else pack.raw
        lift = lift_rotation(op, sea, sea, singular_floor=THRESHOLDS["lift_singular_floor"])
        prob = transition_probability(sea, op, lift, sea)
        hf = hartree_fock_probability(op, sea, sea)
        shifted = dataclasses.replace(lift, rotation=lift.rotation @ phase_probe)
        prob_shifted = transition_probability(sea, op, shifted, sea)
        b_min = float(np.linalg.eigvalsh(lift.positive_factor)[0])
        return [
            route, lift.smallest_singular, b_min, prob, hf,
            abs(prob - prob_shifted),
        ]

    rows = _pool_map(one, ["dressed", "raw"], threads)
    headers = [
        "route", "smallest_singular", "b_min_eigenvalue",
        "vacuum_probability", "hartree_fock_probability", "phase_invariance_defect",
    ]
    return headers, rows, "route", extras_lift(rows)


def extras_lift(rows) -> dict:
    return {"routes": [r[0] for r in rows]}


def _run_gauge(cfg: ScenarioConfig, threads: int, budget: int | None):
    grid = build_grid(cfg.grid)
    pot = cfg.potential.build(cfg.grid.dim)
    ramp_kind, ramp_t0, ramp_t1 = cfg.gauge_ramp
    ramp = make_envelope(ramp_kind, ramp_t0, ramp_t1)

    def one(steps: int):
        evo = dataclasses.replace(cfg.evolution, steps=steps)
        rep = gauge_covariance_check(pot, cfg.gauge_profile, ramp, evo, grid, cfg.physics, budget=budget)
        return [steps, rep.operator_defect, rep.relative_defect, rep.state_defect]

    rows = _pool_map(one, sorted(cfg.gauge_steps), threads)
    headers = ["steps", "operator_defect", "relative_defect", "state_defect"]
    ratios = [rows[i][3] / rows[i + 1][3] for i in range(len(rows) - 1) if rows[i + 1][3] > 0]
    return headers, rows, "steps", {"state_defect_ratios": ratios}


def _wedge_checks(space_dim: int, sea_dim: int, trials: int, seed: int):
    """Deterministic identity battery over random seas; one row per check."""

    def rand_c(rng, *shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def rand_isometry(rng, n, m):
        return np.linalg.qr(rand_c(rng, n, m))[0]

    def rand_unitary(rng, n):
        q, r = np.linalg.qr(rand_c(rng, n, n))
        return q * (np.diag(r) / np.abs(np.diag(r)))

    n, m = space_dim, sea_dim

    def check_conjugate_symmetry(rng):
        a, b = DiracSea(rand_c(rng, n, m)), DiracSea(rand_c(rng, n, m))
        forward = sea_inner(a, b)
        return abs(forward - np.conj(sea_inner(b, a))) / max(abs(forward), 1.0)

    def check_left_right_commute(rng):
        u = rand_unitary(rng, n)
        r = rand_c(rng, m, m)
        v = DiracSea(rand_isometry(rng, n, m))
        lr = right_op(r, left_op(u, v)).columns
        rl = left_op(u, right_op(r, v)).columns
        return float(np.max(np.abs(lr - rl)))

    def check_right_det_law(rng):
        v = DiracSea(rand_isometry(rng, n, m))
        w = DiracSea(rand_isometry(rng, n, m))
        r = rand_c(rng, m, m)
        lhs = sea_inner(w, right_op(r, v))
        rhs = np.linalg.det(r) * sea_inner(w, v)
        return abs(lhs - rhs) / max(abs(rhs), 1e-300)

    def check_rank_one_det(rng):
        u = rand_c(rng, m)
        v = rand_c(rng, m)
        lhs = np.linalg.det(np.eye(m) + np.outer(u, v.conj()))
        rhs = 1.0 + np.vdot(v, u)
        return abs(lhs - rhs) / abs(rhs)

    def check_phase_invariance(rng):
        u = rand_unitary(rng, n)
        v = DiracSea(rand_isometry(rng, n, m))
        w = DiracSea(rand_isometry(rng, n, m))
        lift = lift_rotation(u, v, w)
        s = rand_unitary(rng, m)
        s = s / np.linalg.det(s) ** (1.0 / m)
        shifted = dataclasses.replace(lift, rotation=lift.rotation @ s)
        return abs(
            transition_probability(w, u, lift, v) - transition_probability(w, u, shifted, v)
        )

    def check_car(rng):
        window = TruncationWindow(holes_below=2, particles_above=2)
        t = window.n_modes
        chi = rand_c(rng, t)
        eta = rand_c(rng, t)
        amps = rand_c(rng, window.dimension)
        state = FockVector(window, amps)
        lhs = car_annihilate(window, eta, car_create(window, chi, state)) + car_create(
            window, chi, car_annihilate(window, eta, state)
        )
        target = complex(np.vdot(eta, chi)) * state
        return float(np.max(np.abs(lhs.amplitudes - target.amplitudes)) / np.linalg.norm(amps))

    def check_charge_shift(rng):
        window = TruncationWindow(holes_below=2, particles_above=2)
        chi = rand_c(rng, window.n_modes)
        table = charge_table(window)
        out = car_create(window, chi, vacuum_state(window))
        support = np.nonzero(np.abs(out.amplitudes) > 1e-13)[0]
        charges = {int(table[s]) for s in support}
        return 0.0 if charges == {1} else 1.0

    checks = {
        "car_anticommutator": (check_car, THRESHOLDS["car_identity"]),
        "charge_shift_create": (check_charge_shift, 0.5),
        "conjugate_symmetry": (check_conjugate_symmetry, 1e-12),
        "left_right_commute": (check_left_right_commute, 1e-13),
        "phase_invariance": (check_phase_invariance, THRESHOLDS["phase_invariance"]),
        "rank_one_determinant": (check_rank_one_det, THRESHOLDS["algebra_identity"]),
        "right_det_law": (check_right_det_law, 1e-12),
    }
    names = sorted(checks)

    def run_check(item):
        index, name = item
        fn, bound = checks[name]
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        worst = 0.0
        for _ in range(trials):
            worst = max(worst, float(fn(rng)))
        return [name, trials, worst, bound]

    return names, run_check


def _run_wedge_suite(cfg: ScenarioConfig, threads: int, budget: int | None):
    names, run_check = _wedge_checks(cfg.wedge_space_dim, cfg.wedge_sea_dim, cfg.wedge_trials, cfg.seed)
    rows = _pool_map(run_check, list(enumerate(names)), threads)
    headers = ["check", "trials", "max_deviation", "bound"]
    all_ok = all(r[2] <= r[3] for r in rows)
    return headers, rows, "check", {"all_within_bound": all_ok}


_RUNNERS = {
    "spectrum": _run_spectrum,
    "evolve": _run_evolve,
    "scan": _run_scan,
    "qnorm": _run_qnorm,
    "lift": _run_lift,
    "gauge": _run_gauge,
    "wedge-suite": _run_wedge_suite,
}


# ---------------------------------------------------------------------------
# artifact writing
# ---------------------------------------------------------------------------


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: str | Path,
    threads: int = 1,
    budget: int | None = None,
) -> dict:
    """Run one scenario and write ``results.csv`` plus ``metadata.json``.

    Rows are sorted by the experiment's declared key column before writing,
    so the CSV body depends only on the config document and the seed.
    """
    started = time.perf_counter()
    headers, rows, sort_key, extras = _RUNNERS[cfg.kind](cfg, threads, budget)
    key_index = headers.index(sort_key)
    rows = sorted(rows, key=lambda r: r[key_index])
    elapsed = time.perf_counter() - started

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [",".join(headers)]
    lines.extend(",".join(_format_cell(v) for v in row) for row in rows)
    (out / "results.csv").write_bytes(("\n".join(lines) + "\n").encode())

    metadata = {
        "tool": "diracsea",
        "version": __version__,
        "csv_format": CSV_FORMAT,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg.raw),
        "columns": headers,
        "sort_key": sort_key,
        "row_count": len(rows),
        "thresholds": THRESHOLDS,
        "timings": {"total_seconds": elapsed},
        "details": extras,
    }
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")
    return metadata
