"""hamiltonian: 勾配の差分検査、括弧の反対称性、J·∇H と右辺の一致、軌道上の Ḟ = {F,H}。

一行でも閾値を超えたら終了コード 3 を返す。
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List

import numpy as np

from app.commands.common import write_csv
from app.models import RunConfig
from app.scenarios import build_initial
from app.scenarios.random_state import random_state, random_surface_field, random_volume_field
from app.services.divcurl import grid_for
from app.services.dynamics import Simulation, State
from app.services.hamiltonian import (
    admissible_gradient,
    apply_J,
    bracket_scale,
    cotangent_defect,
    energy_functional,
    fd_check,
    hamiltonian_consistency,
    j_antisymmetry_defect,
    linear_observable,
    mass_functional,
    momentum_functional,
    pairing,
    rhs_matches_gradient,
)
from app.services.geometry import build_geometry

logger = logging.getLogger(__name__)

COLUMNS = ["check", "index", "value", "threshold", "passed"]

EXIT_CHECK_FAILED = 3

FD_TOL = 1e-6
ANTISYMMETRY_TOL = 1e-11
MOMENTUM_TOL = 1e-5
ROW_TOL = 1e-8
OMEGA_ROW_TOL = 1e-6
COTANGENT_TOL = 1e-8
TRAJECTORY_TOL = 1e-3


def _record(rows: List[Dict], check: str, index: int, value: float, threshold: float) -> None:
    rows.append({"check": check, "index": index, "value": float(value), "threshold": threshold,
                 "passed": bool(value <= threshold)})


def momentum_bracket(state: State, config: RunConfig) -> float:
    """|{P_x, H}| を Cauchy–Schwarz の上界で割った値（並進不変性から 0）"""
    p = config.params
    P, H = momentum_functional(), energy_functional()
    G = build_geometry(state.zeta, p.eps, p.mu, grid_for(p), p.h_min)
    gP, gH = admissible_gradient(P, state, p), admissible_gradient(H, state, p)
    jP, jH = apply_J(state, p, gP, G), apply_J(state, p, gH, G)
    scale = bracket_scale(gP, gH, jP, jH, G)
    value = abs(pairing(gP, jH, G))
    return value / scale if scale > 0.0 else value


def exit_code(rows: List[Dict]) -> int:
    failed = [r for r in rows if not r["passed"]]
    for r in failed:
        logger.warning("check failed: %s[%d] value=%.3e threshold=%.1e", r["check"], r["index"], r["value"],
                       r["threshold"])
    return EXIT_CHECK_FAILED if failed else 0


def run(config: RunConfig, out_dir: Path) -> int:
    p = config.params
    spec = config.hamiltonian
    grid = grid_for(p)
    rng = np.random.default_rng(config.seed)
    H = energy_functional()
    P = momentum_functional()
    rows: List[Dict] = []

    for i in range(spec.n_states):
        irrot = random_state(rng, p)
        rot = random_state(rng, p, vorticity=0.5)
        zero = grid.surface_zeros()
        d_zeta = State(t=0.0, zeta=random_surface_field(rng, p, 1.0), psi=zero, omega=grid.vector_zeros())
        d_psi = State(t=0.0, zeta=zero, psi=random_surface_field(rng, p, 1.0), omega=grid.vector_zeros())
        d_omega = grid.vector_zeros()
        d_omega[1] = random_volume_field(rng, p, 1.0)
        d_w = State(t=0.0, zeta=zero, psi=zero, omega=d_omega)

        _record(rows, "fd_zeta", i, fd_check(H, irrot, d_zeta, spec.h_list, p).min_error, FD_TOL)
        _record(rows, "fd_psi", i, fd_check(H, rot, d_psi, spec.h_list, p).min_error, FD_TOL)
        _record(rows, "fd_omega", i, fd_check(H, rot, d_w, spec.h_list, p).min_error, FD_TOL)
        _record(rows, "fd_momentum", i, fd_check(P, rot, d_zeta, spec.h_list, p).min_error, FD_TOL)

        phi = linear_observable(random_surface_field(rng, p, 1.0), "phi")
        # (P, H) は離散的な部分積分の精度までしか相殺しない
        pairs = [
            ("antisymmetry_phi_H", phi, H, ANTISYMMETRY_TOL),
            ("antisymmetry_mass_H", mass_functional(), H, ANTISYMMETRY_TOL),
            ("antisymmetry_P_phi", P, phi, ANTISYMMETRY_TOL),
            ("antisymmetry_P_H", P, H, MOMENTUM_TOL),
        ]
        for name, F, Gf, tol in pairs:
            _record(rows, name, i, j_antisymmetry_defect(F, Gf, rot, p), tol)
        _record(rows, "bracket_P_H", i, momentum_bracket(rot, config), MOMENTUM_TOL)

        match = rhs_matches_gradient(rot, p)
        _record(rows, "j_zeta_row", i, match["zeta_row"], ROW_TOL)
        _record(rows, "j_psi_row", i, match["psi_row"], ROW_TOL)
        _record(rows, "j_omega_row", i, match["omega_row"], OMEGA_ROW_TOL)
        _record(rows, "cotangent", i, cotangent_defect(rot, p), COTANGENT_TOL)

    sim = Simulation(build_initial(config.initial, p), p)
    trajectory = [sim.state]
    for _ in range(spec.trajectory_steps):
        trajectory.append(sim.advance(spec.trajectory_dt))
    observables = [
        ("traj_linear", linear_observable(np.cos(grid.k0 * grid.x), "cos")),
        ("traj_mass", mass_functional()),
        ("traj_momentum", P),
        ("traj_energy", H),
    ]
    for name, F in observables:
        res = hamiltonian_consistency(trajectory, F, p, H)
        _record(rows, name, 0, res["relative"], TRAJECTORY_TOL)

    write_csv(out_dir / "hamiltonian_check.csv", COLUMNS, rows)
    for row in rows:
        status = "PASS" if row["passed"] else "FAIL"
        print(f"{status:4s} {row['check']:>20s}[{row['index']}] {row['value']:.3e} <= {row['threshold']:.1e}")
    failed = sum(not r["passed"] for r in rows)
    logger.info("hamiltonian checks: %d rows, %d failed", len(rows), failed)
    return exit_code(rows)
