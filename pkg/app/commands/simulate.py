"""simulate: T まで時間発展し、診断 CSV とスナップショットを書く。"""
from __future__ import annotations

import logging
from pathlib import Path

from app.commands.common import write_csv
from app.errors import VwsError
from app.models import RunConfig
from app.scenarios import build_initial
from app.services.dynamics import Simulation
from app.services.snapshot import Snapshot, write_snapshot

logger = logging.getLogger(__name__)

DIAGNOSTIC_COLUMNS = ["t", "H", "E_pot", "E_kin", "calE_N", "min_h", "min_a", "div_omega_max", "mass"]
FLUX_COLUMNS = ["t", "dn_mean", "surface_identity", "bottom_identity", "bottom_flux_transport"]


def _snapshot(config: RunConfig, sim: Simulation) -> Snapshot:
    p = config.params
    return Snapshot(state=sim.state, eps=p.eps, mu=p.mu, Lx=p.Lx)


def run(config: RunConfig, out_dir: Path) -> int:
    p = config.params
    out_dir.mkdir(parents=True, exist_ok=True)
    sim = Simulation(build_initial(config.initial, p), p)
    rows = [sim.diagnostics()]
    flux_rows = [sim.flux_diagnostics()]
    last_good = _snapshot(config, sim)
    write_snapshot(out_dir / "snapshot_000000.vws", last_good)

    def on_step(s: Simulation) -> None:
        nonlocal last_good
        last_good = _snapshot(config, s)
        if s.steps_done % config.output_every == 0:
            rows.append(s.diagnostics())
            flux_rows.append(s.flux_diagnostics())
            d = rows[-1]
            logger.info("step=%d t=%.4f H=%.6e min_a=%.4f", s.steps_done, d["t"], d["H"], d["min_a"])
        if config.snapshot_every and s.steps_done % config.snapshot_every == 0:
            write_snapshot(out_dir / f"snapshot_{s.steps_done:06d}.vws", last_good)

    try:
        sim.run(p.T, callback=on_step)
    except VwsError:
        write_snapshot(out_dir / "last_good.vws", last_good)
        write_csv(out_dir / "diagnostics.csv", DIAGNOSTIC_COLUMNS, rows)
        raise

    if rows[-1]["t"] != sim.state.t:
        rows.append(sim.diagnostics())
        flux_rows.append(sim.flux_diagnostics())
    write_csv(out_dir / "diagnostics.csv", DIAGNOSTIC_COLUMNS, rows)
    write_csv(out_dir / "flux_diagnostics.csv", FLUX_COLUMNS, flux_rows)
    write_snapshot(out_dir / "final.vws", _snapshot(config, sim))
    h0, h1 = rows[0]["H"], rows[-1]["H"]
    drift = abs(h1 - h0) / abs(h0) if h0 != 0.0 else abs(h1 - h0)
    logger.info("simulate done: steps=%d energy drift=%.3e", sim.steps_done, drift)
    return 0
