"""dispersion: 微小定在波の振動数を測り、線形分散関係と比べる。"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from scipy import fft
from scipy.optimize import curve_fit

from app.commands.common import print_table, write_csv
from app.models import DispersionSpec, InitialCondition, Params, RunConfig
from app.scenarios import build_initial
from app.services import spectral
from app.services.divcurl import grid_for
from app.services.dynamics import Simulation

logger = logging.getLogger(__name__)

COLUMNS = ["mu", "k", "omega_exact", "omega_measured", "rel_error"]


def zero_crossing_frequency(t: np.ndarray, a: np.ndarray) -> float:
    """符号変化の線形補間から見積もった角振動数"""
    idx = np.nonzero(np.signbit(a[:-1]) != np.signbit(a[1:]))[0]
    if len(idx) < 2:
        raise ValueError("零点が 2 個未満で振動数を推定できません")
    tc = t[idx] - a[idx] * (t[idx + 1] - t[idx]) / (a[idx + 1] - a[idx])
    half_period = float(np.mean(np.diff(tc)))
    return np.pi / half_period


def fit_frequency(t: np.ndarray, a: np.ndarray) -> float:
    """A cos(ωt + φ) の最小二乗当てはめ。初期値は零点間隔から"""
    w0 = zero_crossing_frequency(t, a)
    amp0 = float(np.max(np.abs(a)))

    def model(tt, amp, w, phase):
        return amp * np.cos(w * tt + phase)

    popt, _ = curve_fit(model, t, a, p0=(amp0, w0, 0.0), xtol=1e-14, ftol=1e-14, maxfev=10000)
    return abs(float(popt[1]))


def measure(params: Params, mu: float, k: int, spec: DispersionSpec) -> Tuple[float, float]:
    """(解析値, 測定値)"""
    p = params.model_copy(update={"mu": float(mu), "dt": None})
    grid = grid_for(p)
    exact = spectral.dispersion_frequency(k * grid.k0, mu)
    period = 2.0 * np.pi / exact
    ic = InitialCondition(kind="standing_wave", amplitude=spec.amplitude, mode=k)
    sim = Simulation(build_initial(ic, p), p, dt=period / spec.steps_per_period)

    times = [sim.state.t]
    amps = [2.0 * fft.rfft(sim.state.zeta)[k].real / grid.nx]

    def record(s: Simulation) -> None:
        times.append(s.state.t)
        amps.append(2.0 * fft.rfft(s.state.zeta)[k].real / grid.nx)

    sim.run(spec.periods * period, callback=record)
    measured = fit_frequency(np.asarray(times), np.asarray(amps))
    return exact, measured


def run(config: RunConfig, out_dir: Path) -> int:
    spec = config.dispersion
    rows: List[Dict] = []
    for mu, k in spec.cases:
        exact, measured = measure(config.params, mu, int(k), spec)
        rows.append({"mu": float(mu), "k": int(k), "omega_exact": exact, "omega_measured": measured,
                     "rel_error": abs(measured - exact) / exact})
        logger.info("dispersion mu=%.4g k=%d omega=%.10f exact=%.10f", mu, k, measured, exact)
    write_csv(out_dir / "dispersion.csv", COLUMNS, rows)
    print_table("standing-wave frequencies", COLUMNS, rows)
    return 0
