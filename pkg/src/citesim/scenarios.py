"""The six shipped growth scenarios.

All share g_n = 0.033, n(0) = 30, T = 150, c_x = 6, alpha = 5 and a
4-network ensemble; they differ in reference-list growth, redirection
schedule, citation window, and the optional reference cap:

  1: no reference growth (r = 25), no redirection
  2: no reference growth (r = 25), redirection beta(t) = t/400
  3: reference growth g_r = 0.018 from r(0) = 5, redirection, CW = 5
  4: as 3, measured with CW = 10
  5: as 3, reference list capped at 25 from period 92
  6: as 4, with the same cap
"""

from __future__ import annotations

from dataclasses import dataclass

from .generator import GeneratorConfig
from .netcore import GrowthSchedule

DEFAULT_BASE_SEED = 8912739
ENSEMBLE_SIZE = 4


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    g_n: float
    g_r: float
    n0: int
    r0: int
    T: int
    t_star: int | None
    r_cap: int | None
    beta_mode: str
    cw: int
    c_cross: float = 6.0
    alpha: float = 5.0
    ensemble_size: int = ENSEMBLE_SIZE

    def schedule(self, t_max: int | None = None) -> GrowthSchedule:
        T = self.T if t_max is None else t_max
        cap_period = self.t_star if self.t_star is not None and self.t_star <= T else None
        cap_value = self.r_cap if cap_period is not None else None
        return GrowthSchedule(
            n0=self.n0, g_n=self.g_n, r0=self.r0, g_r=self.g_r, T=T,
            cap_period=cap_period, cap_value=cap_value,
        )

    def config(self, seed: int, t_max: int | None = None) -> GeneratorConfig:
        return GeneratorConfig(
            schedule=self.schedule(t_max),
            c_cross=self.c_cross,
            alpha=self.alpha,
            beta_mode=self.beta_mode,
            seed=seed,
        )


def _spec(id: int, g_r: float, r0: int, beta_mode: str, cw: int,
          t_star: int | None = None, r_cap: int | None = None) -> ScenarioSpec:
    return ScenarioSpec(
        id=id, g_n=0.033, g_r=g_r, n0=30, r0=r0, T=150,
        t_star=t_star, r_cap=r_cap, beta_mode=beta_mode, cw=cw,
    )


SCENARIOS: dict[int, ScenarioSpec] = {
    1: _spec(1, g_r=0.0, r0=25, beta_mode="zero", cw=5),
    2: _spec(2, g_r=0.0, r0=25, beta_mode="linear400", cw=5),
    3: _spec(3, g_r=0.018, r0=5, beta_mode="linear400", cw=5),
    4: _spec(4, g_r=0.018, r0=5, beta_mode="linear400", cw=10),
    5: _spec(5, g_r=0.018, r0=5, beta_mode="linear400", cw=5, t_star=92, r_cap=25),
    6: _spec(6, g_r=0.018, r0=5, beta_mode="linear400", cw=10, t_star=92, r_cap=25),
}


def ensemble_seeds(base_seed: int, size: int = ENSEMBLE_SIZE) -> list[int]:
    """Seeds {base, base+1, ...} so one integer reproduces the ensemble."""
    return [base_seed + i for i in range(size)]
