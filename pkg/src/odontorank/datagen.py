"""Seeded synthetic AM/PM odontogram pairs."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .core import AM_TABLE, CODES, N_TEETH, Odontogram, Role, ToothCode
from .evaluation import PairedCaseSet

CODE_CHARS = "".join(c.value for c in CODES)
_N = CODE_CHARS.index("N")

# Codes a tooth may turn into over time: the Possible cells of its AM row.
TRANSITIONS: dict[int, tuple[int, ...]] = {
    CODE_CHARS.index(a): tuple(CODE_CHARS.index(p) for p in row[2] if p != a)
    for a, row in AM_TABLE.items() if a != "N"
}


@dataclass(frozen=True)
class GenConfig:
    n_cases: int
    populations: tuple[tuple[str, float], ...] = (("POP", 1.0),)
    # V, F, S, X, I, P, N
    code_distribution: tuple[float, ...] = (0.62, 0.16, 0.05, 0.10, 0.02, 0.05, 0.0)
    progression: float = 3.0  # expected tooth-state changes between AM and PM
    n_rate: float = 0.05  # per-tooth probability a PM observation is N
    am_n_rate: float = 0.02
    # Per-case spread of treatment load; 0 gives every case the same distribution.
    treatment_spread: float = 0.0
    seed: int = 0

    def __post_init__(self):
        d = np.asarray(self.code_distribution, dtype=np.float64)
        if self.n_cases < 1:
            raise ValueError("n_cases must be at least 1")
        if d.shape != (7,) or np.any(d < 0) or abs(d.sum() - 1) > 1e-9:
            raise ValueError("code_distribution needs 7 probabilities summing to 1")
        for name in ("n_rate", "am_n_rate", "treatment_spread"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.progression < 0 or self.progression > N_TEETH:
            raise ValueError("progression must lie in [0, 32]")
        props = [p for _, p in self.populations]
        if not self.populations or min(props) < 0 or sum(props) <= 0:
            raise ValueError("populations need non-negative proportions")

    def population_counts(self) -> list[tuple[str, int]]:
        """Largest-remainder apportionment of n_cases over populations."""
        props = np.array([p for _, p in self.populations], dtype=np.float64)
        exact = self.n_cases * props / props.sum()
        counts = np.floor(exact + 1e-9).astype(int)
        rest = self.n_cases - counts.sum()
        for i in np.argsort(-(exact - counts), kind="stable")[:rest]:
            counts[i] += 1
        return [(label, int(c)) for (label, _), c in zip(self.populations, counts)]

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown generator keys: {', '.join(sorted(unknown))}")
        if isinstance(d.get("populations"), str):
            pops = []
            for item in d["populations"].split(","):
                label, _, prop = item.strip().partition(":")
                pops.append((label.strip(), float(prop or 1)))
            d["populations"] = tuple(pops)
        if isinstance(d.get("code_distribution"), str):
            d["code_distribution"] = tuple(float(x) for x in d["code_distribution"].split(","))
        for k in ("n_cases", "seed"):
            if k in d:
                d[k] = int(d[k])
        for k in ("progression", "n_rate", "am_n_rate", "treatment_spread"):
            if k in d:
                d[k] = float(d[k])
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "n_cases": self.n_cases,
            "populations": ",".join(f"{l}:{p!r}" for l, p in self.populations),
            "code_distribution": ",".join(repr(float(x)) for x in self.code_distribution),
            "progression": self.progression, "n_rate": self.n_rate,
            "am_n_rate": self.am_n_rate, "treatment_spread": self.treatment_spread,
            "seed": self.seed,
        }


def _case_distribution(cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    base = np.asarray(cfg.code_distribution, dtype=np.float64)
    if cfg.treatment_spread == 0:
        return base
    # Scale non-virgin mass by a per-case load factor, keeping N untouched.
    load = np.exp(cfg.treatment_spread * 2.0 * rng.standard_normal())
    d = base.copy()
    v = CODE_CHARS.index("V")
    treated = [i for i in range(7) if i not in (v, _N)]
    mass = d[treated].sum()
    new_mass = min(mass * load, 1 - d[_N] - 1e-6)
    if mass > 0:
        d[treated] *= new_mass / mass
        d[v] = 1 - d[_N] - new_mass
    return d


def _progress(am: np.ndarray, cfg: GenConfig, rng: np.random.Generator,
              dist: np.ndarray) -> np.ndarray:
    pm = am.copy()
    p_change = cfg.progression / N_TEETH
    change = rng.random(N_TEETH) < p_change
    for t in range(N_TEETH):
        code = int(am[t])
        if code == _N:
            # Unknown AM state: draw the real state from the non-N distribution.
            d = dist.copy()
            d[_N] = 0
            pm[t] = rng.choice(7, p=d / d.sum()) if d.sum() > 0 else 0
        elif change[t]:
            targets = TRANSITIONS[code]
            pm[t] = targets[int(rng.integers(len(targets)))]
    return pm


def generate(cfg: GenConfig) -> PairedCaseSet:
    """AM records from the code distribution; PM records by plausible progression."""
    rng = np.random.default_rng(cfg.seed)
    pairs = []
    for label, count in cfg.population_counts():
        for k in range(count):
            dist = _case_distribution(cfg, rng)
            am = rng.choice(7, size=N_TEETH, p=dist)
            pm = _progress(am, cfg, rng, dist)
            am = np.where(rng.random(N_TEETH) < cfg.am_n_rate, _N, am)
            pm = np.where(rng.random(N_TEETH) < cfg.n_rate, _N, pm)
            case_id = f"{label}{k + 1:04d}"
            pairs.append((
                Odontogram(case_id, Role.AM, label, tuple(CODES[i] for i in am)),
                Odontogram(case_id, Role.PM, label, tuple(CODES[i] for i in pm)),
            ))
    return PairedCaseSet(pairs)


# Mostly virgin dentitions: many near-identical candidates per case.
LARGE_DISTRIBUTION = (0.84, 0.07, 0.02, 0.04, 0.01, 0.02, 0.0)


def benchmark_configs(seed: int) -> dict[str, GenConfig]:
    def sub(k: int) -> int:
        return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])

    return {
        "easy": GenConfig(n_cases=60, progression=1.0, n_rate=0.0, am_n_rate=0.0,
                          seed=sub(0)),
        "noisy": GenConfig(n_cases=60, progression=3.0, n_rate=0.4, am_n_rate=0.2,
                           treatment_spread=0.5, seed=sub(1)),
        "large": GenConfig(n_cases=215, populations=(("IL", 128.0), ("CL", 87.0)),
                           code_distribution=LARGE_DISTRIBUTION, progression=5.0,
                           n_rate=0.05, am_n_rate=0.03, treatment_spread=0.5, seed=sub(2)),
    }


def generate_benchmark_suite(seed: int) -> dict[str, PairedCaseSet]:
    return {name: generate(cfg) for name, cfg in benchmark_configs(seed).items()}
