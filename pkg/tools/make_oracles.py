"""Independent reference values frozen into tests/data.

Run once before the implementations they check; nothing here imports cachebench.
"""

import json
import random
from pathlib import Path

import mpmath as mp

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"
mp.mp.dps = 40


def t_density(x, nu):
    return mp.gamma((nu + 1) / 2) / (mp.sqrt(nu * mp.pi) * mp.gamma(nu / 2)) * (1 + x * x / nu) ** (-(nu + 1) / 2)


def welch_oracle(x, y):
    x = [mp.mpf(v) for v in x]
    y = [mp.mpf(v) for v in y]
    nx, ny = len(x), len(y)
    mx, my = sum(x) / nx, sum(y) / ny
    vx = sum((v - mx) ** 2 for v in x) / (nx - 1)
    vy = sum((v - my) ** 2 for v in y) / (ny - 1)
    se2 = vx / nx + vy / ny
    t = (mx - my) / mp.sqrt(se2)
    df = se2 ** 2 / ((vx / nx) ** 2 / (nx - 1) + (vy / ny) ** 2 / (ny - 1))
    tail = mp.quad(lambda s: t_density(s, df), [abs(t), abs(t) + 10, mp.inf])
    return float(t), float(df), float(2 * tail)


def welch_cases(n_pairs=120, seed=20240501):
    rng = random.Random(seed)
    cases = []
    for _ in range(n_pairs):
        nx, ny = rng.randint(2, 60), rng.randint(2, 60)
        sx, sy = rng.uniform(0.2, 5.0), rng.uniform(0.2, 5.0)
        shift = rng.choice([0.0, rng.uniform(-3, 3), rng.uniform(-0.5, 0.5)])
        x = [round(rng.gauss(10.0, sx), 6) for _ in range(nx)]
        y = [round(rng.gauss(10.0 + shift, sy), 6) for _ in range(ny)]
        t, df, p = welch_oracle(x, y)
        cases.append({"x": x, "y": y, "t": t, "df": df, "p": p})
    return cases


def prime_residency(trials=1000, ways=4, seed=7):
    """Fraction of runs in which priming ways-1 lines ten times into a full
    random-replacement set leaves all of them resident.  Standalone model:
    the set starts full of unrelated lines, hits do nothing, a miss replaces a
    uniformly chosen way."""
    rng = random.Random(seed)
    ok = 0
    for _ in range(trials):
        slots = [("old", w) for w in range(ways)]
        ev = [("ev", k) for k in range(ways - 1)]
        for _ in range(10):
            for line in ev:
                if line not in slots:
                    slots[rng.randrange(ways)] = line
        ok += all(line in slots for line in ev)
    return ok / trials


def unlock_eviction_bound(ways=4, fills=64, trials=2000, seed=11):
    """Smallest number of random-replacement misses after which an unlocked
    line has been evicted in at least 99.9% of runs (empirical, padded 2x)."""
    rng = random.Random(seed)
    worst = 0
    for _ in range(trials):
        n = 0
        while True:
            n += 1
            if rng.randrange(ways) == 0:
                break
        worst = max(worst, n)
    return {"ways": ways, "p_evict_per_miss": 1 / ways,
            "fills_for_1e-6_survival": int(mp.ceil(mp.log(1e-6) / mp.log(1 - mp.mpf(1) / ways))),
            "empirical_worst": worst}


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "welch_oracle.json").write_text(json.dumps(welch_cases(), indent=1))
    prime = {w: prime_residency(ways=w) for w in (2, 4, 8, 16)}
    (OUT / "prime_oracle.json").write_text(json.dumps({
        "trials": 1000,
        "repeats": 10,
        "full_residency_fraction": prime,
        "threshold": 0.95,
    }, indent=1))
    (OUT / "unlock_oracle.json").write_text(json.dumps(unlock_eviction_bound(), indent=1))
    print(prime)
