"""Regenerate prices.csv: five correlated assets, GARCH(1,1) volatility and
a volatility regime change half way through. Deterministic."""

import csv
import datetime as dt
from pathlib import Path

import numpy as np

ASSETS = ["EQ_US", "EQ_EU", "BOND_10Y", "BOND_2Y", "GOLD"]
DAYS = 720
SEED = 20240611

rng = np.random.default_rng(SEED)
corr = np.array(
    [
        [1.0, 0.7, -0.2, -0.1, 0.1],
        [0.7, 1.0, -0.15, -0.1, 0.1],
        [-0.2, -0.15, 1.0, 0.6, 0.2],
        [-0.1, -0.1, 0.6, 1.0, 0.1],
        [0.1, 0.1, 0.2, 0.1, 1.0],
    ]
)
chol = np.linalg.cholesky(corr)
drift = np.array([4e-4, 3e-4, 1e-4, 6e-5, 2e-4])
base_vol = np.array([0.011, 0.012, 0.004, 0.0015, 0.009])
omega_frac, a, b = 0.05, 0.08, 0.87

var = base_vol**2
prices = np.array([100.0, 80.0, 100.0, 100.0, 1500.0])
start = dt.date(2019, 1, 2)
dates, rows = [], []
day = start
for t in range(DAYS):
    while day.weekday() >= 5:
        day += dt.timedelta(days=1)
    regime = 1.0 if t < DAYS // 2 else 1.6
    z = chol @ rng.standard_normal(5)
    eps = np.sqrt(var) * z * regime
    prices = prices * (1.0 + drift + eps)
    var = omega_frac * base_vol**2 + a * (eps / regime) ** 2 + b * var
    dates.append(day.isoformat())
    rows.append(prices.copy())
    day += dt.timedelta(days=1)

out = Path(__file__).with_name("prices.csv")
with out.open("w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["date", *ASSETS])
    for d, p in zip(dates, rows):
        w.writerow([d, *(f"{x:.6f}" for x in p)])
