"""Exact replay checks over per-slot trace files.

Two inequalities tie consecutive snapshots to offered service and arrivals
(all per node i and commodity c; mu values are offered, not sent):

one step:   U(t+1) <= max(U(t) - mu_out(t), 0) + mu_in(t) + a(t)

K steps:    U(t0+K) <= max(U(t0) - sum mu_out, 0) + sum mu_in + sum a,
            sums over slots t0 .. t0+K-1.

Both hold exactly, with equality-aware integer arithmetic, whenever offered
rates are integral (the K-step form follows from the one-step form by
induction).  The trace is sparse: a missing (slot, node, commodity) row
means queue, offered rates and arrivals were all zero there.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from .simulation import TRACE_COLUMNS


@dataclass(frozen=True)
class Violation:
    slot: int  # the slot whose transition (or window start) failed
    node: int
    commodity: int
    lhs: float
    rhs: float
    window: int = 1

    def __str__(self) -> str:
        return (
            f"(node {self.node}, commodity {self.commodity}) slot {self.slot} "
            f"window {self.window}: {self.lhs} > {self.rhs}"
        )


def load_trace(path) -> pd.DataFrame:
    df = pd.read_csv(path)
    if tuple(df.columns) != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace columns {tuple(df.columns)}")
    return df


def _dense_group(group: pd.DataFrame, horizon: int):
    """Dense per-slot arrays for one (node, commodity) cell; the trailing
    snapshot row at slot == horizon contributes only its queue length."""
    q = np.zeros(horizon + 1)
    out = np.zeros(horizon + 1)
    inn = np.zeros(horizon + 1)
    arr = np.zeros(horizon + 1)
    slots = group["slot"].to_numpy()
    q[slots] = group["queue_len"].to_numpy()
    out[slots] = group["offered_out"].to_numpy()
    inn[slots] = group["offered_in"].to_numpy()
    arr[slots] = group["arrivals"].to_numpy()
    return q, out, inn, arr


def check_one_step(df: pd.DataFrame) -> List[Violation]:
    """Verify the one-step inequality at every (node, commodity, slot)."""
    if df.empty:
        return []
    horizon = int(df["slot"].max())
    violations: List[Violation] = []
    for (node, commodity), group in df.groupby(["node", "commodity"]):
        q, out, inn, arr = _dense_group(group, horizon)
        rhs = np.maximum(q[:-1] - out[:-1], 0.0) + inn[:-1] + arr[:-1]
        bad = np.flatnonzero(q[1:] > rhs)
        for t in bad.tolist():
            violations.append(
                Violation(int(t), int(node), int(commodity), float(q[t + 1]), float(rhs[t]))
            )
    return violations


def check_k_step(
    df: pd.DataFrame,
    n_samples: int = 1000,
    max_k: int = 50,
    seed: int = 0,
) -> List[Violation]:
    """Verify the K-step inequality on random (t0, K) windows.

    Every sampled window is checked at every active (node, commodity) cell;
    cells absent from the trace are all-zero everywhere and trivially pass.
    """
    if df.empty:
        return []
    horizon = int(df["slot"].max())
    if horizon < 1:
        raise ValueError("trace too short")
    rng = random.Random(seed)
    samples = []
    for _ in range(n_samples):
        t0 = rng.randrange(0, horizon)
        k = rng.randint(1, min(max_k, horizon - t0))
        samples.append((t0, k))
    t0s = np.array([s[0] for s in samples])
    ks = np.array([s[1] for s in samples])
    ends = t0s + ks

    violations: List[Violation] = []
    for (node, commodity), group in df.groupby(["node", "commodity"]):
        q, out, inn, arr = _dense_group(group, horizon)
        cum_out = np.concatenate(([0.0], np.cumsum(out[:-1])))
        cum_in = np.concatenate(([0.0], np.cumsum(inn[:-1])))
        cum_arr = np.concatenate(([0.0], np.cumsum(arr[:-1])))
        rhs = (
            np.maximum(q[t0s] - (cum_out[ends] - cum_out[t0s]), 0.0)
            + (cum_in[ends] - cum_in[t0s])
            + (cum_arr[ends] - cum_arr[t0s])
        )
        lhs = q[ends]
        bad = np.flatnonzero(lhs > rhs)
        for s in bad.tolist():
            violations.append(
                Violation(
                    int(t0s[s]), int(node), int(commodity),
                    float(lhs[s]), float(rhs[s]), window=int(ks[s]),
                )
            )
    return violations
