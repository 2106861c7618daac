"""Dataset splitting strategies.

Four strategies over molecule lists: seeded random shuffling, Bemis-Murcko
scaffold grouping (groups are never divided), ascending molecular weight,
and label-sorted stratification that deals sorted indices across subsets so
each spans the label range. All strategies are deterministic given a seed;
plans serialize to JSON byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .canonical import canonical_smiles
from .molecule import Molecule, molecular_weight
from .rng import Rng, derive
from .scaffold import murcko_scaffold

STRATEGIES = ("random", "scaffold", "weight", "stratified")


class SplitError(ValueError):
    pass


@dataclass
class SplitPlan:
    train: list[int]
    val: list[int]
    test: list[int]

    def to_json(self) -> str:
        return json.dumps(
            {"train": self.train, "val": self.val, "test": self.test},
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        data = json.loads(text)
        return cls(train=data["train"], val=data["val"], test=data["test"])


def _check_fractions(fractions) -> tuple[float, float, float]:
    if len(fractions) != 3:
        raise SplitError("fractions must be (train, val, test)")
    f_train, f_val, f_test = (float(f) for f in fractions)
    for f in (f_train, f_val, f_test):
        if f <= 0:
            raise SplitError(f"fractions must be positive, got {fractions}")
    if abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise SplitError(f"fractions must sum to 1, got {fractions}")
    return f_train, f_val, f_test


def _largest_remainder_quotas(n: int, fractions) -> list[int]:
    """Integer subset sizes summing to n, each within 1 of its target."""
    raw = [f * n for f in fractions]
    quotas = [int(x) for x in raw]
    shortfall = n - sum(quotas)
    by_remainder = sorted(range(len(raw)), key=lambda k: (raw[k] - quotas[k], -k), reverse=True)
    for k in by_remainder[:shortfall]:
        quotas[k] += 1
    return quotas


def _cut(ordered: list[int], f_train: float, f_val: float) -> SplitPlan:
    n = len(ordered)
    n_train = int(round(f_train * n))
    n_val = int(round(f_val * n))
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    return SplitPlan(
        train=ordered[:n_train],
        val=ordered[n_train : n_train + n_val],
        test=ordered[n_train + n_val :],
    )


def scaffold_key(mol: Molecule) -> str:
    """Canonical SMILES of the Bemis-Murcko scaffold ('' for acyclic)."""
    return canonical_smiles(murcko_scaffold(mol))


def split(
    molecules: list[Molecule],
    strategy: str = "scaffold",
    fractions=(0.8, 0.1, 0.1),
    seed: int = 0,
    labels=None,
) -> SplitPlan:
    """Partition dataset indices into train/val/test.

    ``labels`` is required for the stratified strategy (one value per
    molecule). Ties in weight or label order break by dataset index.
    """
    if strategy not in STRATEGIES:
        raise SplitError(f"unknown split strategy '{strategy}', expected one of {STRATEGIES}")
    n = len(molecules)
    if n == 0:
        raise SplitError("cannot split an empty dataset")
    f_train, f_val, f_test = _check_fractions(fractions)

    if strategy == "random":
        order = list(range(n))
        Rng(derive(seed, 0x5EED)).shuffle(order)
        return _cut(order, f_train, f_val)

    if strategy == "weight":
        order = sorted(range(n), key=lambda i: (molecular_weight(molecules[i]), i))
        return _cut(order, f_train, f_val)

    if strategy == "stratified":
        if labels is None:
            raise SplitError("stratified split requires labels")
        if len(labels) != n:
            raise SplitError(f"got {len(labels)} labels for {n} molecules")
        order = sorted(range(n), key=lambda i: (float(labels[i]), i))
        quotas = _largest_remainder_quotas(n, (f_train, f_val, f_test))
        assign: list[int | None] = [None] * n
        remaining = list(quotas)
        # pin the minority subsets to both extremes so every subset spans
        # the label range, then deal the interior proportionally
        if n >= 8 and remaining[1] >= 2 and remaining[2] >= 2:
            for pos, k in ((0, 1), (1, 2), (n - 2, 2), (n - 1, 1)):
                assign[pos] = k
                remaining[k] -= 1
        acc = [0.0, 0.0, 0.0]
        interior = sum(remaining)
        fracs = [r / interior if interior else 0.0 for r in remaining]
        for pos in range(n):
            if assign[pos] is not None:
                continue
            for k in range(3):
                acc[k] += fracs[k]
            k_best = max(
                (k for k in range(3) if remaining[k] > 0),
                key=lambda k: (acc[k], -k),
            )
            acc[k_best] -= 1.0
            remaining[k_best] -= 1
            assign[pos] = k_best
        plan = SplitPlan([], [], [])
        buckets = (plan.train, plan.val, plan.test)
        for pos, idx in enumerate(order):
            buckets[assign[pos]].append(idx)
        return plan

    # scaffold strategy: group, sort groups large-to-small, fill greedily
    groups: dict[str, list[int]] = {}
    for i, mol in enumerate(molecules):
        groups.setdefault(scaffold_key(mol), []).append(i)
    ordered_groups = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    train_cutoff = f_train * n
    val_cutoff = (f_train + f_val) * n
    plan = SplitPlan([], [], [])
    for _, members in ordered_groups:
        if len(plan.train) + len(members) <= train_cutoff + 1e-9:
            plan.train.extend(members)
        elif len(plan.train) + len(plan.val) + len(members) <= val_cutoff + 1e-9:
            plan.val.extend(members)
        else:
            plan.test.extend(members)
    return plan


def k_fold(n: int, k: int, seed: int = 0) -> list[SplitPlan]:
    """k cross-validation plans; fold i's validation sets partition range(n)."""
    if k < 2:
        raise SplitError(f"k must be at least 2, got {k}")
    if k > n:
        raise SplitError(f"k ({k}) cannot exceed dataset size ({n})")
    order = list(range(n))
    Rng(derive(seed, 0xF01D)).shuffle(order)
    plans = []
    for i in range(k):
        val = sorted(order[i::k])
        val_set = set(val)
        train = [j for j in range(n) if j not in val_set]
        plans.append(SplitPlan(train=train, val=val, test=[]))
    return plans
