"""Shared generators and oracles for randomized tests (all seeded)."""

import itertools

import numpy as np

from spdperm import SpdTensor, UnitQuaternion, quaternion_to_rotation


def random_quaternion(rng) -> UnitQuaternion:
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return UnitQuaternion(*v)


def random_rotation(rng) -> np.ndarray:
    return quaternion_to_rotation(random_quaternion(rng))


def random_spd(rng, log_range=(-2.0, 2.0)) -> SpdTensor:
    """Well-conditioned random tensor: log-uniform spectrum, random frame."""
    lam = np.exp(rng.uniform(*log_range, size=3))
    r = random_rotation(rng)
    return SpdTensor.from_matrix(r @ np.diag(lam) @ r.T, symmetry_tol=1e-6)


def random_tensors(rng, n, **kwargs) -> list[SpdTensor]:
    return [random_spd(rng, **kwargs) for _ in range(n)]


def brute_force_mrpp_p(tensors, labels, measure, weights_rule="proportional"):
    """Independent two-group MRPP oracle: explicit loops, no engine code.

    Pair sums are nested loops, assignments are itertools.combinations,
    and the p-value is the count of assignments whose dispersion is <=
    the observed one divided by the number of assignments (the observed
    labeling is among them). Returns (observed, p, all_values).
    """
    n = len(tensors)
    labels = np.asarray(labels)
    ids = sorted(set(labels.tolist()))
    sizes = {g: int(np.sum(labels == g)) for g in ids}
    assert len(ids) == 2, "oracle handles two groups"
    g0, g1 = ids

    def dispersion(members):
        total, count = 0.0, 0
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                total += measure.pair(a, b)
                count += 1
        return total / count

    def statistic(assignment_g0):
        rest = [i for i in range(n) if i not in assignment_g0]
        d0 = dispersion([tensors[i] for i in assignment_g0])
        d1 = dispersion([tensors[i] for i in rest])
        if weights_rule == "proportional":
            w0, w1 = sizes[g0] / n, sizes[g1] / n
        else:
            w0 = w1 = 0.5
        return w0 * d0 + w1 * d1

    observed = statistic(tuple(np.flatnonzero(labels == g0).tolist()))
    values = [
        statistic(combo) for combo in itertools.combinations(range(n), sizes[g0])
    ]
    beats = sum(1 for v in values if v <= observed)
    return observed, beats / len(values), values


def clustered_tensors(rng, n, spread=0.2) -> list[SpdTensor]:
    """Tensors with similar spectra and frames in a small orientation cone.

    Mirrors the structure of a real cohort: orientation averaging is only
    well-posed (and order-independent) when frames cluster.
    """
    from spdperm import rotation_about

    base = random_rotation(rng)
    out = []
    for _ in range(n):
        lam = np.sort(np.exp(rng.uniform(-0.5, 0.5, size=3) + [1.0, 0.0, -1.0]))[::-1]
        axis = rng.standard_normal(3)
        r = base @ rotation_about(axis, rng.normal(0.0, spread))
        out.append(SpdTensor.from_matrix(r @ np.diag(lam) @ r.T, symmetry_tol=1e-6))
    return out
