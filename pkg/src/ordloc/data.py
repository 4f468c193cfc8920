"""Embedded benchmark data: the classical 50-point planar demand set.

The coordinates are transcribed once from the source figure's table and
frozen behind a checksum; worked-example weight presets live here too.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ordloc.model import (DemandSet, NIWeights, NormExponent,
                          OrderedMedianInstance, SAWeights)

EILON50 = np.array([
    (9.46, 9.36), (9.39, 6.44), (9.27, 1.49), (9.20, 8.69), (8.99, 2.45),
    (8.93, 7.00), (8.86, 8.74), (8.60, 0.53), (8.53, 7.04), (8.45, 0.69),
    (7.67, 4.17), (7.55, 5.79), (7.43, 1.61), (7.36, 4.03), (7.34, 1.38),
    (7.31, 1.61), (7.23, 7.05), (6.75, 5.57), (6.70, 2.77), (6.63, 5.23),
    (6.58, 4.49), (6.49, 6.22), (6.37, 7.02), (6.27, 3.66), (6.08, 1.34),
    (5.89, 8.06), (5.57, 4.60), (5.00, 9.00), (4.53, 7.87), (4.46, 7.91),
    (4.18, 3.74), (4.01, 0.31), (3.57, 1.99), (3.54, 7.06), (3.39, 5.65),
    (3.34, 4.01), (3.33, 5.78), (3.13, 1.92), (2.83, 9.88), (2.22, 4.35),
    (2.20, 1.12), (1.90, 8.35), (1.89, 0.77), (1.74, 1.37), (1.68, 6.45),
    (1.33, 8.89), (1.24, 6.69), (1.13, 5.25), (0.88, 1.02), (0.75, 4.98),
])
EILON50.setflags(write=False)

# sha256 of the canonical "x,y" comma/newline rendering with 2 decimals
EILON50_SHA256 = "104afd5939fa7e01dfab2dc3e60de54156489a10f6aab971d3c4e991bd07acf2"


def dataset_checksum(points=EILON50) -> str:
    text = "\n".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return hashlib.sha256(text.encode()).hexdigest()


def eilon_demand() -> DemandSet:
    return DemandSet(EILON50.copy())


def example_ni_instance() -> OrderedMedianInstance:
    """Worked two-facility non-interchangeable example (n=4, tau=2)."""
    pts = np.array([(9.46, 9.36), (8.93, 7.00), (2.20, 1.12), (1.33, 8.89)])
    lam = np.array([
        [147.31, 119.08],
        [24.44, 0.56],
        [24.16, 0.00],
        [10.77, 0.00],
    ])
    mu = np.zeros((2, 2))
    mu[0, 1] = 0.56
    w = NIWeights(omega=np.ones(4), lam=lam, mu=mu)
    return OrderedMedianInstance(DemandSet(pts), NormExponent(2, 1), 2, w)


EXAMPLE_NI_OBJECTIVE = 1704.55
EXAMPLE_NI_FACILITIES = np.array([(5.24, 6.41), (5.61, 5.44)])


def example_sa_instance() -> OrderedMedianInstance:
    """Worked single-allocation example (n=10, p=3, tau=7/5)."""
    pts = np.array([
        (9.46, 9.36), (7.43, 1.61), (6.27, 3.66), (5.00, 9.00), (2.83, 9.88),
        (2.20, 1.12), (1.90, 8.35), (1.68, 6.45), (1.24, 6.69), (0.75, 4.98),
    ])
    lam = np.array([2.25, 1.70, 1.14, 1.11, 1.06, 1.03, 1.01, 1.01, 1.00, 1.00])
    return OrderedMedianInstance(DemandSet(pts), NormExponent(7, 5), 3,
                                 SAWeights(lam))


EXAMPLE_SA_OBJECTIVE = 30.1460
EXAMPLE_SA_FACILITIES = np.array([
    (6.199838, 1.580148), (5.000041, 9.360006), (1.440000, 6.550015),
])

# published objective values on the 50-point set, keyed (problem, p, tau_str)
RESULTS_TABLE = {
    ("median", 2, "3/2"): 150.955,
    ("median", 2, "2"): 135.5222,
    ("median", 2, "3"): 130.856,
    ("median", 5, "3/2"): 78.6074,
    ("median", 5, "2"): 72.2369,
    ("median", 5, "3"): 68.1791,
    ("median", 10, "3/2"): 45.0525,
    ("median", 10, "2"): 41.6851,
    ("median", 10, "3"): 39.7222,
    ("median", 15, "3/2"): 30.0543,
    ("median", 15, "2"): 27.6282,
    ("median", 15, "3"): 26.6047,
    ("median", 30, "3/2"): 9.9488,
    ("median", 30, "2"): 8.7963,
    ("median", 30, "3"): 8.6995,
    ("center", 2, "3/2"): 4.9452,
    ("center", 2, "2"): 4.8209,
    ("center", 2, "3"): 4.788,
    ("center", 5, "3/2"): 2.8831,
    ("center", 5, "2"): 2.661,
    ("center", 5, "3"): 2.5094,
    ("center", 10, "3/2"): 1.6929,
    ("center", 10, "2"): 1.6113,
    ("center", 10, "3"): 1.595,
    ("center", 15, "3/2"): 1.1139,
    ("center", 15, "2"): 1.0717,
    ("center", 15, "3"): 1.053,
    ("center", 30, "3/2"): 1.008,
    ("center", 30, "2"): 0.9192,
    ("center", 30, "3"): 0.8508,
    ("kcentrum25", 2, "3/2"): 100.8474,
    ("kcentrum25", 2, "2"): 95.0892,
    ("kcentrum25", 2, "3"): 89.0238,
    ("kcentrum25", 5, "3/2"): 53.4995,
    ("kcentrum25", 5, "2"): 49.6932,
    ("kcentrum25", 5, "3"): 46.9844,
    ("kcentrum25", 10, "3/2"): 30.7137,
    ("kcentrum25", 10, "2"): 28.9017,
    ("kcentrum25", 10, "3"): 27.5376,
    ("kcentrum25", 15, "3/2"): 22.4165,
    ("kcentrum25", 15, "2"): 20.6536,
    ("kcentrum25", 15, "3"): 20.8544,
    ("kcentrum25", 30, "3/2"): 9.0806,
    ("kcentrum25", 30, "2"): 8.521662,
    ("kcentrum25", 30, "3"): 8.001695,
}

FIGURE4_2MEDIAN = np.array([(7.28, 4.71), (2.67, 5.10)])
FIGURE4_2CENTER = np.array([(8.77, 4.58), (3.39, 5.09)])
