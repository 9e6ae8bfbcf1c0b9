"""Shared fixtures: configs, cached Monte Carlo batches and analytic curves.

The expensive Monte Carlo runs are cached per (config, trials, seed, window)
for the whole session so acceptance criteria and property tests share trial
sets instead of resampling.
"""

import numpy as np
import pytest

import mmwhcn
from mmwhcn import coverage as cov
from mmwhcn import montecarlo as mc

MASTER_SEED = 20260808
TAU_DB_9 = tuple(np.linspace(-10.0, 30.0, 9))
WORKERS = 2


@pytest.fixture(scope="session")
def cfg_setup1():
    return mmwhcn.preset("setup1")


@pytest.fixture(scope="session")
def cfg_setup2():
    return mmwhcn.preset("setup2")


@pytest.fixture(scope="session")
def mc_store():
    """Memoized trial batches: mc_store(cfg, trials, seed, window) -> TrialBatch."""
    cache = {}

    def get(cfg, trials, seed=MASTER_SEED, window=None):
        key = (cfg.fingerprint(), trials, seed, window)
        if key not in cache:
            cache[key] = mc.run_trials(cfg, trials, seed, window, workers=WORKERS)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def curve_store():
    """Memoized analytic coverage grids: curve_store(cfg, approach, taus_db)."""
    cache = {}

    def get(cfg, approach, taus_db=TAU_DB_9, opts=None):
        key = (cfg.fingerprint(), str(approach), tuple(taus_db), repr(opts))
        if key not in cache:
            taus = 10.0 ** (np.asarray(taus_db) / 10.0)
            probs, diag = cov.coverage_probabilities(
                cfg, approach, taus, opts, workers=WORKERS
            )
            cache[key] = (probs, diag)
        return cache[key]

    return get
