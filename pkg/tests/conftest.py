"""Shared fixtures and oracle helpers."""
from __future__ import annotations

import numpy as np
import pytest

from qlut.params import DataTable, derive_params


def random_table(rng: np.random.Generator, N: int, b: int = 1) -> DataTable:
    words = tuple(int(w) for w in rng.integers(0, 1 << b, size=N))
    return DataTable(words=words, b=b)


def lam_gamma_grid(N: int):
    """All valid (lambda, gamma) power-of-two pairs for a memory size."""
    lams = []
    lam = 1
    while lam <= N:
        gam = 1
        while gam <= lam:
            lams.append((lam, gam))
            gam *= 2
        lam *= 2
    return lams


def classical_lookup(table: DataTable, address: int, b: int = 1) -> int:
    """Independent lookup oracle: plain table indexing."""
    word = table.words[address]
    return word & ((1 << b) - 1)


def masked_stage2_cells(table: DataTable, params, address: int) -> list[int]:
    """Expected cell contents after Stage II for a basis address.

    Eq.-(2)-style XOR accumulation restricted to the activated CNOT tree:
    q'_j = sum_i q_i x_{lam*i+j} lands only on the gamma positions whose tree
    index matches the middle address bits; other cells stay zero.
    """
    n, d, dp = params.n, params.d, params.d_prime
    prefix = address >> (n - d) if d else 0
    middle = (address >> (n - d - dp)) & ((1 << dp) - 1) if dp else 0
    cells = [0] * params.lam
    for j in range(params.lam):
        if dp and (j >> (params.tree_depth - dp)) != middle:
            continue
        cells[j] = table.bit(params.lam * prefix + j, 0)
    return cells


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def fig11_params():
    """The running example: N=16, lambda=4, gamma=2."""
    return derive_params(16, 4, 2)


@pytest.fixture
def small_tables(rng):
    return {N: random_table(rng, N) for N in (1, 2, 4, 8, 16)}
