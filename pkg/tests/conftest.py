"""Shared fixtures: the walks every module is exercised against."""

from fractions import Fraction

import pytest

import centerwalk as cw


@pytest.fixture(scope="session")
def counting():
    return cw.Measure.counting()


@pytest.fixture(scope="session")
def rotation3():
    return cw.rotation_kernel(3)


@pytest.fixture(scope="session")
def rotation3_dec():
    return cw.CycleDecomposition(((cw.Cycle((0, 1, 2, 0)), Fraction(1)),))


def make_zwalk(radius):
    """The +1 (prob 2/3) / -2 (prob 1/3) walk on Z, materialized on a ball."""
    return cw.step_kernel({1: Fraction(2, 3), -2: Fraction(1, 3)}, radius=radius)


def make_zwalk_dec(kernel):
    """Translated 3-cycles (x, x+1, x+2, x), weight 1/3, clipped to the window."""
    entries = []
    for x in sorted(kernel.window):
        cyc = (x, x + 1, x + 2, x)
        if all(v in kernel.window for v in cyc):
            entries.append((cw.Cycle(cyc), Fraction(1, 3)))
    return cw.CycleDecomposition(tuple(entries))


@pytest.fixture(scope="session")
def zwalk():
    return make_zwalk(30)


@pytest.fixture(scope="session")
def zwalk_dec(zwalk):
    return make_zwalk_dec(zwalk)


@pytest.fixture(scope="session")
def srw():
    return cw.step_kernel({1: Fraction(1, 2), -1: Fraction(1, 2)}, radius=25)
