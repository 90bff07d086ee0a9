"""Shared fixtures: the four admissible families with |xi| and |a0| of order one."""

import pytest

from ch2exact import EmdenParams, SolutionCase, analyze


@pytest.fixture(scope="session")
def case_1a():
    # sigma=-1, xi<0, a0>0: compact support, collapse at s = 3*pi/4 * ... (theta=1/2)
    case = SolutionCase(sigma=-1, alpha=1.0, emden=EmdenParams(xi=-1.0, a0=1.0, a1=0.0))
    traj, report = analyze(case.emden)
    return case, traj, report


@pytest.fixture(scope="session")
def case_1b():
    # sigma=-1, xi>0, a0<0: full-line profile, global
    case = SolutionCase(sigma=-1, alpha=1.0, emden=EmdenParams(xi=1.0, a0=-1.0, a1=0.0))
    traj, report = analyze(case.emden, s_end=1000.0)
    return case, traj, report


@pytest.fixture(scope="session")
def case_2a():
    # sigma=+1, xi>0, a0>0: compact support, global spreading
    case = SolutionCase(sigma=+1, alpha=1.0, emden=EmdenParams(xi=1.0, a0=1.0, a1=0.0))
    traj, report = analyze(case.emden, s_end=1000.0)
    return case, traj, report


@pytest.fixture(scope="session")
def case_2b():
    # sigma=+1, xi<0, a0<0: full-line profile, collapse at s = sqrt(3) pi / 4
    case = SolutionCase(sigma=+1, alpha=1.0, emden=EmdenParams(xi=-3.0, a0=-1.0, a1=0.0))
    traj, report = analyze(case.emden)
    return case, traj, report


@pytest.fixture(scope="session")
def all_trajectories(case_1a, case_1b, case_2a, case_2b):
    """case_id -> (trajectory, report) for the four standard families."""
    return {
        "1a": case_1a[1:],
        "1b": case_1b[1:],
        "2a": case_2a[1:],
        "2b": case_2b[1:],
    }
