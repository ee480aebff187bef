"""Fixed-point inversion: convergence, certification, damping, trace
bookkeeping, and failure modes."""
from __future__ import annotations

import numpy as np
import pytest

from sphertrunc.errors import DomainError, NumericError
from sphertrunc.forward import forward_map
from sphertrunc.iterative import fixed_point_solve


def test_converges_and_certifies_residual(lam_example):
    for rho in (6.0, 12.0):
        mu = forward_map(rho, lam_example)
        lam, trace = fixed_point_solve(mu, rho, tol=1e-10)
        assert trace.converged
        assert trace.residuals[-1] <= 1e-10 * np.abs(mu).max()
        # the certified forward residual bounds the spectrum error loosely
        assert np.max(np.abs(lam - lam_example) / lam_example) < 1e-7
        # re-evaluating the map confirms the certificate independently
        back = forward_map(rho, lam, tol=1e-13)
        assert np.max(np.abs(back - mu)) <= 2e-10 * np.abs(mu).max()


def test_residual_history_shrinks(lam_example):
    mu = forward_map(6.0, lam_example)
    _, trace = fixed_point_solve(mu, 6.0, tol=1e-10)
    assert trace.steps == len(trace.residuals)
    assert trace.residuals[-1] < 1e-8 * trace.residuals[0]


def test_keep_iterates_records_path(lam_example):
    mu = forward_map(6.0, lam_example)
    lam, trace = fixed_point_solve(mu, 6.0, tol=1e-8, keep_iterates=True)
    assert len(trace.iterates) == trace.steps
    assert all(it.shape == lam.shape for it in trace.iterates)
    # the iteration starts from the truncated moments themselves
    assert np.array_equal(trace.iterates[0], mu)
    assert np.array_equal(trace.iterates[-1], lam)


def test_iterates_not_stored_by_default(lam_example):
    mu = forward_map(6.0, lam_example)
    _, trace = fixed_point_solve(mu, 6.0, tol=1e-8)
    assert trace.iterates == []


def test_budget_exhaustion_attaches_trace(lam_example):
    mu = forward_map(6.0, lam_example)
    with pytest.raises(NumericError) as exc:
        fixed_point_solve(mu, 6.0, tol=1e-10, max_iter=2)
    trace = exc.value.trace
    assert trace.steps == 2
    assert not trace.converged


def test_damping_converges_to_same_answer(lam_example):
    mu = forward_map(6.0, lam_example)
    lam_plain, tr_plain = fixed_point_solve(mu, 6.0, tol=1e-9)
    lam_damped, tr_damped = fixed_point_solve(mu, 6.0, tol=1e-9, damping=0.5)
    assert tr_damped.converged
    assert np.allclose(lam_damped, lam_plain, rtol=1e-7)
    assert tr_damped.steps >= tr_plain.steps  # half-steps cannot be faster here


def test_looser_tolerance_stops_earlier(lam_example):
    mu = forward_map(6.0, lam_example)
    _, tr_loose = fixed_point_solve(mu, 6.0, tol=1e-4)
    _, tr_tight = fixed_point_solve(mu, 6.0, tol=1e-10)
    assert tr_loose.steps < tr_tight.steps


def test_infeasible_moments_never_converge():
    # each component exceeds rho/(v+2): outside the image of the map
    mu = np.full(4, 1.1)
    with pytest.raises(NumericError) as exc:
        fixed_point_solve(mu, 6.0, tol=1e-8, max_iter=120)
    trace = exc.value.trace
    assert not trace.converged
    assert trace.residuals[-1] > 1e-3  # residual stalls, it does not sneak under


def test_argument_validation(lam_example):
    mu = forward_map(6.0, lam_example)
    with pytest.raises(DomainError):
        fixed_point_solve(mu, 0.0)
    with pytest.raises(DomainError):
        fixed_point_solve(mu, -3.0)
    with pytest.raises(DomainError):
        fixed_point_solve(mu, 6.0, damping=0.0)
    with pytest.raises(DomainError):
        fixed_point_solve(mu, 6.0, damping=1.5)
    with pytest.raises(DomainError):
        fixed_point_solve(np.array([0.2, -0.1]), 6.0)
    with pytest.raises(DomainError):
        fixed_point_solve(np.array([]), 6.0)


def test_deep_truncation_still_converges(lam_example):
    # rho = 4 truncates hard; the iteration slows but stays contractive
    mu = forward_map(4.0, lam_example)
    lam, trace = fixed_point_solve(mu, 4.0, tol=1e-8)
    assert trace.converged
    back = forward_map(4.0, lam, tol=1e-13)
    assert np.max(np.abs(back - mu)) <= 2e-8 * np.abs(mu).max()
