import numpy as np
import pytest

from groupsos.sdp import (FEASIBLE, INFEASIBLE, OPTIMAL, TROUBLE, Constraint, InfeasibilityCertificate,
                          SdpProblem, SdpSettings, SdpSolution, lmi_problem, solve, verify_certificate,
                          verify_solution)


def _rand_herm(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_feasible(rng, n=4, m=5):
    """Constraints built to hold at a random PD X0, plus Tr X = Tr X0 so the
    best margin is bounded."""
    C = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    X0 = C @ C.conj().T + 0.1 * np.eye(n)
    As = [_rand_herm(rng, n) for _ in range(m)] + [np.eye(n, dtype=complex)]
    cons = [Constraint([A], float(np.real(np.trace(A @ X0)))) for A in As]
    return SdpProblem([n], cons), X0


def test_minimize_trace_example():
    p = SdpProblem([1], [Constraint([np.array([[1.0]])], 1.0)], objective=[np.array([[1.0]])], mode="minimize")
    s = solve(p)
    assert s.status == OPTIMAL
    assert s.value == pytest.approx(1.0, abs=1e-7)
    assert np.allclose(s.X[0], [[1.0]], atol=1e-7)
    assert verify_solution(p, s).passed


def test_negative_trace_infeasible_example():
    p = SdpProblem([2], [Constraint([np.eye(2)], -1.0)])
    s = solve(p)
    assert s.status == INFEASIBLE
    assert verify_solution(p, s).passed
    y = s.certificate.y
    assert y[0] == pytest.approx(-1.0)


def test_hand_built_and_corrupted_certificates():
    p = SdpProblem([2], [Constraint([np.eye(2)], -1.0)])
    assert verify_certificate(p, np.array([-1.0])).passed
    rep = verify_certificate(p, np.array([1.0]))
    assert not rep.passed
    failed = {c.name: c.slack for c in rep.failures()}
    assert any(k.startswith("block 0") for k in failed)
    assert failed["y.b >= 1"] < 0


def test_trouble_solution_never_verifies():
    p = SdpProblem([1], [Constraint([np.array([[1.0]])], 1.0)])
    assert not verify_solution(p, SdpSolution(TROUBLE, diagnostic="x")).passed


def test_random_feasible_instances():
    rng = np.random.default_rng(0)
    st = SdpSettings(debug=True)
    for _ in range(200):
        p, X0 = random_feasible(rng, n=int(rng.integers(2, 6)), m=int(rng.integers(1, 6)))
        s = solve(p, st)
        assert s.status == FEASIBLE, s.diagnostic
        assert s.margin >= np.linalg.eigvalsh(X0)[0] - 1e-6
        assert verify_solution(p, s, st).passed


def test_random_infeasible_instances():
    rng = np.random.default_rng(1)
    st = SdpSettings(debug=True)
    for _ in range(200):
        p, _ = random_feasible(rng, n=int(rng.integers(2, 6)), m=int(rng.integers(1, 6)))
        n = p.blocks[0]
        p = SdpProblem(p.blocks, p.constraints[:-1] + [Constraint([np.eye(n)], -1.0)])
        s = solve(p, st)
        assert s.status == INFEASIBLE
        assert verify_certificate(p, s.certificate.y, st.cert_tol).passed


def test_scaling_invariance():
    rng = np.random.default_rng(2)
    for _ in range(20):
        p, _ = random_feasible(rng)
        c = float(rng.uniform(0.01, 100))
        q = SdpProblem(p.blocks, [Constraint([c * a for a in k.coeffs], c * k.rhs) for k in p.constraints])
        s1, s2 = solve(p), solve(q)
        assert s1.status == s2.status == FEASIBLE
        assert s1.margin == pytest.approx(s2.margin, abs=1e-8)


def test_dependent_rows_presolve():
    A = np.array([[1.0, 0], [0, 0]])
    ok = SdpProblem([2], [Constraint([A], 1.0), Constraint([2 * A], 2.0), Constraint([np.eye(2)], 3.0)])
    assert solve(ok).status == FEASIBLE
    bad = SdpProblem([2], [Constraint([A], 1.0), Constraint([2 * A], 3.0)])
    s = solve(bad)
    assert s.status == INFEASIBLE
    assert verify_certificate(bad, s.certificate.y).passed


def test_multi_block_and_complex():
    # X1 - X2 block traces tied together; complex off-diagonal pin
    E = np.array([[0, 1j], [-1j, 0]]) / 2
    p = SdpProblem([2, 1], [Constraint([np.eye(2), -np.eye(1)], 1.0),
                            Constraint([E, None], 0.3)])
    s = solve(p)
    assert s.status == FEASIBLE and verify_solution(p, s).passed
    x = s.X[0]
    assert np.real(np.trace(E @ x)) == pytest.approx(0.3, abs=1e-8)


def test_lmi_problem_margin():
    # F0 + w F1 with F0 = I, F1 = [[0,1],[1,0]]: best margin 1 at w = 0
    F0, F1 = np.eye(2), np.array([[0.0, 1], [1, 0]])
    s = solve(lmi_problem(F0, [F1]))
    assert s.status == OPTIMAL and s.value == pytest.approx(1.0, abs=1e-7)
    # pinned indefinite pencil: best margin -1
    s = solve(lmi_problem(np.array([[1.0, 2], [2, 1]]), []))
    assert s.value == pytest.approx(-1.0, abs=1e-7)


def test_certificate_dataclass_round_trip():
    p = SdpProblem([1], [Constraint([np.array([[1.0]])], -2.0)])
    s = SdpSolution(INFEASIBLE, certificate=InfeasibilityCertificate(np.array([-0.5])))
    assert verify_solution(p, s).passed
