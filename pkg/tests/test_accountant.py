import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpsql.accountant import Budget, charge
from dpsql.errors import BudgetExhausted, ConfigError


def test_sequential_charges_then_exhaustion():
    b = Budget(1.0)
    charge(b, 0.4)
    charge(b, 0.4)
    before = b.snapshot()
    with pytest.raises(BudgetExhausted):
        charge(b, 0.4)
    assert b.snapshot() == before
    assert b.epsilon_spent == pytest.approx(0.8)


def test_exact_total_is_affordable():
    b = Budget(1.0)
    for _ in range(10):
        charge(b, 0.1)
    assert b.epsilon_spent == pytest.approx(1.0)


@pytest.mark.parametrize("eps,delta", [(0, 0), (-1, 0), (math.inf, 0), (math.nan, 0), (0.1, -0.1), (0.1, 1.0)])
def test_invalid_charges(eps, delta):
    b = Budget(1.0, 0.5)
    with pytest.raises(ValueError):
        charge(b, eps, delta)
    assert not b.ledger


def test_delta_is_budgeted_too():
    b = Budget(10.0, 1e-6)
    charge(b, 1.0, 1e-6)
    with pytest.raises(BudgetExhausted):
        charge(b, 1.0, 1e-9)


@pytest.mark.parametrize("eps,delta", [(0, 0), (math.inf, 0), (1, 1)])
def test_invalid_totals(eps, delta):
    with pytest.raises(ValueError):
        Budget(eps, delta)


def test_csv_round_trip(tmp_path):
    b = Budget(2.0, 1e-5)
    charge(b, 0.5, 0.0, fingerprint="aa", mechanism="LaplaceGS")
    charge(b, 0.25, 1e-6, fingerprint="bb", mechanism="LaplaceGS", outcome="rejected")
    path = tmp_path / "ledger.csv"
    b.to_csv(path)
    assert path.read_text().splitlines()[0] == "fingerprint,epsilon,delta,mechanism,outcome"
    back = Budget.from_csv(path, 2.0, 1e-5)
    assert [(e.fingerprint, e.epsilon, e.delta, e.mechanism, e.outcome) for e in back.ledger] == [
        (e.fingerprint, e.epsilon, e.delta, e.mechanism, e.outcome) for e in b.ledger
    ]


def test_append_keeps_one_header(tmp_path):
    b = Budget(1.0)
    charge(b, 0.1, fingerprint="x")
    path = tmp_path / "l.csv"
    b.append_csv(path, b.ledger)
    b.append_csv(path, b.ledger)
    assert path.read_text().count("fingerprint") == 1
    assert len(Budget.from_csv(path, 1.0).ledger) == 2


def test_from_csv_missing_file_is_empty(tmp_path):
    assert Budget.from_csv(tmp_path / "none.csv", 1.0).epsilon_spent == 0


@pytest.mark.parametrize("text,err", [
    ("a,b\n", ConfigError),
    ("fingerprint,epsilon,delta,mechanism,outcome\nx,abc,0,m,answered\n", ConfigError),
    ("fingerprint,epsilon,delta,mechanism,outcome\nx,2.0,0,m,answered\n", BudgetExhausted),
])
def test_from_csv_errors(tmp_path, text, err):
    path = tmp_path / "l.csv"
    path.write_text(text)
    with pytest.raises(err):
        Budget.from_csv(path, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 5.0), st.lists(st.floats(0.001, 1.0), max_size=60))
def test_spend_never_exceeds_total(total, charges):
    b = Budget(total)
    accepted = []
    for eps in charges:
        try:
            charge(b, eps)
            accepted.append(eps)
        except BudgetExhausted:
            pass
        assert b.epsilon_spent <= b.epsilon_total
    assert math.isclose(b.epsilon_spent, math.fsum(accepted))
