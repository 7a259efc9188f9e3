import pytest

from overspec import turing
from overspec.errors import InputError
from overspec.fixtures import TM_FIXTURES, fixture_tm


@pytest.mark.parametrize("name", sorted(TM_FIXTURES))
def test_fixture_halting_times(name):
    _, w, t = TM_FIXTURES[name]
    assert turing.halting_time(fixture_tm(name), w, 500) == t


def test_scanner_time_grows_with_input():
    tm = turing.scanner_machine()
    assert [turing.halting_time(tm, "1" * k, 50) for k in range(4)] == [1, 2, 3, 4]


def test_run_stops_at_cap():
    assert turing.run(turing.runaway_machine(), "", 25) == (False, 25)
    assert turing.run(turing.chain_machine(3), "", 2) == (False, 2)
    assert turing.run(turing.chain_machine(3), "", 3) == (True, 3)


def test_encode_decode_round_trip():
    tm = turing.shuttle_machine()
    assert turing.decode(tm.encode()) == tm
    assert turing.TmDescriptor.from_json(tm.to_json()) == tm


def test_partial_transition_table_rejected():
    obj = turing.chain_machine(2).to_json()
    del obj["transitions"]["q0"]["1"]
    with pytest.raises(InputError, match="no transition"):
        turing.TmDescriptor.from_json(obj)


def test_bad_input_symbol():
    with pytest.raises(InputError, match="tape alphabet"):
        turing.run(turing.chain_machine(1), "a", 5)


def test_load_rejects_garbage(tmp_path):
    bad = tmp_path / "tm.json"
    bad.write_text("{")
    with pytest.raises(InputError):
        turing.TmDescriptor.load(bad)
