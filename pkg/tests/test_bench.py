import pytest

from gmap import bench


def test_parse_range():
    assert bench.parse_range("20:200:20") == list(range(20, 201, 20))
    assert bench.parse_range("7") == [7]
    assert bench.parse_range("3:5") == [3, 4, 5]
    with pytest.raises(ValueError):
        bench.parse_range("5:3:1")


def test_records_and_csv():
    recs = bench.run("label-count", [6, 8], repetitions=2, seed=1)
    assert [(r["M"]) for r in recs] == [6, 6, 8, 8]
    assert all(r["max_l_states"] <= r["M"] + 1 for r in recs)
    text = bench.to_csv(recs)
    assert text.splitlines()[0] == ",".join(bench.HEADER)


def test_records_independent_of_range():
    a = bench.run("exclude", [10, 12], seed=4, timing=False)
    b = bench.run("exclude", [12], seed=4, timing=False)
    assert a[1] == b[0]


def test_fit_slope_exact():
    recs = [{"M": m, "seconds": 0.001 * m ** 2} for m in (10, 20, 40, 80)]
    assert bench.fit_slope(recs) == pytest.approx(2.0)


def test_fit_needs_two_sizes():
    with pytest.raises(ValueError):
        bench.fit_slope([{"M": 5, "seconds": 1.0}])


@pytest.mark.parametrize("task", sorted(bench.TASKS))
def test_every_task_runs(task):
    (rec,) = bench.run(task, [8])
    assert rec["messages"] >= 1
