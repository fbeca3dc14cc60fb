import numpy as np

from src.speccoc.workers import THREADS_ENV, ordered_map, pool_size, task_seed


def test_pool_size_prefers_request(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert pool_size(5) == 5
    assert pool_size() == 3


def test_pool_size_ignores_bad_env(monkeypatch, caplog):
    monkeypatch.setenv(THREADS_ENV, "many")
    assert 1 <= pool_size() <= 8
    assert THREADS_ENV in caplog.text


def test_ordered_map_keeps_input_order():
    def work(i, x):
        return i, x * x

    out = ordered_map(work, list(range(40)), threads=4)
    assert out == [(i, i * i) for i in range(40)]


def test_task_seeds_are_independent_and_stable():
    a = np.random.default_rng(task_seed(7, 0)).random(4)
    b = np.random.default_rng(task_seed(7, 1)).random(4)
    again = np.random.default_rng(task_seed(7, 0)).random(4)
    assert not np.allclose(a, b)
    assert np.array_equal(a, again)


def test_results_do_not_depend_on_thread_count():
    def draw(i, _):
        return float(np.random.default_rng(task_seed(11, i)).normal())

    items = [None] * 16
    assert ordered_map(draw, items, threads=1) == ordered_map(draw, items, threads=6)
