import pytest
from hypothesis import given
from hypothesis import strategies as st

from trigmon.baseline import QuantileBuffer, publish_summary
from trigmon.collector import CollectorState, EmptyWindowError, StaleMessageError, ingest, quantile, summary_cdf, window_cdf
from trigmon.messages import Message, TimeValuePair
from trigmon.stats import ecdf, ks_distance


def msg(agent_id, seq, pairs, kind="full_resample"):
    return Message(agent_id, seq, kind, pairs=tuple(TimeValuePair(t, v) for t, v in pairs))


class TestIngest:
    def test_keeps_all_inside_window(self):
        c = ingest(CollectorState(10), msg(0, 1, [(1, 1), (2, 2), (3, 3)]), now=3)
        assert c.per_agent[0] == [(1, 1), (2, 2), (3, 3)]

    def test_evicts_old(self):
        c = ingest(CollectorState(5), msg(0, 1, [(1, 1)]), now=1)
        ingest(c, msg(1, 1, [(7, 2)]), now=7)
        assert c.per_agent[0] == []

    def test_duplicate_rejected_and_counted(self):
        c = ingest(CollectorState(5), msg(0, 4, [(1, 1)]), now=1)
        with pytest.raises(StaleMessageError, match="duplicate or reordered message"):
            ingest(c, msg(0, 4, [(2, 1)]), now=2)
        assert c.rejected == 1
        assert c.per_agent[0] == [(1, 1)]

    def test_merge_out_of_order_pairs(self):
        c = ingest(CollectorState(100), msg(0, 1, [(5, 1), (9, 1)]), now=9)
        ingest(c, msg(0, 2, [(7, 2)], "post_change"), now=10)
        assert [t for t, _ in c.per_agent[0]] == [5, 7, 9]


class TestWindowCdf:
    def test_single_agent(self):
        c = ingest(CollectorState(100), msg(0, 1, [(i, i) for i in range(1, 11)]), now=10)
        assert window_cdf(c, 10)(5) == 0.5

    def test_union(self):
        c = ingest(CollectorState(100), msg(0, 1, [(1, 1), (2, 2)]), now=2)
        ingest(c, msg(1, 1, [(1, 3), (2, 4)]), now=2)
        assert window_cdf(c, 2)(2) == 0.5

    def test_empty(self):
        c = ingest(CollectorState(5), msg(0, 1, [(1, 1)]), now=1)
        with pytest.raises(EmptyWindowError, match="no data in window"):
            window_cdf(c, 100)

    def test_closed_window_edge(self):
        c = ingest(CollectorState(5), msg(0, 1, [(5, 1), (6, 2)]), now=6)
        assert window_cdf(c, 10).n == 2
        assert window_cdf(c, 10.5).n == 1

    @given(st.lists(st.tuples(st.integers(0, 50), st.floats(-10, 10)), min_size=1, max_size=30),
           st.lists(st.tuples(st.integers(0, 50), st.floats(-10, 10)), min_size=1, max_size=30))
    def test_commutative_across_agents(self, a, b):
        a, b = sorted(a), sorted(b)
        m1, m2 = msg(0, 1, a), msg(1, 1, b)
        now = 50
        c1 = ingest(ingest(CollectorState(20), m1, now), m2, now)
        c2 = ingest(ingest(CollectorState(20), m2, now), m1, now)
        try:
            f1 = window_cdf(c1, now)
        except EmptyWindowError:
            with pytest.raises(EmptyWindowError):
                window_cdf(c2, now)
            return
        assert f1 == window_cdf(c2, now)
        expected = [v for t, v in a + b if t >= now - 20]
        assert ks_distance(f1, ecdf(expected)) == 0

    def test_eviction_never_leaks(self, rng):
        c = CollectorState(10)
        seq = 0
        for now in range(0, 100, 3):
            seq += 1
            ingest(c, msg(0, seq, [(now - rng.integers(0, 15), 0.0)]), now)
            for store in c.per_agent.values():
                assert all(t >= now - 10 for t, _ in store)


class TestSummaryCdf:
    def test_single_summary(self):
        c = CollectorState(60)
        q = QuantileBuffer((0.25, 0.5, 0.75), (1.0, 2.0, 3.0), 1)
        ingest(c, publish_summary(q, 0, 1), now=30)
        f = summary_cdf(c, 30)
        assert f(0.5) == 0.0
        assert f(1.0) == pytest.approx(0.375)
        assert f(2.5) == pytest.approx(0.625)
        assert f(3.0) == 1.0

    def test_summary_expires(self):
        c = CollectorState(10)
        ingest(c, publish_summary(QuantileBuffer((0.5,), (1.0,), 1), 0, 1), now=0)
        with pytest.raises(EmptyWindowError):
            summary_cdf(c, 20)


class TestQuantile:
    def test_examples(self):
        f = ecdf([1, 2, 3, 4])
        assert quantile(f, 0.5) == 2
        assert quantile(f, 1.0) == 4
        assert quantile(f, 0.0) == 1

    def test_bad_p(self):
        with pytest.raises(ValueError):
            quantile(ecdf([1]), 1.5)

    def test_decimal_probes(self):
        # 0.3 * 10 is 3.0000000000000004 in binary floating point
        assert quantile(ecdf(range(1, 11)), 0.3) == 3

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40), st.floats(0, 1))
    def test_consistency(self, xs, p):
        f = ecdf(xs)
        for v in xs:
            assert quantile(f, f(v)) <= v
        assert f(quantile(f, p)) >= p - 1e-12
