from __future__ import annotations

import numpy as np
import pytest

from vg2s.instance import (GenConfig, Instance, ParseError, generate_random,
                           parse_orlib, parse_taillard)


class TestInstanceInvariants:
    def test_minimal_instance(self):
        inst = Instance(n=1, m=1, ops=(((0, 5),),))
        assert inst.num_ops == 1
        assert inst.duration(0, 0) == 5
        assert inst.load_lower_bound() == 5

    def test_rejects_duplicate_machine(self):
        with pytest.raises(ValueError, match="permutation"):
            Instance(n=1, m=2, ops=(((0, 3), (0, 2)),))

    def test_rejects_nonpositive_duration(self):
        with pytest.raises(ValueError, match="duration"):
            Instance(n=1, m=1, ops=(((0, 0),),))

    def test_rejects_wrong_job_count(self):
        with pytest.raises(ValueError):
            Instance(n=2, m=1, ops=(((0, 1),),))

    def test_totals(self, two_by_two):
        assert two_by_two.job_total(0) == 5
        assert two_by_two.job_total(1) == 6
        assert two_by_two.machine_total(0) == 7
        assert two_by_two.machine_total(1) == 4
        assert two_by_two.load_lower_bound() == 7

    def test_json_round_trip(self, two_by_two):
        assert Instance.from_json(two_by_two.to_json()) == two_by_two


class TestParseOrlib:
    def test_minimal(self):
        inst = parse_orlib("1 1\n0 5")
        assert (inst.n, inst.m) == (1, 1)
        assert inst.ops == (((0, 5),),)

    def test_ft06_header_and_first_job(self, ft06):
        assert (ft06.n, ft06.m) == (6, 6)
        assert ft06.ops[0] == ((2, 1), (0, 3), (1, 6), (3, 7), (5, 3), (4, 6))

    def test_duplicate_machine_names_line(self):
        with pytest.raises(ParseError, match="line 2.*duplicate machine 0"):
            parse_orlib("2 2\n0 3 0 2\n1 1 0 1")

    def test_bad_header(self):
        with pytest.raises(ParseError, match="header"):
            parse_orlib("2\n0 1")

    def test_truncated_job_line(self):
        with pytest.raises(ParseError, match="fields"):
            parse_orlib("1 2\n0 3")

    def test_nonpositive_duration(self):
        with pytest.raises(ParseError, match="duration"):
            parse_orlib("1 1\n0 0")

    def test_non_integer_token(self):
        with pytest.raises(ParseError, match="non-integer"):
            parse_orlib("1 1\n0 x")

    def test_round_trip_via_json(self, ft06):
        assert Instance.from_json(ft06.to_json()) == ft06


class TestParseTaillard:
    def test_layout(self):
        text = "2 2\n3 2\n2 4\n1 2\n2 1\n"
        inst = parse_taillard(text)
        assert inst.ops == (((0, 3), (1, 2)), ((1, 2), (0, 4)))

    def test_uniform_durations(self):
        text = "2 2\n1 1\n1 1\n1 2\n1 2\n"
        inst = parse_taillard(text)
        assert all(p == 1 for job in inst.ops for _, p in job)

    def test_zero_machine_index_rejected(self):
        text = "1 2\n3 2\n0 1\n"
        with pytest.raises(ParseError, match="1-indexed"):
            parse_taillard(text)

    def test_truncated_matrix(self):
        with pytest.raises(ParseError, match="matrix rows"):
            parse_taillard("2 2\n3 2\n")


class TestGenerateRandom:
    def test_deterministic_per_seed(self):
        cfg = GenConfig()
        a = generate_random(cfg, np.random.default_rng(123))
        b = generate_random(cfg, np.random.default_rng(123))
        assert a == b

    def test_size_bounds(self):
        cfg = GenConfig()
        rng = np.random.default_rng(9)
        for _ in range(200):
            inst = generate_random(cfg, rng)
            assert 5 <= inst.m <= 9
            assert inst.m <= inst.n <= 9
            assert all(1 <= p <= 99 for job in inst.ops for _, p in job)

    def test_machine_count_frequencies(self):
        # m ~ DU(5,9): each of the five values within 4 sigma of p = 1/5
        cfg = GenConfig()
        rng = np.random.default_rng(1)
        draws = 10_000
        counts = np.zeros(5)
        for _ in range(draws):
            counts[generate_random(cfg, rng).m - 5] += 1
        sigma = np.sqrt(draws * 0.2 * 0.8)
        assert np.all(np.abs(counts - draws * 0.2) < 4 * sigma)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            GenConfig(m_lo=5, m_hi=4)
        with pytest.raises(ValueError):
            GenConfig(p_lo=0)
