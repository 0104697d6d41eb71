import json
import math

import numpy as np
import pytest

from qpolar import construction as cs
from qpolar import gf2
from qpolar.errors import DegenerateCodeError, DomainError, SizeError
from qpolar.polarization import bitflip_capacity

P_GRID = (0.001, 0.01, 0.075, 0.1, 0.25)


def layouts(max_n=6):
    for alg in cs.ALGORITHMS:
        for n in range(1, max_n + 1):
            for p in P_GRID:
                try:
                    yield cs.construct(n, p, alg)
                except DegenerateCodeError:
                    continue


class TestPaths:
    def test_examples(self):
        T, C = cs.TARGET, cs.CONTROL
        assert cs.path_descriptor(2, 1).nodes == (T, T)
        assert cs.path_descriptor(2, 2).nodes == (C, T)
        assert cs.path_descriptor(2, 3).nodes == (T, C)
        assert cs.path_descriptor(2, 4).nodes == (C, C)

    def test_counts(self):
        d = cs.path_descriptor(5, 12)
        assert d.n_target + d.n_control == 5
        assert d.n_target == 5 - (12 - 1).bit_count()

    def test_index_range(self):
        with pytest.raises(SizeError):
            cs.path_descriptor(2, 5)
        with pytest.raises(SizeError):
            cs.stabilizer_weight(2, 0)

    @pytest.mark.parametrize("n", range(0, 13))
    def test_paths_unique(self, n):
        paths = {cs.path_descriptor(n, i).nodes for i in range(1, (1 << n) + 1)}
        assert len(paths) == 1 << n

    @pytest.mark.parametrize("n", range(1, 9))
    def test_single_node_pairs(self, n):
        pairs = cs.single_node_pairs(n)
        assert len(pairs) == n * (1 << (n - 1))
        for a, b in pairs:
            pa, pb = cs.path_descriptor(n, a).nodes, cs.path_descriptor(n, b).nodes
            diff = [m for m in range(n) if pa[m] != pb[m]]
            assert len(diff) == 1
            m = diff[0]
            assert pa[m] == cs.TARGET and pb[m] == cs.CONTROL
            assert pa[:m] == pb[:m] and pa[m + 1 :] == pb[m + 1 :]
            assert cs.path_descriptor(n, a).n_target == cs.path_descriptor(n, b).n_target + 1


class TestWeights:
    def test_examples(self):
        assert (cs.stabilizer_weight(2, 1), cs.logicalx_weight(2, 1)) == (4, 1)
        assert (cs.stabilizer_weight(2, 4), cs.logicalx_weight(2, 4)) == (1, 4)

    @pytest.mark.parametrize("n", range(0, 11))
    def test_weight_formulas_match_generator(self, n):
        g = gf2.kron_power_F(n)
        N = 1 << n
        stab = [cs.stabilizer_weight(n, i) for i in range(1, N + 1)]
        logx = [cs.logicalx_weight(n, i) for i in range(1, N + 1)]
        assert g.row_weights().tolist() == stab
        assert g.T.row_weights().tolist() == logx
        assert all(s * x == N for s, x in zip(stab, logx))

    def test_spectrum_examples(self):
        assert cs.weight_spectrum(2).stab_counts == {1: 1, 2: 2, 4: 1}
        assert cs.weight_spectrum(0).stab_counts == {1: 1}
        assert cs.weight_spectrum(5).stab_counts == {1: 1, 2: 5, 4: 10, 8: 10, 16: 5, 32: 1}

    @pytest.mark.parametrize("n", range(0, 13))
    def test_spectrum_matches_measurement(self, n):
        theory, measured = cs.weight_spectrum(n), cs.measured_weight_spectrum(n)
        assert theory.stab_counts == measured.stab_counts
        assert theory.logx_counts == measured.logx_counts
        assert sum(theory.stab_counts.values()) == 1 << n


class TestQualityRanking:
    def test_n2(self):
        lay = cs.construct_quality_ranking(2, 0.1)
        assert lay.k == 2
        assert lay.logical_indices == (4, 3)
        assert lay.frozen_indices == (2, 1)
        assert lay.S_G == gf2.BitMatrix.from_strings(["0101", "1111"])
        assert lay.L_G == gf2.BitMatrix.from_strings(["1111", "1010"])

    def test_n5_k(self):
        assert cs.construct_quality_ranking(5, 0.01).k == 29

    def test_degenerate(self):
        with pytest.raises(DegenerateCodeError) as info:
            cs.construct_quality_ranking(1, 0.25)
        assert info.value.k == 0

    @pytest.mark.parametrize("p", [0.0, 0.5, 0.7])
    def test_design_range(self, p):
        with pytest.raises(DomainError):
            cs.construct_quality_ranking(3, p)

    def test_n3_golden_distance(self):
        lay = cs.construct_quality_ranking(3, 0.1)
        assert lay.logical_indices == (8, 7, 6, 4)
        assert cs.effective_x_distance_bruteforce(lay) == 4
        assert cs.effective_x_distance(lay) == cs.DistanceResult(4, exact=True)

    def test_rate_within_floor(self):
        for n in range(1, 11):
            for p in P_GRID:
                try:
                    lay = cs.construct_quality_ranking(n, p)
                except DegenerateCodeError:
                    continue
                assert abs(lay.k / lay.N - bitflip_capacity(p)) <= 1 / lay.N


class TestBlockSelection:
    def test_n2(self):
        lay = cs.construct_block_selection(2, 0.1)
        assert lay.k == 1
        assert lay.logical_indices == (4,)
        assert set(lay.frozen_indices) == {1, 2, 3}
        assert lay.metadata["x"] == 1

    def test_n3(self):
        lay = cs.construct_block_selection(3, 0.1)
        assert lay.metadata["capacity_k"] == 4
        assert lay.metadata["x"] == 1
        assert lay.n_checks == 7 and lay.k == 1

    def test_rate_below_quality_ranking(self):
        for n in range(2, 9):
            for p in P_GRID:
                try:
                    block = cs.construct_block_selection(n, p)
                except DegenerateCodeError:
                    continue
                assert block.k <= cs.capacity_k(n, p)
                quality = cs.construct_quality_ranking(n, p)
                assert set(block.frozen_indices) >= {
                    i for i in quality.frozen_indices if cs.stabilizer_weight(n, i) >= 2 ** block.metadata["x"]
                }

    def test_min_row_weight(self):
        for lay in layouts(8):
            if lay.algorithm == "block_selection":
                x = lay.metadata["x"]
                assert lay.min_logical_row_weight() == 2 ** (lay.n - x + 1)

    def test_logical_weight_order(self):
        order = cs.order_by_logical_weight(3).order
        w = [cs.logicalx_weight(3, i) for i in order]
        assert w == sorted(w, reverse=True)
        assert order[0] == 8


class TestLayoutInvariants:
    @pytest.mark.parametrize("lay", list(layouts(7)), ids=lambda l: l.layout_id)
    def test_structure(self, lay):
        assert sorted(lay.logical_indices + lay.frozen_indices) == list(range(1, lay.N + 1))
        assert gf2.rank(lay.S_G) == lay.N - lay.k
        assert gf2.rank(lay.L_G) == lay.k
        assert not (lay.S_G @ lay.L_G.T).words.any()
        g = gf2.kron_power_F(lay.n)
        for r, i in enumerate(lay.frozen_indices):
            assert lay.S_G.row(r) == g.row(i - 1)
        gt = g.T
        for r, i in enumerate(lay.logical_indices):
            assert lay.L_G.row(r) == gt.row(i - 1)

    def test_json_roundtrip(self):
        lay = cs.construct_block_selection(4, 0.01)
        doc = json.loads(lay.to_json())
        assert {"n", "N", "k", "p", "algorithm", "logical_indices", "frozen_indices"} <= doc.keys()
        assert gf2.parse_matrix(doc["S_G"]) == lay.S_G
        back = cs.PolarCodeLayout.from_json(lay.to_json())
        assert back.S_G == lay.S_G and back.L_G == lay.L_G and back.k == lay.k

    def test_json_rejects_tampered_matrix(self):
        doc = json.loads(cs.construct_quality_ranking(2, 0.1).to_json())
        doc["S_G"] = "2 4\n1111\n1111\n"
        with pytest.raises(ValueError):
            cs.PolarCodeLayout.from_dict(doc)

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            cs.construct(3, 0.1, "bogus")


class TestDistance:
    def test_single_logical(self):
        lay = cs.construct_block_selection(2, 0.1)
        assert cs.effective_x_distance(lay).value == 4

    @pytest.mark.parametrize("lay", [l for l in layouts(4) if l.k <= 12], ids=lambda l: l.layout_id)
    def test_gray_walk_matches_bruteforce(self, lay):
        assert cs.effective_x_distance(lay).value == cs.effective_x_distance_bruteforce(lay)

    def test_bound_for_large_k(self):
        lay = cs.construct_quality_ranking(5, 0.01)
        res = cs.effective_x_distance(lay, max_k=10)
        assert not res.exact
        assert res.value == lay.min_logical_row_weight()

    def test_never_above_min_row_weight(self):
        for lay in layouts(5):
            if lay.k <= 16:
                assert cs.effective_x_distance(lay).value <= lay.min_logical_row_weight()
