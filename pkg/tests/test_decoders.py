import itertools

import numpy as np
import pytest

from qpolar import construction as cs
from qpolar import decoders as dec
from qpolar import gf2
from qpolar.errors import DegenerateCodeError, ResourceError, SizeError
from qpolar.gf2 import BitVector

P_GRID = (0.001, 0.01, 0.075, 0.1, 0.25)


def small_layouts(max_n=4):
    out = []
    for alg in cs.ALGORITHMS:
        for n in range(1, max_n + 1):
            for p in P_GRID:
                try:
                    out.append(cs.construct(n, p, alg))
                except DegenerateCodeError:
                    pass
    return out


SMALL = small_layouts()


def coset_oracle(layout):
    """Brute force over all 2^N errors: min weight and min-weight candidates per syndrome."""
    S = layout.S_G.to_array().astype(np.int64)
    N = layout.N
    best = {}
    for w in range(N + 1):
        for combo in itertools.combinations(range(N), w):
            e = np.zeros(N, dtype=np.int64)
            e[list(combo)] = 1
            s = tuple(((S @ e) % 2).tolist())
            if s not in best:
                best[s] = (w, [combo])
            elif best[s][0] == w:
                best[s][1].append(combo)
    return best


def syndrome_index(s):
    return sum(bit << i for i, bit in enumerate(s))


def n1_layout():
    return cs.construct_quality_ranking(1, 0.01)


class TestSyndromeTable:
    def test_n1_example(self):
        lay = n1_layout()
        assert lay.frozen_indices == (1,)
        table = dec.build_syndrome_table(lay, "first_lexicographic")
        assert len(table) == 2
        assert dec.lookup_decode(table, BitVector.from_string("0")) == BitVector.from_string("00")
        assert dec.lookup_decode(table, BitVector.from_string("1")) == BitVector.from_string("10")
        assert table.tie_counts.tolist() == [1, 2]

    def test_random_tie_uniform(self):
        lay = n1_layout()
        picks = [
            dec.build_syndrome_table(lay, "random", seed=s)[BitVector.from_string("1")].to_string()
            for s in range(400)
        ]
        assert set(picks) == {"10", "01"}
        assert 150 < picks.count("10") < 250

    def test_seed_determinism(self):
        lay = cs.construct_quality_ranking(4, 0.075)
        a = dec.build_syndrome_table(lay, "random", seed=11)
        b = dec.build_syndrome_table(lay, "random", seed=11)
        assert np.array_equal(a.recoveries, b.recoveries)

    @pytest.mark.parametrize("lay", SMALL, ids=lambda l: l.layout_id)
    def test_optimal_against_bruteforce(self, lay):
        oracle = coset_oracle(lay)
        assert len(oracle) == 2 ** lay.n_checks
        first = dec.build_syndrome_table(lay, "first_lexicographic")
        rand = dec.build_syndrome_table(lay, "random", seed=5)
        for s, (w, cands) in oracle.items():
            idx = syndrome_index(s)
            assert first.min_weights[idx] == w
            assert first.tie_counts[idx] == len(cands)
            got = np.flatnonzero(first.recovery_bits(idx)[0]).tolist()
            assert tuple(got) == cands[0]
            got_r = tuple(np.flatnonzero(rand.recovery_bits(idx)[0]).tolist())
            assert got_r in cands

    def test_recoveries_reproduce_syndrome(self):
        lay = cs.construct_block_selection(5, 0.075)
        table = dec.build_syndrome_table(lay, "random", seed=0)
        assert len(table) == 2**16
        rec = table.recovery_bits(np.arange(len(table)))
        assert np.array_equal(dec.syndrome_indices(lay, rec), np.arange(len(table), dtype=np.uint64))

    def test_zero_syndrome_zero_recovery(self):
        for lay in SMALL[:5]:
            table = dec.build_syndrome_table(lay)
            assert table.recoveries[0] == 0 and table.min_weights[0] == 0

    def test_lookup_length_mismatch(self):
        table = dec.build_syndrome_table(n1_layout())
        with pytest.raises(SizeError):
            dec.lookup_decode(table, BitVector.from_string("01"))

    def test_round_trip_random_errors(self):
        lay = cs.construct_quality_ranking(4, 0.075)
        table = dec.build_syndrome_table(lay)
        rng = np.random.default_rng(0)
        for _ in range(50):
            e = BitVector.from_bits(rng.integers(0, 2, lay.N))
            s = lay.syndrome(e)
            assert lay.syndrome(dec.lookup_decode(table, s)) == s

    def test_budget(self):
        with pytest.raises(ResourceError, match="N = 64"):
            dec.build_syndrome_table(cs.construct_quality_ranking(6, 0.01))
        lay = cs.construct_quality_ranking(4, 0.075)
        with pytest.raises(ResourceError, match="128"):
            dec.build_syndrome_table(lay, max_entries=64)

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            dec.build_syndrome_table(n1_layout(), "coin")

    def test_binary_dump(self):
        lay = cs.construct_quality_ranking(4, 0.075)
        table = dec.build_syndrome_table(lay, "first_lexicographic")
        blob = table.to_bytes()
        assert blob[:4] == b"QPST"
        assert len(blob) == 16 + len(table) * 2
        back = dec.SyndromeTable.from_bytes(blob)
        assert (back.N, back.k, back.tie_policy) == (16, lay.k, "first_lexicographic")
        assert np.array_equal(back.recoveries, table.recoveries)
        # record 1 is the recovery of syndrome index 1, qubit 1 in bit 0 of byte 0
        rec = table.recovery_bits(1)[0]
        assert int.from_bytes(blob[18:20], "little") == sum(int(b) << j for j, b in enumerate(rec))

    def test_binary_dump_rejects_garbage(self):
        with pytest.raises(ValueError):
            dec.SyndromeTable.from_bytes(b"XXXX" + bytes(12))


class TestFlipDecoder:
    def test_zero_error(self):
        lay = cs.construct_quality_ranking(3, 0.075)
        res = dec.FlipDecoder(lay).decode_error(np.zeros(8), "random", np.random.default_rng(0))
        assert res.success and res.iterations == 0 and not res.e_hat.any()

    def test_n1_example(self):
        lay = n1_layout()
        seen = set()
        for seed in range(20):
            e_hat = dec.flip_decode(lay, BitVector.from_string("10"), seed=seed)
            assert e_hat.weight() == 1
            assert lay.syndrome(e_hat) == lay.syndrome(BitVector.from_string("10"))
            seen.add(e_hat.to_string())
        assert seen == {"10", "01"}
        assert dec.flip_decode(lay, BitVector.from_string("10"), tie_policy="first_lexicographic").to_string() == "10"

    @pytest.mark.parametrize("lay", SMALL, ids=lambda l: l.layout_id)
    def test_single_bit_errors_cleared(self, lay):
        decoder = dec.FlipDecoder(lay)
        for j in range(1, lay.N + 1):
            e = BitVector.unit(lay.N, j)
            for seed in range(3):
                e_hat = dec.flip_decode(lay, e, seed=seed, decoder=decoder)
                assert not lay.syndrome(e ^ e_hat).any(), (j, seed)

    def test_determinism(self):
        lay = cs.construct_quality_ranking(5, 0.075)
        e = BitVector.from_bits(np.random.default_rng(1).random(32) < 0.2)
        assert dec.flip_decode(lay, e, seed=9) == dec.flip_decode(lay, e, seed=9)

    @pytest.mark.parametrize("lay", SMALL[::3], ids=lambda l: l.layout_id)
    def test_termination_and_consistency(self, lay):
        decoder = dec.FlipDecoder(lay)
        rng = np.random.default_rng(3)
        S = lay.S_G.to_array()
        for _ in range(100):
            e = (rng.random(lay.N) < 0.2).astype(np.uint8)
            res = decoder.decode_error(e, "random", rng)
            assert res.iterations <= lay.N
            assert res.e_hat.sum() == res.iterations
            if res.success:
                assert np.array_equal((S @ res.e_hat) % 2, (S @ e) % 2)

    def test_reduced_matrix_spans_checks(self):
        lay = cs.construct_quality_ranking(6, 0.075)
        red = dec.FlipDecoder(lay).reduced
        assert gf2.rank(lay.S_G.vstack(red)) == lay.n_checks
        assert red.row_weights().sum() <= lay.S_G.row_weights().sum()

    def test_random_policy_needs_generator(self):
        with pytest.raises(ValueError):
            dec.FlipDecoder(n1_layout()).decode_syndrome(np.array([1]), "random", None)

    def test_length_check(self):
        with pytest.raises(SizeError):
            dec.flip_decode(n1_layout(), BitVector.from_string("101"))
