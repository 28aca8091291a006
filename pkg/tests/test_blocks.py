import numpy as np
import pytest

from blockcd.blocks import (BlockPartition, FlopCounter, TraceRecord,
                            block_slice, charge_flops, cost_charge,
                            gradient_charge, make_uniform_partition,
                            prox_charge, read_trace, write_trace)


def test_uniform_partition_paper_setup():
    part = make_uniform_partition(2000, 100)
    assert part.num_blocks == 100
    assert part.block_sizes == tuple([20] * 100)
    assert part.total_dim == 2000


def test_uniform_partition_single_block():
    part = make_uniform_partition(5, 1)
    assert part.block_sizes == (5,)
    assert part.slice(0) == slice(0, 5)


def test_uniform_partition_remainder_first():
    part = make_uniform_partition(7, 3)
    assert part.block_sizes == (3, 2, 2)
    assert part.block_offsets == (0, 3, 5)


@pytest.mark.parametrize("d,m", [(3, 5), (0, 1), (4, 0)])
def test_uniform_partition_invalid(d, m):
    with pytest.raises(ValueError):
        make_uniform_partition(d, m)


def test_partition_invariants():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = int(rng.integers(1, 12))
        sizes = rng.integers(1, 9, size=m)
        part = BlockPartition(sizes)
        assert sum(part.block_sizes) == part.total_dim
        assert part.block_offsets[0] == 0
        offs = part.block_offsets
        assert all(b > a for a, b in zip(offs, offs[1:]))
        covered = np.concatenate([np.arange(s.start, s.stop)
                                  for s in part.slices()])
        np.testing.assert_array_equal(covered, np.arange(part.total_dim))


def test_block_slice_basic():
    part = BlockPartition([2, 2])
    x = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(block_slice(x, part, 1), [3.0, 4.0])


def test_block_slice_zero_vector():
    part = make_uniform_partition(2000, 100)
    x = np.zeros(2000)
    for i in (0, 57, 99):
        view = block_slice(x, part, i)
        assert view.shape == (20,)
        assert not view.any()


def test_block_slice_offsets():
    part = BlockPartition([3, 2, 2])
    x = np.array([10.0, 20, 30, 40, 50, 60, 70])
    np.testing.assert_array_equal(block_slice(x, part, 2), [60.0, 70.0])


def test_block_slice_is_view_and_range_checked():
    part = BlockPartition([2, 3])
    x = np.zeros(5)
    block_slice(x, part, 1)[:] = 7.0
    np.testing.assert_array_equal(x, [0, 0, 7, 7, 7])
    with pytest.raises(ValueError):
        block_slice(x, part, 2)
    with pytest.raises(ValueError):
        block_slice(x, part, -1)


def test_partition_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(50):
        m = int(rng.integers(1, 10))
        sizes = rng.integers(1, 7, size=m)
        part = BlockPartition(sizes)
        x = rng.standard_normal(part.total_dim)
        rebuilt = np.empty_like(x)
        for i in range(part.num_blocks):
            rebuilt[part.slice(i)] = block_slice(x, part, i)
        np.testing.assert_array_equal(rebuilt, x)


def test_charge_flops_rbcd_partial_gradient():
    counter = FlopCounter()
    charge_flops(counter, "gradient", gradient_charge(200, 20))
    assert counter.gradient_flops == 2 * 200 * 20 + 200 == 8200


def test_charge_flops_gist_prox():
    counter = FlopCounter()
    charge_flops(counter, "prox", prox_charge(2000))
    assert counter.prox_flops == 2000


def test_charge_flops_zero_and_isolation():
    counter = FlopCounter(gradient_flops=5, prox_flops=3, cost_flops=2)
    charge_flops(counter, "cost", 0)
    assert (counter.gradient_flops, counter.prox_flops, counter.cost_flops) \
        == (5, 3, 2)
    charge_flops(counter, "cost", cost_charge(10, 4))
    assert counter.cost_flops == 2 + 10 * 4 + 10
    assert counter.gradient_flops == 5 and counter.prox_flops == 3
    assert counter.total == counter.gradient_flops + counter.prox_flops \
        + counter.cost_flops


def test_charge_flops_invalid():
    counter = FlopCounter()
    with pytest.raises(ValueError):
        charge_flops(counter, "gradient", -1)
    with pytest.raises(ValueError):
        charge_flops(counter, "misc", 1)


def test_flop_totals_deterministic():
    def run():
        counter = FlopCounter()
        rng = np.random.default_rng(42)
        for _ in range(200):
            cat = ["gradient", "prox", "cost"][int(rng.integers(0, 3))]
            charge_flops(counter, cat, int(rng.integers(0, 1000)))
        return (counter.gradient_flops, counter.prox_flops, counter.cost_flops)

    assert run() == run()


def test_trace_round_trip(tmp_path):
    records = [
        TraceRecord(0, 100, 3.5, None, 0.0),
        TraceRecord(1, 250, 2.25, 0.75, 0.0),
        TraceRecord(2, 400, 2.0, None, 0.0),
    ]
    path = tmp_path / "trace.csv"
    write_trace(path, records)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,flops,objective,violation,wall_time_s"
    assert lines[1].split(",")[3] == ""  # not-evaluated marker
    back = read_trace(path)
    assert back == records
    iters = [r.iteration for r in back]
    flops = [r.flops for r in back]
    assert iters == sorted(iters)
    assert flops == sorted(flops)


def test_trace_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_trace(path)
