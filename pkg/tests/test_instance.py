import numpy as np
import pytest

from cmcs_splp.instance import (
    Instance,
    InstanceFormatError,
    KgClass,
    generate_kg_instance,
    instance_from_rows,
    parse_instance,
    read_instance,
    save_instance,
    write_instance,
)

CANONICAL = "3 2\n5 4 7\n10 2 1\n3 6 6\n"


def test_canonical_round_trip():
    inst = parse_instance(CANONICAL)
    assert (inst.m, inst.n) == (3, 2)
    assert inst.fixed.tolist() == [5, 10, 3]
    assert inst.costs.tolist() == [[4, 7], [2, 1], [6, 6]]
    assert write_instance(inst) == CANONICAL


def test_file_round_trip(tmp_path):
    inst = generate_kg_instance("b", 6, 9, seed=4)
    path = tmp_path / "x.txt"
    save_instance(inst, path)
    back = read_instance(path)
    assert back == inst
    assert back.name == "x"


def test_ufllib_layout():
    text = "FILE: ga3a-1\n3 2 0\n1 5 4 7\n2 10 2 1\n3 3 6 6\n"
    inst = parse_instance(text)
    assert inst.name == "ga3a-1"
    assert inst == parse_instance(CANONICAL)


def test_orlib_layout():
    text = "3 2\n0 5\n0 10\n0 3\n1\n4 2 6\n1\n7 1 6\n"
    assert parse_instance(text) == parse_instance(CANONICAL)


def test_explicit_format_and_unknown():
    assert parse_instance(CANONICAL, fmt="canonical") == parse_instance(CANONICAL)
    with pytest.raises(ValueError):
        parse_instance(CANONICAL, fmt="xml")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty"),
        ("1 3\n1 1 1 1\n", "m must be >= 2"),
        ("2 0\n1\n1\n", "n must be >= 1"),
        ("2 2\n1 2 3\n", "canonical"),
        ("2 2\n1 2 x\n4 5 6\n", "line 2"),
        ("2 2\n1 2 -3\n4 5 6\n", "canonical"),
    ],
)
def test_malformed(text, fragment):
    with pytest.raises(InstanceFormatError) as err:
        parse_instance(text)
    assert fragment in str(err.value)


def test_instance_validation():
    with pytest.raises(ValueError):
        Instance([1], [[1, 2]])
    with pytest.raises(ValueError):
        Instance([1, 2], [[1], [-1]])
    with pytest.raises(ValueError):
        Instance([1, 2], [[1, 2, 3]])
    inst = Instance([1, 2], [[1], [2]])
    with pytest.raises(ValueError):
        inst.costs[0, 0] = 5


def test_rank_matrix_orders_ties_by_index():
    inst = instance_from_rows([[0, 5, 1], [0, 3, 1], [0, 5, 0]])
    order, rank = inst.ranks.order, inst.ranks.rank
    assert order[0].tolist() == [1, 0, 2]
    assert order[1].tolist() == [2, 0, 1]
    for j in range(inst.n):
        for r in range(inst.m):
            assert rank[order[j, r], j] == r
            assert inst.ranks.cost[j, r] == inst.costs[order[j, r], j]


@pytest.mark.parametrize("cls", list(KgClass))
def test_generator_ranges(cls):
    inst = generate_kg_instance(cls, 40, 30, seed=1)
    lo, hi = cls.fixed_range
    assert lo <= inst.fixed.min() and inst.fixed.max() <= hi
    assert 1000 <= inst.costs.min() and inst.costs.max() <= 2000
    assert inst.name == f"ga40{cls.value}"


def test_generator_symmetric_and_deterministic():
    a = generate_kg_instance("c", 25, 25, symmetric=True, seed=11)
    assert np.array_equal(a.costs, a.costs.T)
    assert a == generate_kg_instance("c", 25, 25, symmetric=True, seed=11)
    assert a != generate_kg_instance("c", 25, 25, symmetric=True, seed=12)
    with pytest.raises(ValueError):
        generate_kg_instance("a", 4, 5, symmetric=True)
    with pytest.raises(ValueError):
        KgClass.parse("d")


def test_generator_hits_both_bounds():
    inst = generate_kg_instance("a", 300, 300, seed=0)
    assert inst.fixed.min() == 100 and inst.fixed.max() == 200
    assert inst.costs.min() == 1000 and inst.costs.max() == 2000
