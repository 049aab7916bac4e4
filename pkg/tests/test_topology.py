import bz2

import pytest

from torbgp.errors import ConflictError, ParseError, UnknownASError
from torbgp.topology import (
    AsGraph,
    AsRelation,
    StepClass,
    load_as_topology,
    neighbors,
    parse_as_rel_lines,
    read_as_topology,
    tier1_set,
)

from conftest import TOY5_TEXT


def test_parse_skips_comments_and_blank_lines():
    g = load_as_topology("# source: synthetic\n\n1|2|-1\n2|3|0\n")
    assert len(g) == 3
    assert g.edges[(1, 2)] is AsRelation.PROVIDER_TO_CUSTOMER


def test_serial2_fourth_field_accepted():
    g = load_as_topology("1|2|-1|bgp\n")
    assert g.edges == {(1, 2): AsRelation.PROVIDER_TO_CUSTOMER}


@pytest.mark.parametrize("line", ["1|2", "1|2|5", "a|2|0", "0|2|-1", "1|2|-1|x|y"])
def test_malformed_line_reports_line_number(line):
    with pytest.raises(ParseError, match="line 2"):
        parse_as_rel_lines(["1|3|0", line])


def test_self_loop_rejected():
    with pytest.raises(ConflictError):
        load_as_topology("4|4|0\n")


def test_conflicting_duplicate_rejected():
    with pytest.raises(ConflictError):
        load_as_topology("1|2|-1\n2|1|-1\n")
    with pytest.raises(ConflictError):
        load_as_topology("1|2|-1\n1|2|0\n")


def test_identical_duplicates_collapse():
    g = load_as_topology("1|2|-1\n1|2|-1\n3|4|0\n4|3|0\n")
    assert len(g.edges) == 2


def test_neighbors_classified(toy5):
    assert neighbors(toy5, 1) == [(2, StepClass.TO_PEER), (3, StepClass.TO_CUSTOMER), (4, StepClass.TO_CUSTOMER)]
    assert neighbors(toy5, 5) == [(3, StepClass.TO_PROVIDER), (4, StepClass.TO_PROVIDER)]


def test_unknown_as(toy5):
    with pytest.raises(UnknownASError):
        neighbors(toy5, 99)
    with pytest.raises(KeyError):
        toy5.idx(99)


def test_roundtrip_through_lines(toy5):
    again = load_as_topology("\n".join(toy5.to_lines()))
    assert again.edges == toy5.edges


def test_read_compressed(tmp_path):
    p = tmp_path / "rel.txt.bz2"
    p.write_bytes(bz2.compress(TOY5_TEXT.encode()))
    assert read_as_topology(p).edges == load_as_topology(TOY5_TEXT).edges


def test_isolated_nodes_kept():
    g = AsGraph.from_edges([(1, 2, -1)], nodes=[7])
    assert 7 in g and len(g) == 3


def test_tier1_set(toy5):
    assert tier1_set(toy5, [1, 2]) == {1, 2}
    with pytest.raises(UnknownASError):
        tier1_set(toy5, [1, 174])
    assert tier1_set(toy5, [1, 174], strict=False) == {1}
