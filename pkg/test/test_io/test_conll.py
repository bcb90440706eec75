import io

import pytest

from bilexical.errors import DataWarning, FormatError, InvalidArgument
from bilexical.RelationDataset import Pair, RelationPattern, extract_pairs_conll, read_conll

SENTENCE = (
    "# sent_id = 1\n"
    "1\tthe\tthe\tDET\tDT\t_\t3\tdet\t_\t_\n"
    "2\tred\tred\tADJ\tJJ\t_\t3\tamod\t_\t_\n"
    "3\tcar\tcar\tNOUN\tNN\t_\t4\tnsubj\t_\t_\n"
    "4\tstops\tstop\tVERB\tVBZ\t_\t0\troot\t_\t_\n"
    "\n"
)


def test_head_is_query():
    pairs = extract_pairs_conll(io.StringIO(SENTENCE), RelationPattern.parse("NN.*/JJ.*/amod"))
    assert pairs == [Pair("car", "red", 1)]


def test_dependent_is_query():
    pattern = RelationPattern.parse("NN.*/JJ.*/amod", query_side="dependent")
    assert extract_pairs_conll(io.StringIO(SENTENCE), pattern) == [Pair("red", "car", 1)]


def test_no_match_warns():
    with pytest.warns(DataWarning):
        pairs = extract_pairs_conll(io.StringIO(SENTENCE), RelationPattern.parse("VB.*/RB/advmod"))
    assert pairs == []


def test_wildcards():
    pairs = extract_pairs_conll(io.StringIO(SENTENCE), RelationPattern.parse("_/_/det"))
    assert pairs == [Pair("car", "the", 1)]
    pairs = extract_pairs_conll(io.StringIO(SENTENCE), RelationPattern.parse("VBZ//"))
    assert pairs == [Pair("stops", "car", 1)]


def test_patterns_match_whole_tags():
    assert extract_pairs_conll(io.StringIO(SENTENCE), RelationPattern.parse("N/JJ/amod")) == []


def test_coarse_tag_fallback_and_multiword_tokens():
    text = (
        "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tcasa\tcasa\tNOUN\t_\t_\t0\troot\t_\t_\n"
        "2\troja\trojo\tADJ\t_\t_\t1\tamod\t_\t_\n"
        "2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n"
    )
    assert extract_pairs_conll(io.StringIO(text), RelationPattern.parse("NOUN/ADJ/amod")) == [Pair("casa", "roja", 1)]


def test_short_row():
    text = SENTENCE + "1\tonly\tfive\tcolumns\there\n"
    with pytest.raises(FormatError) as err:
        read_conll(io.StringIO(text))
    assert err.value.line == 7


def test_head_outside_sentence():
    text = "1\ta\ta\tX\tX\t_\t5\tdep\t_\t_\n\n"
    with pytest.raises(FormatError) as err:
        read_conll(io.StringIO(text))
    assert err.value.line == 1


def test_bad_pattern():
    with pytest.raises(InvalidArgument):
        RelationPattern.parse("NN/JJ")
    with pytest.raises(InvalidArgument):
        RelationPattern.parse("NN(/JJ/amod")
