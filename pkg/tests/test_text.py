from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from gir.errors import EmptyQuery
from gir.text import Analyzer, build_query_bag, read_stoplist, tokenize
from gir.trec_io import Topic


def test_gujarati_title():
    assert tokenize("બિલ ગેટ્સ ના પરોપકારી પ્રયત્નો.") == ["બિલ", "ગેટ્સ", "ના", "પરોપકારી", "પ્રયત્નો"]


def test_empty():
    assert tokenize("") == []
    assert tokenize(" .,;!? ") == []


def test_mixed_script_and_digits():
    assert tokenize("Microsoft માઇક્રોસોફ્ટ 2010!") == ["microsoft", "માઇક્રોસોફ્ટ", "2010"]


def test_gujarati_digits_and_marks_kept():
    assert tokenize("૨૦૧૧ ક્ષ") == ["૨૦૧૧", "ક્ષ"]


def test_zero_width_joiners_retained():
    assert tokenize("ક‍ષ a‌b") == ["ક‍ષ", "a‌b"]
    assert tokenize("‍ ‌") == []


def test_only_ascii_lowercased():
    assert tokenize("ÀB Σx") == ["Àb", "Σx"]


def test_punctuation_splits():
    assert tokenize("a-b,c.d/e") == ["a", "b", "c", "d", "e"]


@settings(max_examples=200, deadline=None)
@given(st.text())
def test_idempotent(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks
    assert all(toks)


def test_stoplist(tmp_path):
    f = tmp_path / "stop.txt"
    f.write_text("# comment\nના\n\n  અને  \n", encoding="utf-8")
    assert read_stoplist(f) == frozenset({"ના", "અને"})
    a = Analyzer.from_stoplist(f)
    assert a.analyze("બિલ ના અને ગેટ્સ") == ["બિલ", "ગેટ્સ"]
    assert Analyzer.from_stoplist(None).analyze("ના") == ["ના"]


def test_query_bag_modes():
    t = Topic("1", "a b a", "b", "")
    assert build_query_bag(t, "T").terms == {"a": 2, "b": 1}
    assert build_query_bag(t, "TD").terms == {"a": 2, "b": 2}
    assert build_query_bag(t, "TDN").terms == {"a": 2, "b": 2}


def test_fields_do_not_merge_across_boundary():
    t = Topic("1", "ab", "cd", "")
    assert build_query_bag(t, "TD").terms == {"ab": 1, "cd": 1}


def test_empty_query():
    with pytest.raises(EmptyQuery):
        build_query_bag(Topic("1", "?!.", "word", ""), "T")


def test_bad_mode():
    with pytest.raises(ValueError):
        build_query_bag(Topic("1", "a", "", ""), "DN")


@settings(max_examples=100, deadline=None)
@given(st.text(min_size=1), st.text(), st.text())
def test_multiset_inclusion(title, desc, narr):
    t = Topic("1", title, desc, narr)
    bags = []
    for mode in ("T", "TD", "TDN"):
        try:
            bags.append(Counter(build_query_bag(t, mode).terms))
        except EmptyQuery:
            bags.append(Counter())
    assert not (bags[0] - bags[1]) and not (bags[1] - bags[2])
