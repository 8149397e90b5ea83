import pytest

from statuteqa.corpus import Question, QuestionType
from statuteqa.enrich import (
    CrawledPair,
    EnrichmentConfig,
    FilterTask,
    build_mlm_subset,
    extract_references,
    filter_factoid_training,
    filter_pairs,
    length_histogram,
    load_crawled_pairs,
    mc_to_yesno,
)
from statuteqa.errors import ValidationError


def words(n, prefix="w"):
    return " ".join(f"{prefix}{i}" for i in range(n))


def citing_pair(question, law="Luật Thanh niên", art="1"):
    return CrawledPair(question=question, answer=f"Theo Điều {art} {law}, quy định như vậy.")


# ---------------------------------------------------------------------------
# extract_references
# ---------------------------------------------------------------------------


def test_no_citation():
    assert extract_references("Không có trích dẫn nào ở đây.") == []


def test_basic_citation():
    refs = extract_references("theo Điều 1 Luật Thanh niên")
    assert refs == [("luật thanh niên", "1")]


def test_citation_stops_at_punctuation():
    refs = extract_references("Căn cứ Điều 20 Bộ luật Dân sự, người thành niên...")
    assert refs == [("bộ luật dân sự", "20")]


def test_duplicate_citation_once():
    text = "Điều 5 Luật Du lịch nói rõ. Nhắc lại: Điều 5 Luật Du lịch."
    assert extract_references(text) == [("luật du lịch", "5")]


def test_multiple_citations_ordered():
    text = "Xem Điều 3 Luật Du lịch và Điều 7 Nghị định 45/2019/NĐ-CP."
    refs = extract_references(text)
    assert refs[0] == ("luật du lịch", "3")
    assert len(refs) == 2


# ---------------------------------------------------------------------------
# filter_pairs
# ---------------------------------------------------------------------------


def test_word_limit_boundaries(corpus):
    kept_100 = filter_pairs([citing_pair(words(100))], corpus, task=FilterTask.RETRIEVAL)
    dropped_101 = filter_pairs([citing_pair(words(101))], corpus, task=FilterTask.RETRIEVAL)
    assert len(kept_100) == 1
    assert dropped_101 == []
    # task 2 allows up to 128
    kept_128 = filter_pairs([citing_pair(words(128))], corpus, task=FilterTask.QA)
    dropped_129 = filter_pairs([citing_pair(words(129))], corpus, task=FilterTask.QA)
    assert len(kept_128) == 1
    assert dropped_129 == []


def test_unresolvable_reference_dropped(corpus):
    pair = CrawledPair(question="ngắn gọn", answer="Theo Điều 9 Luật Báo chí thì cấm.")
    assert filter_pairs([pair], corpus) == []


def test_no_reference_dropped(corpus):
    pair = CrawledPair(question="ngắn gọn", answer="Trả lời chung chung không trích dẫn.")
    assert filter_pairs([pair], corpus) == []


def test_kept_pair_carries_resolved_refs(corpus):
    kept = filter_pairs([citing_pair("Thanh niên là ai?")], corpus)
    assert kept[0].extracted_refs == (("Luật Thanh niên", "1"),)


def test_alias_map_resolves_nonstandard_names(corpus):
    pair = CrawledPair(question="hỏi về tài sản", answer="Theo Điều 105 BLDS, tài sản là vật.")
    config = EnrichmentConfig(
        reference_patterns=(r"[Đđ]iều\s+(?P<article_id>\d+)\s+(?P<law_id>BLDS)",),
        law_aliases={"blds": "Bộ luật Dân sự"},
    )
    kept = filter_pairs([pair], corpus, config)
    assert kept[0].extracted_refs == (("Bộ luật Dân sự", "105"),)


def test_filter_is_idempotent_and_subset(corpus, fixtures_dir):
    pairs = load_crawled_pairs(fixtures_dir / "crawled.jsonl")
    once = filter_pairs(pairs, corpus)
    twice = filter_pairs(once, corpus)
    assert twice == once
    kept_questions = {p.question for p in once}
    assert kept_questions <= {p.question for p in pairs}


def test_fixture_dump_matches_independent_filter(corpus, fixtures_dir, analyzer):
    # Oracle: re-derive the kept set with inline logic over the raw records.
    pairs = load_crawled_pairs(fixtures_dir / "crawled.jsonl")
    expected = []
    known = {
        "luật thanh niên": "Luật Thanh niên",
        "luật du lịch": "Luật Du lịch",
        "bộ luật dân sự": "Bộ luật Dân sự",
    }
    for p in pairs:
        if analyzer.word_count(p.question) > 100:
            continue
        refs = extract_references(p.answer)
        if not refs:
            continue
        if all(
            known.get(law) is not None and corpus.get(known[law], art) is not None
            for law, art in refs
        ):
            expected.append(p.question)
    got = [p.question for p in filter_pairs(pairs, corpus)]
    assert got == expected
    assert len(got) == 2  # fixture is authored with exactly two resolvable short pairs


# ---------------------------------------------------------------------------
# mc_to_yesno
# ---------------------------------------------------------------------------


def mc(qid, choices, gold):
    return Question(
        question_id=qid,
        qtype=QuestionType.MULTIPLE_CHOICE,
        text=f"Câu hỏi {qid}?",
        choices=tuple(choices),
        gold_answer=gold,
    )


def test_mc_to_yesno_labels():
    q = mc("m1", [("A", "một"), ("B", "hai"), ("C", "ba"), ("D", "bốn")], gold="B")
    samples = mc_to_yesno([q])
    assert [s.label for s in samples] == [False, True, False, False]
    assert samples[1].text == "Câu hỏi m1? hai"


def test_mc_to_yesno_skips_specials():
    q = mc("m2", [("A", "một"), ("B", "hai"), ("C", "Tất cả các đáp án trên")], gold="C")
    samples = mc_to_yesno([q])
    assert [s.source_choice for s in samples] == ["A", "B"]
    assert all(s.label is False for s in samples)  # gold is the skipped special


def test_mc_to_yesno_all_special_yields_nothing():
    q = mc(
        "m3",
        [("A", "Tất cả các đáp án trên"), ("B", "Không có đáp án nào"), ("C", "Cả A và B đều đúng")],
        gold="A",
    )
    assert mc_to_yesno([q]) == []


def test_mc_to_yesno_requires_gold():
    q = Question(
        question_id="m4",
        qtype=QuestionType.MULTIPLE_CHOICE,
        text="?",
        choices=(("A", "x"), ("B", "y"), ("C", "z")),
    )
    with pytest.raises(ValidationError, match="gold"):
        mc_to_yesno([q])


def test_mc_to_yesno_one_affirmative_per_gold_question():
    questions = [
        mc(f"m{i}", [("A", f"a{i}"), ("B", f"b{i}"), ("C", f"c{i}")], gold="C") for i in range(5)
    ]
    samples = mc_to_yesno(questions)
    assert len(samples) == 15
    per_q = {}
    for s in samples:
        per_q[s.source_qid] = per_q.get(s.source_qid, 0) + int(s.label)
    assert all(v == 1 for v in per_q.values())


# ---------------------------------------------------------------------------
# MLM subset
# ---------------------------------------------------------------------------


def test_mlm_question_boundary():
    config = EnrichmentConfig()
    kept = build_mlm_subset([CrawledPair(question=words(128), answer="t")], config)
    dropped = build_mlm_subset([CrawledPair(question=words(129), answer="t")], config)
    assert len(kept) == 1
    assert dropped == []


def test_mlm_total_boundary():
    config = EnrichmentConfig()
    at_limit = CrawledPair(question=words(100), answer=words(412, prefix="a"))
    over = CrawledPair(question=words(100), answer=words(413, prefix="a"))
    assert len(build_mlm_subset([at_limit], config)) == 1
    assert build_mlm_subset([over], config) == []


def test_mlm_mixed_lengths_match_recount(analyzer):
    pairs = [
        CrawledPair(question=words(q), answer=words(a, prefix="a"))
        for q, a in [(10, 20), (128, 384), (128, 385), (129, 1), (200, 200), (50, 462)]
    ]
    expected = sum(
        1
        for p in pairs
        if analyzer.word_count(p.question) <= 128
        and analyzer.word_count(p.question) + analyzer.word_count(p.answer) <= 512
    )
    assert len(build_mlm_subset(pairs)) == expected


# ---------------------------------------------------------------------------
# Factoid training filter
# ---------------------------------------------------------------------------


def test_factoid_keep_with_offsets():
    kept = filter_factoid_training([("q?", "thời hạn là năm năm kể từ ngày cấp", "năm năm")])
    assert len(kept) == 1
    sample = kept[0]
    raw = sample.context.encode("utf-8")
    assert raw[sample.byte_start : sample.byte_end].decode("utf-8") == "năm năm"


def test_factoid_absent_answer_dropped():
    assert filter_factoid_training([("q?", "văn bản không liên quan", "năm năm")]) == []


def test_factoid_first_occurrence_wins():
    context = "giá trị ba, rồi lại ba."
    kept = filter_factoid_training([("q?", context, "ba")])
    sample = kept[0]
    assert sample.byte_start == len("giá trị ".encode("utf-8"))


# ---------------------------------------------------------------------------
# Histogram
# ---------------------------------------------------------------------------


def test_histogram_empty():
    assert length_histogram([]) == {"buckets": [], "mean": None, "median": None, "max": None}


def test_histogram_two_questions():
    pairs = [
        CrawledPair(question=words(10), answer=""),
        CrawledPair(question=words(110), answer=""),
    ]
    hist = length_histogram(pairs, bucket_width=50)
    assert hist["buckets"] == [
        {"lo": 0, "hi": 50, "count": 1},
        {"lo": 100, "hi": 150, "count": 1},
    ]
    assert hist["mean"] == 60
    assert hist["max"] == 110


def test_post_filter_histogram_has_no_mass_above_limit(corpus):
    pairs = [citing_pair(words(n)) for n in (5, 60, 99, 100, 101, 150)]
    kept = filter_pairs(pairs, corpus, task=FilterTask.RETRIEVAL)
    hist = length_histogram(kept, bucket_width=50)
    assert hist["max"] <= 100
    assert all(b["lo"] < 150 for b in hist["buckets"])
