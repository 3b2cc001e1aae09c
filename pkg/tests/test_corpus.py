import string
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexbasis.corpus import (
    DEFAULT_CAPS,
    ParseError,
    POSClass,
    Sentence,
    Token,
    Vocabulary,
    build_vocabulary,
    count_frequencies,
    load_corpus,
    make_key,
    map_tag,
    proportional_sample,
    split_key,
)


def write_corpus(tmp_path, text, name="c.vert"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestTagMapping:
    @pytest.mark.parametrize(
        "tag,expected",
        [
            ("NN", POSClass.NOUN),
            ("NNS", POSClass.NOUN),
            ("NP", POSClass.OTHER),
            ("VBZ", POSClass.VERB),
            ("VVD", POSClass.VERB),
            ("JJR", POSClass.ADJECTIVE),
            ("RB", POSClass.ADVERB),
            ("RBS", POSClass.ADVERB),
            ("DT", POSClass.OTHER),
            ("", POSClass.OTHER),
        ],
    )
    def test_default_map(self, tag, expected):
        assert map_tag(tag) is expected

    def test_longest_prefix_wins(self):
        custom = {"N": POSClass.OTHER, "NN": POSClass.NOUN}
        assert map_tag("NNS", custom) is POSClass.NOUN
        assert map_tag("NP", custom) is POSClass.OTHER


class TestKeys:
    def test_round_trip(self):
        key = make_key("dog", POSClass.NOUN)
        assert key == "dog/N"
        assert split_key(key) == ("dog", POSClass.NOUN)

    def test_bare_word_defaults_to_other(self):
        assert split_key("dog") == ("dog", POSClass.OTHER)

    def test_lemma_containing_slash(self):
        key = make_key("km/h", POSClass.NOUN)
        assert split_key(key) == ("km/h", POSClass.NOUN)


class TestLoadCorpus:
    def test_two_token_sentence(self, tmp_path):
        p = write_corpus(tmp_path, "Dogs\tdog\tNNS\nbark\tbark\tVVP\n")
        sents = list(load_corpus(p))
        assert sents == [
            Sentence(
                (
                    Token("Dogs", "dog", POSClass.NOUN),
                    Token("bark", "bark", POSClass.VERB),
                )
            )
        ]

    def test_lemma_lowercased(self, tmp_path):
        p = write_corpus(tmp_path, "Paris\tParis\tNP\n")
        (sent,) = load_corpus(p)
        assert sent.tokens[0].lemma == "paris"

    def test_blank_line_splits_sentences(self, tmp_path):
        p = write_corpus(tmp_path, "a\ta\tDT\n\nb\tb\tDT\n")
        sents = list(load_corpus(p))
        assert len(sents) == 2
        assert [len(s) for s in sents] == [1, 1]

    def test_sentence_close_tag_splits(self, tmp_path):
        p = write_corpus(tmp_path, "a\ta\tDT\n</s>\nb\tb\tDT\n")
        assert len(list(load_corpus(p))) == 2

    def test_consecutive_blanks_yield_no_empty_sentence(self, tmp_path):
        p = write_corpus(tmp_path, "a\ta\tDT\n\n\n\nb\tb\tDT\n\n")
        sents = list(load_corpus(p))
        assert len(sents) == 2
        assert all(len(s) > 0 for s in sents)

    def test_malformed_line_aborts_with_location(self, tmp_path):
        p = write_corpus(tmp_path, "a\ta\tDT\nbroken\n")
        with pytest.raises(ParseError) as exc:
            list(load_corpus(p))
        assert exc.value.line_no == 2
        assert str(p) in str(exc.value)

    def test_malformed_line_skipped_on_request(self, tmp_path):
        p = write_corpus(tmp_path, "a\ta\tDT\nbroken\nb\tb\tDT\n")
        (sent,) = load_corpus(p, on_error="skip")
        assert [t.lemma for t in sent.tokens] == ["a", "b"]

    def test_extra_fields_ignored(self, tmp_path):
        p = write_corpus(tmp_path, "a\ta\tDT\textra\tmore\n")
        (sent,) = load_corpus(p)
        assert sent.tokens[0] == Token("a", "a", POSClass.OTHER)

    def test_empty_file(self, tmp_path):
        p = write_corpus(tmp_path, "")
        assert list(load_corpus(p)) == []

    def test_bad_on_error_value(self, tmp_path):
        p = write_corpus(tmp_path, "")
        with pytest.raises(ValueError):
            list(load_corpus(p, on_error="ignore"))


class TestVocabulary:
    def test_empty_corpus_gives_empty_vocab(self):
        vocab = build_vocabulary([])
        assert len(vocab) == 0
        assert vocab.keys() == []

    def test_frequency_then_lexicographic_order(self):
        counts = Counter(
            {
                ("dog", POSClass.NOUN): 5,
                ("cat", POSClass.NOUN): 5,
                ("run", POSClass.VERB): 7,
            }
        )
        vocab = Vocabulary.from_counts(counts)
        assert vocab.keys() == ["run/V", "cat/N", "dog/N"]

    def test_equal_freq_equal_lemma_breaks_by_pos_rank(self):
        counts = Counter({("fast", POSClass.ADVERB): 3, ("fast", POSClass.ADJECTIVE): 3})
        vocab = Vocabulary.from_counts(counts)
        assert vocab.keys() == ["fast/J", "fast/R"]

    def test_caps_apply_per_pos(self):
        counts = Counter()
        for i in range(30):
            counts[(f"n{i:02d}", POSClass.NOUN)] = 100 - i
        for i in range(5):
            counts[(f"v{i}", POSClass.VERB)] = 50 - i
        vocab = Vocabulary.from_counts(counts, caps={POSClass.NOUN: 10, POSClass.VERB: 10})
        nouns = [e for e in vocab.entries if e.pos is POSClass.NOUN]
        verbs = [e for e in vocab.entries if e.pos is POSClass.VERB]
        assert len(nouns) == 10
        assert len(verbs) == 5
        assert [e.lemma for e in nouns] == [f"n{i:02d}" for i in range(10)]

    def test_cap_tie_break_is_lexicographic(self):
        counts = Counter(
            {
                ("dog", POSClass.NOUN): 4,
                ("cat", POSClass.NOUN): 4,
                ("ant", POSClass.NOUN): 9,
            }
        )
        vocab = Vocabulary.from_counts(counts, caps={POSClass.NOUN: 2})
        assert vocab.keys() == ["ant/N", "cat/N"]

    def test_uncapped_pos_excluded(self):
        counts = Counter({("the", POSClass.OTHER): 100, ("dog", POSClass.NOUN): 1})
        vocab = Vocabulary.from_counts(counts, caps={POSClass.NOUN: 10})
        assert vocab.keys() == ["dog/N"]

    def test_nonpositive_cap_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary.from_counts(Counter(), caps={POSClass.NOUN: 0})

    def test_save_load_round_trip(self, tmp_path):
        counts = Counter(
            {
                ("dog", POSClass.NOUN): 5,
                ("run", POSClass.VERB): 7,
                ("fast", POSClass.ADVERB): 2,
            }
        )
        vocab = Vocabulary.from_counts(counts)
        path = tmp_path / "vocab.tsv"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.entries == vocab.entries
        assert loaded.freq("dog", POSClass.NOUN) == 5

    def test_default_caps_match_published_sizes(self):
        assert DEFAULT_CAPS == {
            POSClass.NOUN: 20000,
            POSClass.VERB: 10000,
            POSClass.ADJECTIVE: 10000,
            POSClass.ADVERB: 5000,
        }


lemma_st = st.text(alphabet=string.ascii_lowercase, min_size=1, max_size=6)
pos_st = st.sampled_from(list(POSClass))
token_st = st.builds(lambda l, p: Token(l, l, p), lemma_st, pos_st)
sentence_st = st.builds(lambda toks: Sentence(tuple(toks)), st.lists(token_st, min_size=1, max_size=8))
corpus_st = st.lists(sentence_st, min_size=0, max_size=20)


class TestVocabularyProperties:
    @given(corpus_st)
    def test_counts_match_token_occurrences(self, sentences):
        counts = count_frequencies(sentences)
        assert sum(counts.values()) == sum(len(s) for s in sentences)

    @given(corpus_st)
    def test_every_capped_pos_lemma_appears(self, sentences):
        vocab = build_vocabulary(sentences)
        counts = count_frequencies(sentences)
        expected = {(l, p) for (l, p) in counts if p in DEFAULT_CAPS}
        assert set(vocab.index) == expected

    @given(corpus_st)
    def test_order_is_deterministic_and_freq_sorted(self, sentences):
        v1 = build_vocabulary(sentences)
        v2 = build_vocabulary(list(sentences))
        assert v1.entries == v2.entries
        freqs = [e.freq for e in v1.entries]
        assert freqs == sorted(freqs, reverse=True)

    @given(corpus_st, st.integers(min_value=1, max_value=15))
    def test_proportional_sample_size_and_membership(self, sentences, size):
        vocab = build_vocabulary(sentences)
        content = [e for e in vocab.entries if e.pos is not POSClass.OTHER]
        sample = proportional_sample(vocab, size)
        assert len(sample) == min(size, len(content))
        assert len(set(sample)) == len(sample)
        assert set(sample) <= {e.key for e in content}


class TestProportionalSample:
    def _vocab(self, n_per_pos=20):
        counts = Counter()
        for pos, tag in [
            (POSClass.NOUN, "n"),
            (POSClass.VERB, "v"),
            (POSClass.ADJECTIVE, "j"),
            (POSClass.ADVERB, "r"),
        ]:
            for i in range(n_per_pos):
                counts[(f"{tag}{i:02d}", pos)] = 1000 - i
        return Vocabulary.from_counts(counts)

    def test_ratio_split(self):
        sample = proportional_sample(self._vocab(), 18)
        by_letter = Counter(k.rsplit("/", 1)[1] for k in sample)
        assert by_letter == {"N": 8, "V": 4, "J": 4, "R": 2}

    def test_remainder_goes_to_largest_fraction(self):
        # 10 * 4/9 = 4.44, 10 * 2/9 = 2.22, 10 * 1/9 = 1.11 -> floor sum 9,
        # one leftover unit lands on the noun class (largest fraction).
        sample = proportional_sample(self._vocab(), 10)
        by_letter = Counter(k.rsplit("/", 1)[1] for k in sample)
        assert by_letter == {"N": 5, "V": 2, "J": 2, "R": 1}

    def test_short_class_quota_reassigned(self):
        counts = Counter({("dash", POSClass.ADVERB): 9})
        for i in range(40):
            counts[(f"n{i:02d}", POSClass.NOUN)] = 500 - i
        vocab = Vocabulary.from_counts(counts)
        sample = proportional_sample(vocab, 18)
        assert len(sample) == 18
        assert "dash/R" in sample
        assert sum(1 for k in sample if k.endswith("/N")) == 17
