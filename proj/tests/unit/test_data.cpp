#include <doctest.h>

#include <map>

#include "qlm/data.hpp"
#include "qlm/errors.hpp"
#include "support.hpp"

using namespace qlm;

namespace {

const char* kSample =
    "question_id\tquestion\tanswer\tlabel\n"
    "q1\tWho wrote it?\tShe wrote it.\t1\n"
    "q1\tWho wrote it?\tIt rained, at times.\t0\n"
    "q2\tWhen did it rain?\tIt rained at times.\t1\n"
    "q2\tWhen did it rain?\tNobody knows\t0\n"
    "q3\tWhy?\tno idea\t0\n";

}  // namespace

TEST_CASE("tokenize lowercases and splits trailing punctuation") {
    CHECK(tokenize("At times.") == std::vector<std::string>{"at", "times", "."});
    CHECK(tokenize("  Who?!  IS\tthere ") == std::vector<std::string>{"who", "?", "!", "is", "there"});
    CHECK(tokenize("...") == std::vector<std::string>{".", ".", "."});
    CHECK(tokenize("u.s. army") == std::vector<std::string>{"u.s", ".", "army"});
    CHECK(tokenize("").empty());
}

TEST_CASE("two-line file gives one question with two candidates") {
    const auto raw = parse_tsv("a\thello there\thi\t1\na\thello there\tbye\t0\n");
    REQUIRE(raw.size() == 1);
    CHECK(raw[0].candidates.size() == 2);
    const QACorpus c = build_corpus(raw, {}, {});
    CHECK(c.train.size() == 1);
    CHECK(c.train[0].candidates[1].label == 0);
}

TEST_CASE("vocabulary orders by frequency then lexicographically") {
    const QACorpus c = build_corpus(parse_tsv(kSample), {}, {});
    // Hand count over questions and answers.
    std::map<std::string, std::size_t> expected{
        {"who", 1},   {"wrote", 2}, {"it", 5},   {"?", 3},   {"she", 1}, {".", 3},   {"rained", 2},
        {",", 1},     {"at", 2},    {"times", 2}, {"when", 1}, {"did", 1}, {"rain", 1}, {"nobody", 1},
        {"knows", 1}, {"why", 1},   {"no", 1},    {"idea", 1}};
    CHECK(c.vocab.size() == expected.size() + 2);
    std::map<std::string, std::size_t> counted;
    for (const auto& r : c.train) {
        for (TokenId t : r.question) ++counted[c.vocab.token(t)];
        for (const auto& cand : r.candidates) {
            for (TokenId t : cand.answer) ++counted[c.vocab.token(t)];
        }
    }
    CHECK(counted == expected);
    CHECK(c.vocab.token(kPad) == "<pad>");
    CHECK(c.vocab.token(kUnk) == "<unk>");
    CHECK(c.vocab.id("it") == 2);
    // Equal counts break lexicographically.
    CHECK(c.vocab.id(".") == 3);
    CHECK(c.vocab.id("?") == 4);
    CHECK(c.vocab.id("at") == 5);
    CHECK(c.vocab.id("wrote") == 8);
}

TEST_CASE("questions group by id in first-appearance order") {
    const auto raw = parse_tsv(kSample);
    REQUIRE(raw.size() == 3);
    CHECK(raw[0].id == "q1");
    CHECK(raw[2].id == "q3");
    CHECK(raw[1].candidates.size() == 2);
}

TEST_CASE("unseen dev tokens map to UNK") {
    const auto train = parse_tsv(kSample);
    const auto dev = parse_tsv("d\tzebra who\tit\t1\n");
    const QACorpus c = build_corpus(train, dev, {});
    CHECK(c.dev[0].question == Sentence{kUnk, c.vocab.id("who")});
    CHECK(c.vocab.encode("Zebra") == Sentence{kUnk});
}

TEST_CASE("decode then encode round-trips in-vocabulary text") {
    const QACorpus c = build_corpus(parse_tsv(kSample), {}, {});
    for (const auto& r : c.train) {
        CHECK(c.vocab.encode(c.vocab.decode(r.question)) == r.question);
        for (const auto& cand : r.candidates) CHECK(c.vocab.encode(c.vocab.decode(cand.answer)) == cand.answer);
    }
}

TEST_CASE("malformed lines are reported with their line number") {
    CHECK_THROWS_WITH_AS(parse_tsv("a\tb\tc\t1\na\tb\tc\n", "x.tsv"), doctest::Contains("x.tsv:2"), DataError);
    CHECK_THROWS_WITH_AS(parse_tsv("a\tb\tc\t2\n", "x.tsv"), doctest::Contains("x.tsv:1"), DataError);
    CHECK_THROWS_WITH_AS(parse_tsv("\tb\tc\t1\n", "x.tsv"), doctest::Contains("x.tsv:1"), DataError);
    CHECK_THROWS_AS(parse_tsv("question_id\tquestion\tanswer\tlabel\n"), DataError);
    CHECK_THROWS_WITH_AS(read_tsv("/nonexistent/q.tsv"), doctest::Contains("/nonexistent/q.tsv"), DataError);
    CHECK_THROWS_AS(load_corpus(test::fixture("toy_train.tsv"), "", "", "json"), DataError);
}

TEST_CASE("ingestion is deterministic") {
    const QACorpus a = load_corpus(test::fixture("toy_train.tsv"), test::fixture("toy_dev.tsv"), "");
    const QACorpus b = load_corpus(test::fixture("toy_train.tsv"), test::fixture("toy_dev.tsv"), "");
    CHECK(a.vocab.tokens() == b.vocab.tokens());
    REQUIRE(a.train.size() == 10);
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].question == b.train[i].question);
        CHECK(a.train[i].candidates.size() == 4);
    }
    CHECK(a.dev.size() == 3);
    CHECK(a.test.empty());
}

TEST_CASE("a single positive and negative give the unique triplet") {
    const QACorpus c = build_corpus(parse_tsv("a\tq\tyes\t1\na\tq\tno\t0\n"), {}, {});
    const auto ts = sample_triplets(c, 5, 3);
    REQUIRE(ts.size() == 3);
    for (const auto& t : ts) {
        CHECK(t.question == c.vocab.encode("q"));
        CHECK(t.positive == c.vocab.encode("yes"));
        CHECK(t.negative == c.vocab.encode("no"));
    }
}

TEST_CASE("triplet sampling is seeded") {
    const QACorpus c = load_corpus(test::fixture("toy_train.tsv"), "", "");
    const auto a = sample_triplets(c, 42, 50);
    const auto b = sample_triplets(c, 42, 50);
    const auto d = sample_triplets(c, 43, 50);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].question == b[i].question);
        CHECK(a[i].negative == b[i].negative);
        differs = differs || a[i].negative != d[i].negative || a[i].question != d[i].question;
    }
    CHECK(differs);
}

TEST_CASE("each positive is visited once per pass") {
    const QACorpus c = load_corpus(test::fixture("toy_train.tsv"), "", "");
    const std::size_t n = count_positive_pairs(c);
    REQUIRE(n == 10);
    const auto ts = sample_triplets(c, 1, 2 * n);
    std::map<std::size_t, int> seen;
    for (std::size_t k = 0; k < n; ++k) ++seen[ts[k].question_index];
    CHECK(seen.size() == n);
}

TEST_CASE("negatives are drawn uniformly from the whole answer space") {
    const QACorpus c = build_corpus(parse_tsv("a\tq\tyes\t1\na\tq\tn one\t0\nb\tr\tn two\t0\nb\tr\tn three\t0\n"), {}, {});
    const auto ts = sample_triplets(c, 2024, 10000);
    std::map<Sentence, int> freq;
    for (const auto& t : ts) {
        CHECK(t.question_index == 0);
        ++freq[t.negative];
    }
    REQUIRE(freq.size() == 3);
    for (const auto& [neg, k] : freq) CHECK(std::abs(k / 10000.0 - 1.0 / 3.0) < 0.02);
}

TEST_CASE("questions without a positive never appear") {
    const QACorpus c = build_corpus(parse_tsv(kSample), {}, {});
    for (const auto& t : sample_triplets(c, 3, 100)) CHECK(t.question_index != 2);
    const QACorpus none = build_corpus(parse_tsv("a\tq\tx\t0\n"), {}, {});
    CHECK_THROWS_AS(sample_triplets(none, 0, 1), DataError);
}
