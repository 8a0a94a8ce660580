#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "fc2/phonetics.hpp"
#include "helpers.hpp"

using namespace fc2;

TEST_CASE("lexicon load") {
  std::istringstream in("cat\tK AE T\nhat\tHH AE T\n");
  Lexicon lex = Lexicon::load(in);
  CHECK(lex.phonemes("cat") == PhonemeSeq{"K", "AE", "T"});
  CHECK(lex.contains("hat"));
}

TEST_CASE("empty stream gives a fallback-only lexicon") {
  std::istringstream in("");
  Lexicon lex = Lexicon::load(in);
  CHECK(lex.entries().empty());
  CHECK(lex.phonemes("zx") == PhonemeSeq{"z", "x"});
}

TEST_CASE("malformed line reports its line number") {
  std::istringstream in("cat\tK AE T\ncat K AE T\n");
  try {
    Lexicon::load(in);
    FAIL("expected LexiconParseError");
  } catch (const LexiconParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("duplicate tokens: last wins with a warning") {
  std::istringstream in("cat\tK AE T\ncat\tK AA T\n");
  std::vector<std::string> warnings;
  Lexicon lex = Lexicon::load(in, &warnings);
  CHECK(lex.phonemes("cat") == PhonemeSeq{"K", "AA", "T"});
  REQUIRE(warnings.size() == 1);
}

TEST_CASE("lookup is total") {
  Lexicon lex;
  lex.add("cat", {"K", "AE", "T"});
  CHECK(lex.phonemes("cat") == PhonemeSeq{"K", "AE", "T"});
  CHECK(lex.phonemes("zx") == PhonemeSeq{"z", "x"});  // grapheme fallback
  CHECK(lex.phonemes(kEmptyToken).empty());
}

TEST_CASE("pron_similarity examples") {
  CHECK(pron_similarity(PhonemeSeq{"K", "AE", "T"}, PhonemeSeq{"K", "AE", "T"}) == 0);
  CHECK(pron_similarity(PhonemeSeq{"K", "AE", "T"}, PhonemeSeq{"HH", "AE", "T"}) == -1);
  CHECK(pron_similarity(PhonemeSeq{"B"}, PhonemeSeq{}) == -1);
  // pair with the empty token reduces to minus the other side's length
  Lexicon lex = fc2::testing::shipped_lexicon();
  CHECK(pron_similarity("cat", kEmptyToken, lex) == -3);
}

TEST_CASE("pron_similarity is symmetric, zero iff equal (oracle fuzz)") {
  RngStream rng(7);
  std::vector<Phoneme> inv = {"AA", "B", "K", "T"};
  for (int i = 0; i < 300; ++i) {
    PhonemeSeq a, b;
    for (std::size_t k = rng.next_index(7); k-- > 0;) a.push_back(inv[rng.next_index(inv.size())]);
    for (std::size_t k = rng.next_index(7); k-- > 0;) b.push_back(inv[rng.next_index(inv.size())]);
    int s = pron_similarity(a, b);
    CHECK(s == pron_similarity(b, a));
    CHECK((s == 0) == (a == b));
    Sentence sa(a.begin(), a.end()), sb(b.begin(), b.end());
    CHECK(s == -static_cast<int>(fc2::testing::brute_edit_distance(sa, sb)));
  }
}

TEST_CASE("homophones score 0 even when surface tokens differ") {
  Lexicon lex = fc2::testing::shipped_lexicon();
  CHECK(pron_similarity("b", "B", lex) == 0);
  CHECK(pron_similarity("see", "sea", lex) == 0);
  CHECK(pron_similarity("cat", "hat", lex) == -1);
}
