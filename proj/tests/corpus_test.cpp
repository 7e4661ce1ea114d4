#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hedmod/corpus.hpp"
#include "hedmod/error.hpp"

using namespace hedmod;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("hedmod_corpus_" + name);
  std::ofstream(path) << content;
  return path.string();
}

Entity make_entity(const std::string& id, const std::string& description,
                   std::vector<Statement> statements) {
  Entity e;
  e.entity_id = id;
  e.label = id;
  e.description = tokenize(description);
  e.statements = std::move(statements);
  return e;
}

const char* kRueCazotte =
    R"({"entity_id":"Q1","label":"Rue Cazotte","description":"Street in Paris, France",)"
    R"("statements":[["P31","instance of","street"],["P17","country","France"],)"
    R"(["P131","located in the administrative territorial entity","Paris"],)"
    R"(["P138","named after","Jacques Cazotte"]]})";

}  // namespace

TEST(Tokenize, DetachesPunctuationAndLowercases) {
  EXPECT_EQ(tokenize("Street in Paris, France"), (Tokens{"street", "in", "paris", ",", "france"}));
  EXPECT_EQ(tokenize("(film) \"x\"."), (Tokens{"(", "film", ")", "\"", "x", "\"", "."}));
  EXPECT_EQ(tokenize("   "), Tokens{});
  EXPECT_EQ(tokenize("2014 film"), (Tokens{"2014", "film"}));
}

TEST(Utf8, LengthAndPrefixCountCodePoints) {
  EXPECT_EQ(utf8_length("café"), 4u);
  EXPECT_EQ(utf8_prefix("zürich", 2), "zü");
  EXPECT_EQ(utf8_prefix("ab", 5), "ab");
}

TEST(LoadJsonl, ParsesFigureOneEntity) {
  const auto path = temp_file("rue.jsonl", std::string(kRueCazotte) + "\n");
  const auto entities = load_jsonl(path);
  ASSERT_EQ(entities.size(), 1u);
  const Entity& e = entities[0];
  EXPECT_EQ(e.entity_id, "Q1");
  EXPECT_EQ(e.label, "rue cazotte");
  EXPECT_EQ(e.description, (Tokens{"street", "in", "paris", ",", "france"}));
  ASSERT_EQ(e.statements.size(), 4u);
  EXPECT_EQ(e.statements[3].value, "jacques cazotte");
  EXPECT_EQ(e.statements[3].property_label, "named after");
}

TEST(LoadJsonl, EmptyFileGivesEmptyList) {
  EXPECT_TRUE(load_jsonl(temp_file("empty.jsonl", "")).empty());
}

TEST(LoadJsonl, MalformedLineReportsLineNumber) {
  const auto path = temp_file("bad.jsonl", std::string(kRueCazotte) + "\n{not json\n");
  try {
    load_jsonl(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadJsonl, MissingKeyIsNamed) {
  const auto path = temp_file("nokey.jsonl", R"({"entity_id":"Q1","label":"x","statements":[]})" "\n");
  try {
    load_jsonl(path);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'description'"), std::string::npos) << e.what();
  }
}

TEST(LoadJsonl, MissingFileIsIoError) {
  try {
    load_jsonl("/nonexistent/hedmod.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Jsonl, WriteThenLoadRoundTrips) {
  Entity e = make_entity("Q9", "lake in siberia , russia", {{"P31", "instance of", "lake"}});
  e.gold_template = {"$hed$", "in", "$mod$", ",", "$mod$"};
  const auto path = (std::filesystem::temp_directory_path() / "hedmod_corpus_rt.jsonl").string();
  write_jsonl(path, {e});
  const auto back = load_jsonl(path);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].description, e.description);
  EXPECT_EQ(back[0].gold_template, e.gold_template);
  EXPECT_EQ(back[0].statements.size(), 1u);
}

TEST(FilterEntities, StatementBoundary) {
  std::vector<Statement> four(4, Statement{"P1", "p", "v"});
  std::vector<Statement> five(5, Statement{"P1", "p", "v"});
  const std::vector<Entity> input = {make_entity("a", "x", four), make_entity("b", "x", five),
                                     make_entity("c", "", five)};
  const auto kept = filter_entities(input, 5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].entity_id, "b");
  EXPECT_EQ(filter_entities(input, 1).size(), 2u);
  EXPECT_THROW(filter_entities(input, 0), Error);
}

TEST(ReconstructInfobox, NamedAfterJacquesCazotte) {
  const Entity e = make_entity("Q1", "x", {{"P138", "named after", "jacques cazotte"}});
  const auto seq = reconstruct_infobox(e);
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[0].word, "jacques");
  EXPECT_EQ(seq[0].property, "named_after");
  EXPECT_EQ(seq[0].position, 0);
  EXPECT_EQ(seq[1].word, "cazotte");
  EXPECT_EQ(seq[1].position, 1);
}

TEST(ReconstructInfobox, StatementOrderAndEmptyValues) {
  const Entity e = make_entity("Q1", "x", {{"P17", "country", "france"}, {"P1", "empty", ""},
                                           {"P31", "instance of", "street"}});
  const auto seq = reconstruct_infobox(e);
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[0].word, "france");
  EXPECT_EQ(seq[0].property, "country");
  EXPECT_EQ(seq[1].word, "street");
  EXPECT_EQ(seq[1].property, "instance_of");
  EXPECT_EQ(seq[1].position, 0);
}

TEST(ReconstructInfobox, PositionsClipIntoLastBucket) {
  const Entity e = make_entity("Q1", "x", {{"P1", "name", "a b c d e f"}});
  const auto seq = reconstruct_infobox(e, 3);
  ASSERT_EQ(seq.size(), 6u);
  const std::vector<int> expected = {0, 1, 2, 2, 2, 2};
  for (std::size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(seq[i].position, expected[i]);
}

TEST(KgTypeValues, OnlyInstanceAndSubclass) {
  const Entity e = make_entity("Q1", "x", {{"P31", "instance of", "street"}, {"P17", "country", "france"},
                                           {"P279", "subclass of", "road way"}});
  EXPECT_EQ(kg_type_values(e), (Tokens{"street", "road", "way"}));
  EXPECT_EQ(source_values(e), (Tokens{"street", "france", "road", "way"}));
}

TEST(BuildVocabs, FrequencyCutoff) {
  std::vector<Entity> train;
  for (int i = 0; i < 10; ++i) train.push_back(make_entity("s", "street", {{"P31", "instance of", "street"}}));
  train.push_back(make_entity("r", "river", {{"P31", "instance of", "river"}}));
  const VocabSet v = build_vocabs(train, 5, 5);
  EXPECT_EQ(v.value.size(), 5u);
  EXPECT_TRUE(v.value.contains("street"));
  EXPECT_FALSE(v.value.contains("river"));
  EXPECT_EQ(v.value.id("river"), v.value.unk());
  EXPECT_TRUE(v.target.contains("street"));
  EXPECT_EQ(v.value.token(0), kPad);
  EXPECT_EQ(v.value.token(3), kEos);
}

TEST(BuildVocabs, TieBreaksLexicographically) {
  const std::vector<Entity> train = {make_entity("a", "zeta alpha", {{"P1", "p", "zeta alpha"}})};
  const VocabSet v = build_vocabs(train, 5, 5);
  EXPECT_TRUE(v.value.contains("alpha"));
  EXPECT_FALSE(v.value.contains("zeta"));
  EXPECT_TRUE(v.target.contains("alpha"));
}

TEST(BuildVocabs, PropertiesAndTemplateTokens) {
  const std::vector<Entity> train = {make_entity("a", "x", {{"P138", "named after", "a b"}, {"P17", "country", "c"}})};
  const VocabSet v = build_vocabs(train, 10, 10, Lexicon::empty());
  EXPECT_EQ(v.property.size(), 4u);
  EXPECT_TRUE(v.property.contains("named_after"));
  EXPECT_TRUE(v.templ.contains(kHead));
  EXPECT_TRUE(v.templ.contains(kModifier));
  EXPECT_TRUE(v.templ.contains(","));
  const VocabSet en = build_vocabs(train, 10, 10);
  EXPECT_TRUE(en.templ.contains("in"));
}

TEST(BuildVocabs, SizeBelowReservedIsError) {
  const std::vector<Entity> train = {make_entity("a", "x", {{"P1", "p", "v"}})};
  EXPECT_THROW(build_vocabs(train, 3, 10), Error);
  EXPECT_THROW(build_vocabs({}, 10, 10), Error);
}

TEST(BuildVocabs, DeterministicAndSaveLoad) {
  const std::vector<Entity> train = {make_entity("a", "street in paris", {{"P31", "instance of", "street"}}),
                                     make_entity("b", "lake in russia", {{"P17", "country", "russia"}})};
  const VocabSet a = build_vocabs(train, 50, 50);
  const VocabSet b = build_vocabs(train, 50, 50);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.target, b.target);
  const auto dir = (std::filesystem::temp_directory_path() / "hedmod_vocab_dir").string();
  a.save(dir);
  const VocabSet c = VocabSet::load(dir, 16);
  EXPECT_EQ(a.value, c.value);
  EXPECT_EQ(a.property, c.property);
  EXPECT_EQ(a.target, c.target);
  EXPECT_EQ(a.templ, c.templ);
}

TEST(SplitDataset, RatiosDeterminismAndPartition) {
  std::vector<Entity> all;
  for (int i = 0; i < 10; ++i) all.push_back(make_entity("E" + std::to_string(i), "x", {{"P1", "p", "v"}}));
  const auto s = split_dataset(all, 3);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.valid.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  const auto again = split_dataset(all, 3);
  for (std::size_t i = 0; i < s.train.size(); ++i) EXPECT_EQ(s.train[i].entity_id, again.train[i].entity_id);
  std::set<std::string> ids;
  for (const auto* part : {&s.train, &s.valid, &s.test}) {
    for (const auto& e : *part) ids.insert(e.entity_id);
  }
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_THROW(split_dataset(std::vector<Entity>(9, all[0]), 1), Error);
}

TEST(SplitDataset, LargeCorpusCounts) {
  std::vector<Entity> all(200000, make_entity("x", "x", {{"P1", "p", "v"}}));
  const auto s = split_dataset(std::move(all), 1);
  EXPECT_EQ(s.train.size(), 160000u);
  EXPECT_EQ(s.valid.size(), 20000u);
  EXPECT_EQ(s.test.size(), 20000u);
}

TEST(CorpusCopyRatio, StreetInParisFrance) {
  const std::vector<Entity> es = {make_entity("Q1", "street in paris , france",
                                              {{"P31", "instance of", "street"}, {"P17", "country", "france"},
                                               {"P131", "located in", "paris"}})};
  EXPECT_DOUBLE_EQ(corpus_copy_ratio(es), 1.0);
  const std::vector<Entity> half = {make_entity("Q2", "river in france", {{"P17", "country", "france"}})};
  EXPECT_DOUBLE_EQ(corpus_copy_ratio(half), 0.5);
}

TEST(CorpusCopyRatio, StopwordOnlyCorpusIsError) {
  const std::vector<Entity> es = {make_entity("Q1", "of the , in", {{"P1", "p", "v"}})};
  EXPECT_THROW(corpus_copy_ratio(es), Error);
}
