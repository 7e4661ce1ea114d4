#include <gtest/gtest.h>

#include "hedmod/annotator.hpp"
#include "hedmod/error.hpp"
#include "hedmod/synth.hpp"

using namespace hedmod;

namespace {

Tokens templ(const std::string& description) { return annotate(tokenize(description)).template_tokens; }
Tokens toks(const std::string& s) { return tokenize(s); }

}  // namespace

TEST(Annotate, StreetInParisFrance) {
  EXPECT_EQ(templ("street in paris , france"), toks("$hed$ in $mod$ , $mod$"));
  EXPECT_EQ(extract_heads(toks("street in paris , france")), std::set<std::string>{"street"});
}

TEST(Annotate, CoordinatedHeads) {
  const Annotation a = annotate(toks("american singer , producer"));
  EXPECT_EQ(a.template_tokens, toks("$mod$ $hed$ , $hed$"));
  EXPECT_EQ(a.heads(), (Tokens{"singer", "producer"}));
  EXPECT_EQ(a.modifiers(), Tokens{"american"});
  EXPECT_EQ(extract_heads(toks("singer and actor")), (std::set<std::string>{"singer", "actor"}));
}

TEST(Annotate, SingleToken) {
  EXPECT_EQ(templ("human"), Tokens{"$hed$"});
}

TEST(Annotate, LakeInSiberiaRussia) {
  EXPECT_EQ(extract_heads(toks("lake in siberia , russia")), std::set<std::string>{"lake"});
}

TEST(Annotate, NumeralsAreModifiers) {
  EXPECT_EQ(templ("2014 film"), toks("$mod$ $hed$"));
}

TEST(Annotate, CoordinationStopsAtPreposition) {
  const Annotation a = annotate(toks("singer in france and germany"));
  EXPECT_EQ(a.heads(), Tokens{"singer"});
  EXPECT_EQ(a.modifiers(), (Tokens{"france", "germany"}));
  EXPECT_EQ(a.template_tokens, toks("$hed$ in $mod$ and $mod$"));
}

TEST(Annotate, RightmostTokenOfCompound) {
  const Annotation a = annotate(toks("mountain range in chile"));
  EXPECT_EQ(a.heads(), Tokens{"range"});
  EXPECT_EQ(a.modifiers(), (Tokens{"mountain", "chile"}));
}

TEST(Annotate, LeadingFunctionWordsFallBack) {
  const Annotation a = annotate(toks("in paris"));
  EXPECT_EQ(a.template_tokens, toks("in $hed$"));
  EXPECT_EQ(templ("of"), Tokens{"of"});
  EXPECT_TRUE(annotate(toks(", .")).heads().empty());
}

TEST(Annotate, RolesAlignWithTemplate) {
  const Annotation a = annotate(toks("1998 song by john smith"));
  ASSERT_EQ(a.roles.size(), a.tokens.size());
  ASSERT_EQ(a.template_tokens.size(), a.tokens.size());
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    if (a.roles[i] == Role::kHead) EXPECT_EQ(a.template_tokens[i], kHead);
    if (a.roles[i] == Role::kModifier) EXPECT_EQ(a.template_tokens[i], kModifier);
    if (a.roles[i] == Role::kFunction) EXPECT_EQ(a.template_tokens[i], a.tokens[i]);
  }
  EXPECT_EQ(a.template_tokens, toks("$mod$ $hed$ by $mod$ $mod$"));
}

TEST(Annotate, EmptyIsError) {
  EXPECT_THROW(annotate(Tokens{}), Error);
}

TEST(ApplyTemplate, FillsSlotsInOrder) {
  EXPECT_EQ(apply_template(toks("$hed$ in $mod$ , $mod$"), {"street"}, {"paris", "france"}),
            toks("street in paris , france"));
  EXPECT_EQ(apply_template({"$hed$"}, {"human"}, {}), Tokens{"human"});
}

TEST(ApplyTemplate, MissingHeadNamesSlot) {
  try {
    apply_template(toks("$hed$ in $mod$"), {}, {"paris"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("index 0"), std::string::npos) << e.what();
  }
  EXPECT_THROW(apply_template(toks("$hed$ in $mod$ , $mod$"), {"a"}, {"b"}), Error);
}

TEST(Annotate, RoundTripOnSyntheticFamilies) {
  SynthOptions opt;
  opt.entities = 1000;
  const SynthCorpus corpus = make_synthetic_corpus(opt);
  std::set<std::size_t> families;
  for (std::size_t i = 0; i < corpus.entities.size(); ++i) {
    const Entity& e = corpus.entities[i];
    const Annotation a = annotate(e.description);
    EXPECT_EQ(a.template_tokens, e.gold_template) << join(e.description);
    EXPECT_EQ(apply_template(a.template_tokens, a.heads(), a.modifiers()), e.description);
    EXPECT_FALSE(a.heads().empty());
    families.insert(corpus.family[i]);
  }
  EXPECT_EQ(families.size(), synthetic_families().size());
}

TEST(Annotate, TemplateTokensComeFromInputFunctionWords) {
  const Lexicon& lex = Lexicon::english();
  for (const char* d : {"street in paris , france", "the 2014 film", "album by x and y", "painter ; poet"}) {
    const Annotation a = annotate(toks(d));
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
      const std::string& t = a.template_tokens[i];
      if (t != kHead && t != kModifier) EXPECT_TRUE(lex.is_function(t)) << t;
    }
  }
}
