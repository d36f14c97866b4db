#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "tdanet/embed/catalog.hpp"
#include "tdanet/embed/embeddings.hpp"

using namespace tdanet::embed;

TEST(LoadText, ParsesSingleLine) {
  std::istringstream in("cup 0.1 0.2 0.3\n");
  const EmbeddingTable t = load_text_embeddings(in, {"cup"});
  EXPECT_EQ(t.dim(), 3u);
  const auto v = t.at("cup");
  EXPECT_DOUBLE_EQ(v[0], 0.1);
  EXPECT_DOUBLE_EQ(v[1], 0.2);
  EXPECT_DOUBLE_EQ(v[2], 0.3);
}

TEST(LoadText, KeepsOnlyWantedClasses) {
  std::istringstream in("cup 1 2\nmug 3 4\nbowl 5 6\n");
  const EmbeddingTable t = load_text_embeddings(in, {"mug"});
  EXPECT_EQ(t.size(), 1u);
  EXPECT_TRUE(t.contains("mug"));
  EXPECT_FALSE(t.contains("cup"));
}

TEST(LoadText, MultiWordNameAveragesTokens) {
  std::istringstream in("remote 1.0 2.0\ncontrol 3.0 -2.0\n");
  const EmbeddingTable t = load_text_embeddings(in, {"remote control"});
  const auto v = t.at("remote control");
  EXPECT_DOUBLE_EQ(v[0], 2.0);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
}

TEST(LoadText, JoinedTokenPreferredWhenPresent) {
  std::istringstream in("remote 1 1\ncontrol 1 1\nremote_control 7 8\n");
  const EmbeddingTable t = load_text_embeddings(in, {"remote control"});
  const auto v = t.at("remote control");
  EXPECT_EQ(v[0], 7.0);
  EXPECT_EQ(v[1], 8.0);
}

TEST(LoadText, MissingClassesAllNamed) {
  std::istringstream in("cup 1 2\n");
  try {
    load_text_embeddings(in, {"cup", "spatula", "teddy bear"});
    FAIL() << "expected EmbeddingError";
  } catch (const EmbeddingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("spatula"), std::string::npos) << msg;
    EXPECT_NE(msg.find("teddy bear"), std::string::npos) << msg;
    EXPECT_EQ(msg.find("'cup'"), std::string::npos) << msg;
  }
}

TEST(LoadText, InconsistentDimensionReportsLine) {
  std::istringstream in("cup 1 2 3\nmug 1 2 3\n\nbowl 1 2\n");
  try {
    load_text_embeddings(in, {"cup"});
    FAIL() << "expected EmbeddingError";
  } catch (const EmbeddingError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(LoadText, BadNumberIsParseError) {
  std::istringstream in("cup 1 x2\n");
  EXPECT_THROW(load_text_embeddings(in, {"cup"}), EmbeddingError);
}

TEST(LoadText, SaveReloadRoundTripIsExact) {
  const EmbeddingTable t = synth_embeddings(default_catalog(), 16, 0.2, 5);
  std::stringstream buf;
  save_text_embeddings(t, buf);
  const EmbeddingTable back = load_text_embeddings(buf, t.classes());
  EXPECT_EQ(back, t);
}

TEST(Synth, ZeroNoiseGivesIdenticalClusterVectors) {
  const ClassCatalog cat = default_catalog();
  const EmbeddingTable t = synth_embeddings(cat, 32, 0.0, 1);
  EXPECT_EQ(t.size(), cat.size());
  for (const auto& a : cat.classes()) {
    for (const auto& b : cat.classes()) {
      if (a.prototype != b.prototype) continue;
      EXPECT_NEAR(cosine(t.at(a.name), t.at(b.name)), 1.0, 1e-12) << a.name << " / " << b.name;
    }
  }
}

TEST(Synth, WithinClusterBeatsAcrossClusterForAllPairs) {
  const ClassCatalog cat = default_catalog();
  const EmbeddingTable t = synth_embeddings(cat, 32, 0.1, 7);
  double min_within = 2.0, max_across = -2.0;
  for (const auto& a : cat.classes())
    for (const auto& b : cat.classes()) {
      if (a.name == b.name) continue;
      const double c = cosine(t.at(a.name), t.at(b.name));
      if (a.prototype == b.prototype) {
        min_within = std::min(min_within, c);
      } else {
        max_across = std::max(max_across, c);
      }
    }
  EXPECT_GT(min_within, max_across);
}

TEST(Synth, NearestNeighbourSharesPrototype) {
  const ClassCatalog cat = default_catalog();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EmbeddingTable t = synth_embeddings(cat, 32, 0.1, seed);
    for (const auto& a : cat.classes()) {
      const ClassInfo* best = nullptr;
      double best_c = -2.0;
      for (const auto& b : cat.classes()) {
        if (a.name == b.name) continue;
        const double c = cosine(t.at(a.name), t.at(b.name));
        if (c > best_c) {
          best_c = c;
          best = &b;
        }
      }
      ASSERT_NE(best, nullptr);
      // Parents sit alone in their cluster; only targets need a neighbour.
      if (!a.is_parent) {
        EXPECT_EQ(best->prototype, a.prototype) << a.name << " seed " << seed;
      }
    }
  }
}

TEST(Synth, DeterministicAndUnitNorm) {
  const ClassCatalog cat = default_catalog();
  const EmbeddingTable a = synth_embeddings(cat, 32, 0.1, 3);
  const EmbeddingTable b = synth_embeddings(cat, 32, 0.1, 3);
  EXPECT_EQ(a, b);
  for (const auto& [name, v] : a.entries()) EXPECT_NEAR(cosine(v, v), 1.0, 1e-12);
  EXPECT_NE(a, synth_embeddings(cat, 32, 0.1, 4));
}

TEST(Synth, RejectsBadArguments) {
  const ClassCatalog cat = default_catalog();
  EXPECT_THROW(synth_embeddings(cat, 1, 0.1, 0), EmbeddingError);
  EXPECT_THROW(synth_embeddings(cat, 32, -0.1, 0), EmbeddingError);
  // Eight prototypes do not fit in four dimensions.
  EXPECT_THROW(synth_embeddings(cat, 4, 0.1, 0), EmbeddingError);
}

TEST(EmbeddingOf, LookupAndErrors) {
  const EmbeddingTable t = synth_embeddings(default_catalog(), 12, 0.1, 0);
  for (const auto& name : t.classes()) EXPECT_EQ(embedding_of(t, name).size(), 12u);
  const auto v = embedding_of(t, "cup");
  EXPECT_EQ(v.data(), t.at("cup").data());
  EXPECT_THROW(embedding_of(t, "spatula"), EmbeddingError);
}

TEST(Table, RejectsRaggedVectors) {
  EXPECT_THROW(EmbeddingTable(3, {{"a", {1, 2, 3}}, {"b", {1, 2}}}), EmbeddingError);
}

TEST(Catalog, DefaultIsConsistent) {
  const ClassCatalog cat = default_catalog();
  EXPECT_EQ(cat.parent_names().size(), 4u);
  EXPECT_EQ(cat.child_names().size(), 12u);
  for (const auto& c : cat.child_names()) EXPECT_TRUE(cat.at(cat.at(c).parent).is_parent) << c;
}

TEST(Catalog, ValidationErrors) {
  EXPECT_THROW(ClassCatalog({{"a", 0, 1.0, 0.0, true, "", {}}, {"a", 0, 1.0, 0.0, true, "", {}}}),
               std::invalid_argument);
  EXPECT_THROW(ClassCatalog({{"a", 0, 0.0, 0.0, true, "", {}}}), std::invalid_argument);
  EXPECT_THROW(ClassCatalog({{"p", 0, 0.2, 0.0, true, "", {}}, {"c", 1, 0.5, 0.0, false, "p", {}}}),
               std::invalid_argument);
  EXPECT_THROW(ClassCatalog({{"c", 1, 0.5, 0.0, false, "nothing", {}}}), std::invalid_argument);
  EXPECT_THROW(default_catalog().at("spatula"), std::out_of_range);
}
