#include <gtest/gtest.h>

#include "claimrank/config.hpp"

using namespace claimrank;

namespace {

TEST(Config, SectionsAndTypes) {
  const auto config = cfg::Config::parse_text(
      "# pipeline settings\n"
      "seed = 7\n"
      "[paths]\n"
      "corpus_dir = /data/corpus\n"
      "[train]\n"
      "learning_rate = 0.001\n"
      "epochs = 15\n"
      "shuffle = true\n",
      "test");
  EXPECT_EQ(config.get("paths.corpus_dir"), "/data/corpus");
  EXPECT_EQ(config.get_int("seed", 0), 7);
  EXPECT_DOUBLE_EQ(config.get_double("train.learning_rate", 0.0), 0.001);
  EXPECT_TRUE(config.get_bool("train.shuffle", false));
  EXPECT_EQ(config.get("missing.key", "fallback"), "fallback");
  EXPECT_THROW(config.require("missing.key"), ConfigError);
}

TEST(Config, LaterAssignmentsWin) {
  const auto config =
      cfg::Config::parse_text("a = 1\na = 2\n", "test");
  EXPECT_EQ(config.get_int("a", 0), 2);
}

TEST(Config, ParseErrors) {
  EXPECT_THROW(cfg::Config::parse_text("[unterminated\n", "t"), ParseError);
  EXPECT_THROW(cfg::Config::parse_text("key_without_value\n", "t"), ParseError);
  EXPECT_THROW(cfg::Config::parse_text("= value\n", "t"), ParseError);
  EXPECT_THROW(cfg::Config::parse_text("[]\n", "t"), ParseError);
}

TEST(Config, BadTypedValues) {
  const auto config = cfg::Config::parse_text("x = notanumber\nb = maybe\n", "t");
  EXPECT_THROW(config.get_int("x", 0), ParseError);
  EXPECT_THROW(config.get_bool("b", false), ConfigError);
}

TEST(Config, HashIsOrderInsensitiveAndContentSensitive) {
  const auto a = cfg::Config::parse_text("x = 1\ny = 2\n", "t");
  const auto b = cfg::Config::parse_text("y = 2\nx = 1\n", "t");
  const auto c = cfg::Config::parse_text("x = 1\ny = 3\n", "t");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
}

}  // namespace
