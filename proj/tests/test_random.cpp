#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "aeromine/random.hpp"

using namespace aeromine;

TEST(RandomStream, SameKeySameSequence) {
  RandomStream a({7, 1, 3, "evolve"});
  RandomStream b({7, 1, 3, "evolve"});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.draws(), 100u);
}

TEST(RandomStream, EveryKeyFieldSeparatesStreams) {
  const RandomKey base{7, 1, 3, "evolve"};
  std::set<std::uint64_t> firsts;
  for (RandomKey k : {base, RandomKey{8, 1, 3, "evolve"}, RandomKey{7, 2, 3, "evolve"}, RandomKey{7, 1, 4, "evolve"},
                      RandomKey{7, 1, 3, "fit"}}) {
    firsts.insert(RandomStream(k).next_u64());
  }
  EXPECT_EQ(firsts.size(), 5u);
}

TEST(RandomStream, IndexedPurposeDiffersFromPlain) {
  EXPECT_NE(make_stream(1, 0, 0, "seed-genome", 0).next_u64(), make_stream(1, 0, 0, "seed-genome").next_u64());
  EXPECT_NE(make_stream(1, 0, 0, "seed-genome", 0).next_u64(), make_stream(1, 0, 0, "seed-genome", 1).next_u64());
}

TEST(RandomStream, UniformInUnitInterval) {
  RandomStream s({1, 0, 0, "u"});
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(RandomStream, BelowCoversRangeEvenly) {
  RandomStream s({2, 0, 0, "below"});
  std::vector<int> counts(5, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto x = s.below(5);
    ASSERT_LT(x, 5u);
    ++counts[x];
  }
  const double expected = n / 5.0;
  const double sd = std::sqrt(n * 0.2 * 0.8);
  for (int c : counts) EXPECT_NEAR(c, expected, 3 * sd);
}

TEST(RandomStream, NormalMoments) {
  RandomStream s({3, 0, 0, "normal"});
  const int n = 20000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.03);
  EXPECT_NEAR(sq / n, 1.0, 0.04);
  EXPECT_EQ(s.draws(), 2u * n);
}

TEST(RandomStream, BernoulliEdges) {
  RandomStream s({4, 0, 0, "b"});
  for (int i = 0; i < 100; ++i) {
    EXPECT_FALSE(s.bernoulli(0.0));
    EXPECT_TRUE(s.bernoulli(1.0));
  }
}
