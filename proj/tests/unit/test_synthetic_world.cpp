#include "mint/synthetic_world.hpp"
#include "mint/theory_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mint;

namespace {

LatentParams defaults(double s) { return LatentParams::uniform(8, 4.0, 32, 8, 9.0, 16, s); }

}  // namespace

TEST(SampleLatents, SeverityZeroRemovesCorruption) {
  const LatentParams p = defaults(0.0);
  const LatentBatch b = sample_latents(p, 50, 1);
  const SegmentLayout l = p.layout();
  for (Eigen::Index i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < l.shift + l.noise; ++j) {
      EXPECT_EQ(b.latents(i, static_cast<Eigen::Index>(l.offset(Segment::kShift) + j)), 0.0);
    }
  }
}

TEST(SampleLatents, SegmentStructure) {
  const LatentParams p = defaults(2.5);
  const LatentBatch b = sample_latents(p, 200, 2);
  const SegmentLayout l = p.layout();
  for (Eigen::Index i = 0; i < 200; ++i) {
    const double sign = b.gt_labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < l.cls; ++j) EXPECT_EQ(b.latents(i, static_cast<Eigen::Index>(j)), sign * p.mu(j));
    for (std::size_t j = 0; j < l.irr; ++j) {
      EXPECT_EQ(std::abs(b.latents(i, static_cast<Eigen::Index>(l.offset(Segment::kIrr) + j))), 1.0);
    }
    for (std::size_t j = 0; j < l.shift; ++j) {
      EXPECT_EQ(b.latents(i, static_cast<Eigen::Index>(l.offset(Segment::kShift) + j)), 2.5 * p.delta(j));
    }
    for (std::size_t j = 0; j < l.noise; ++j) {
      EXPECT_EQ(std::abs(b.latents(i, static_cast<Eigen::Index>(l.offset(Segment::kNoise) + j))), 2.5);
    }
  }
}

TEST(SampleLatents, Deterministic) {
  const LatentParams p = defaults(3.0);
  const LatentBatch a = sample_latents(p, 1, 99);
  const LatentBatch b = sample_latents(p, 1, 99);
  EXPECT_EQ(a.latents, b.latents);
  EXPECT_EQ(a.gt_labels, b.gt_labels);
}

TEST(SampleLatents, IrrelevantSegmentIsCentred) {
  const LatentParams p = defaults(1.0);
  const LatentBatch b = sample_latents(p, 100000, 4);
  const auto off = static_cast<Eigen::Index>(p.layout().offset(Segment::kIrr));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p.d_irr); ++j) {
    EXPECT_NEAR(b.latents.col(off + j).mean(), 0.0, 0.02);
  }
}

TEST(SampleLatents, BalancedModeSplitsExactly) {
  const LatentBatch b = sample_latents(defaults(1.0), 1001, 5, LabelMode::kBalanced);
  int ones = 0;
  for (int y : b.gt_labels) ones += y;
  EXPECT_EQ(ones, 501);
}

TEST(Embed, NormalizesRows) {
  Matrix v(1, 4);
  v << 3, 4, 0, 0;
  const Matrix z = embed_rows(v, Vector::Ones(4));
  EXPECT_NEAR(z(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(z(0, 1), 0.8, 1e-15);
  EXPECT_EQ(z(0, 2), 0.0);
}

TEST(Embed, UnitNormAndScaleInvariant) {
  const LatentParams p = defaults(4.0);
  const LatentBatch b = sample_latents(p, 300, 6);
  NormWeights w = NormWeights::ones(p.layout());
  for (Eigen::Index j = 0; j < w.w.size(); ++j) w.w(j) = 0.5 + 0.01 * static_cast<double>(j);
  const EmbeddingSet z = embed(b, w);
  for (Eigen::Index i = 0; i < z.data.rows(); ++i) EXPECT_NEAR(z.data.row(i).norm(), 1.0, 1e-12);
  NormWeights doubled = w;
  doubled.w *= 2.0;
  EXPECT_EQ(embed(b, doubled).data, z.data);
}

TEST(Embed, AnnihilatedSample) {
  Matrix v(2, 2);
  v << 1, 0, 0, 1;
  Vector w(2);
  w << 1, 0;
  try {
    embed_rows(v, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("annihilated sample"), std::string::npos);
  }
}

TEST(TextEmbeddings, CleanTextAlignsWithClassSubspace) {
  LatentParams p = defaults(0.0);
  p.mu = Vector::Ones(1);
  const TextEmbeddings t = make_text_embeddings(p, 0.0, 1);
  EXPECT_NEAR(t.rows(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(t.rows(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(t.rows.row(1).tail(t.rows.cols() - 1).norm(), 0.0, 1e-15);
}

TEST(TextEmbeddings, CleanTextClassifiesPerfectlyAtAnySeverity) {
  for (double s : {0.0, 2.0, 5.0}) {
    const LatentParams p = defaults(s);
    const TextEmbeddings t = make_text_embeddings(p, 0.0, 3);
    const LatentBatch b = sample_latents(p, 10000, 7);
    const Matrix z = embed_rows(b.latents, Vector::Ones(static_cast<Eigen::Index>(p.dim())));
    // Brute-force classification by explicit dot products.
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      double s0 = 0, s1 = 0;
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        s0 += z(i, j) * t.rows(0, j);
        s1 += z(i, j) * t.rows(1, j);
      }
      ASSERT_EQ(s1 > s0 ? 1 : 0, b.gt_labels[static_cast<std::size_t>(i)]);
    }
  }
}

TEST(TextEmbeddings, ContaminatedTextIsUnitNormAndDeterministic) {
  const LatentParams p = defaults(4.0);
  const TextEmbeddings a = make_text_embeddings(p, 0.3, 11);
  const TextEmbeddings b = make_text_embeddings(p, 0.3, 11);
  EXPECT_EQ(a.rows, b.rows);
  for (int c = 0; c < 2; ++c) EXPECT_NEAR(a.rows.row(c).norm(), 1.0, 1e-12);
  EXPECT_NE(a.rows.row(0).tail(56), -a.rows.row(1).tail(56));
}

TEST(TextEmbeddings, ZeroShotAccuracyDegradesWithSeverity) {
  // Weak class signal so contamination matters; averaged over text seeds.
  double previous = 2.0;
  for (double s : {0.0, 2.0, 4.0}) {
    LatentParams p = LatentParams::uniform(8, 0.5, 32, 8, 9.0, 16, s);
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const TextEmbeddings t = make_text_embeddings(p, 0.3, seed);
      const McMeasurement m =
          mc_measure(p, NormWeights::ones(p.layout()), 20000, 100 + seed, [&](const LatentBatch&, const Matrix& z,
                                                                            std::uint64_t) {
            std::vector<int> out(static_cast<std::size_t>(z.rows()));
            const Matrix scores = z * t.rows.transpose();
            for (Eigen::Index i = 0; i < z.rows(); ++i) out[static_cast<std::size_t>(i)] = scores(i, 1) > scores(i, 0);
            return out;
          });
      acc += m.accuracy / 8.0;
    }
    EXPECT_LE(acc, previous);
    previous = acc;
  }
}

TEST(BatchStream, SingleEntry) {
  BatchStream stream({ScheduleEntry{defaults(1.0), 5, 20, "a"}}, 1);
  EXPECT_EQ(stream.total_batches(), 5u);
  const auto batches = stream.collect();
  ASSERT_EQ(batches.size(), 5u);
  std::size_t total = 0;
  for (const auto& b : batches) total += b.size();
  EXPECT_EQ(total, 100u);
}

TEST(BatchStream, InterleavedAlternates) {
  BatchStream stream({ScheduleEntry{defaults(1.0), 3, 4, "low"}, ScheduleEntry{defaults(4.0), 3, 4, "high"}}, 2,
                     ScheduleOrder::kInterleaved);
  const auto batches = stream.collect();
  ASSERT_EQ(batches.size(), 6u);
  for (std::size_t k = 0; k < batches.size(); ++k) {
    EXPECT_EQ(batches[k].severity, k % 2 == 0 ? 1.0 : 4.0);
    EXPECT_EQ(batches[k].tag, k % 2 == 0 ? "low" : "high");
  }
}

TEST(BatchStream, SequentialKeepsOrder) {
  BatchStream stream({ScheduleEntry{defaults(1.0), 2, 4, "a"}, ScheduleEntry{defaults(3.0), 1, 4, "b"}}, 3);
  const auto batches = stream.collect();
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].tag, "a");
  EXPECT_EQ(batches[1].tag, "a");
  EXPECT_EQ(batches[2].tag, "b");
}

TEST(BatchStream, ReproducibleAcrossRuns) {
  const std::vector<ScheduleEntry> schedule{ScheduleEntry{defaults(2.0), 4, 7, "x"}};
  const auto a = BatchStream(schedule, 17).collect();
  const auto b = BatchStream(schedule, 17).collect();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].latents, b[k].latents);
    EXPECT_EQ(a[k].gt_labels, b[k].gt_labels);
  }
}
