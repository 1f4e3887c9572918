#include <cmath>

#include <gtest/gtest.h>

#include "tug/metrics.hpp"
#include "tug/random.hpp"

using namespace tug;
using namespace tug::metrics;

namespace {
using V = std::vector<double>;
}

TEST(Regression, PerfectFit) {
  const V x = {0.1, 0.5, 0.9};
  const auto m = regression_metrics(x, x);
  ASSERT_TRUE(m.pearson);
  EXPECT_NEAR(*m.pearson, 1.0, 1e-12);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
}

TEST(Regression, HandComputedErrors) {
  const auto m = regression_metrics(V{0.1, 0.5, 0.9}, V{0.2, 0.5, 0.8});
  EXPECT_NEAR(m.mae, 0.0667, 1e-4);
  EXPECT_NEAR(m.rmse, 0.0816, 1e-4);
}

TEST(Regression, AntiCorrelated) {
  const V labels = {0.1, 0.3, 0.35, 0.8};
  V preds;
  for (double y : labels) preds.push_back(1.0 - y);
  EXPECT_NEAR(*regression_metrics(preds, labels).pearson, -1.0, 1e-12);
}

TEST(Regression, ConstantSideLeavesPearsonUndefined) {
  EXPECT_FALSE(regression_metrics(V{0.1, 0.5, 0.9}, V{0.4, 0.4, 0.4}).pearson);
  EXPECT_FALSE(regression_metrics(V{0.3, 0.3}, V{0.1, 0.9}).pearson);
  const auto m = regression_metrics(V{0.3, 0.3}, V{0.1, 0.9});
  EXPECT_NEAR(m.mae, 0.4, 1e-15);
}

TEST(Regression, Errors) {
  EXPECT_THROW(regression_metrics(V{0.1}, V{0.1}), Error);
  try {
    regression_metrics(V{0.1, 0.2}, V{0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::length_mismatch);
  }
}

TEST(Regression, RmseAtLeastMaeAndAffineInvariance) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = 2 + rng.below(30);
    V p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform(-1, 1);
      y[i] = rng.uniform();
    }
    const auto m = regression_metrics(p, y);
    EXPECT_GE(m.rmse + 1e-15, m.mae);
    V q(p);
    const double a = 0.01 + 10 * rng.uniform(), b = rng.uniform(-3, 3);
    for (auto& x : q) x = a * x + b;
    ASSERT_TRUE(m.pearson);
    EXPECT_NEAR(*regression_metrics(q, y).pearson, *m.pearson, 1e-9);
  }
  // equal absolute errors: rmse == mae
  const auto eq = regression_metrics(V{0.2, 0.6, 0.9}, V{0.3, 0.5, 1.0});
  EXPECT_NEAR(eq.rmse, eq.mae, 1e-15);
}

TEST(Classification, PerfectClassifier) {
  const V x = {0.1, 0.8, 0.75, 0.3};
  const auto m = classification_metrics(x, x);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(*m.f1, 1.0);
  EXPECT_EQ(m.confusion, (Confusion{2, 0, 2, 0}));
}

TEST(Classification, AllPredictedPositive) {
  const auto m = classification_metrics(V{0.9, 0.9, 0.9, 0.9}, V{0.8, 0.1, 0.76, 0.2});
  EXPECT_DOUBLE_EQ(*m.precision, 0.5);
  EXPECT_DOUBLE_EQ(*m.recall, 1.0);
  EXPECT_NEAR(*m.f1, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
}

TEST(Classification, NoPredictedPositives) {
  const auto m = classification_metrics(V{0.1, 0.2, 0.3}, V{0.9, 0.1, 0.8});
  EXPECT_FALSE(m.precision);
  ASSERT_TRUE(m.recall);
  EXPECT_EQ(*m.recall, 0.0);
  EXPECT_EQ(*m.f1, 0.0);
  const auto none = classification_metrics(V{0.1}, V{0.1});
  EXPECT_FALSE(none.precision);
  EXPECT_FALSE(none.recall);
  EXPECT_FALSE(none.f1);
  EXPECT_EQ(none.accuracy, 1.0);
}

TEST(Classification, BoundaryCountsPositive) {
  const auto m = classification_metrics(V{0.75}, V{0.75});
  EXPECT_EQ(m.confusion.tp, 1);
  EXPECT_EQ(classification_metrics(V{0.7499999}, V{0.75}).confusion.fn, 1);
}

TEST(Classification, MatchesBruteForceCount) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + rng.below(20);
    V p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = std::round(rng.uniform() * 20) / 20;
      y[i] = std::round(rng.uniform() * 20) / 20;
    }
    const double t = 0.5 + 0.05 * static_cast<double>(rng.below(8));
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pp = p[i] >= t, yy = y[i] >= t;
      tp += pp && yy;
      fp += pp && !yy;
      tn += !pp && !yy;
      fn += !pp && yy;
    }
    const auto m = classification_metrics(p, y, t);
    EXPECT_EQ(m.confusion, (Confusion{tp, fp, tn, fn}));
    EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(tp + tn) / static_cast<double>(n));
    if (tp + fp) {
      EXPECT_DOUBLE_EQ(*m.precision, static_cast<double>(tp) / static_cast<double>(tp + fp));
    } else {
      EXPECT_FALSE(m.precision);
    }
    if (tp + fn) {
      EXPECT_DOUBLE_EQ(*m.recall, static_cast<double>(tp) / static_cast<double>(tp + fn));
    } else {
      EXPECT_FALSE(m.recall);
    }
  }
}

TEST(Sweep, Examples) {
  const V p = {0.76, 0.82, 0.5, 0.9, 0.78}, y = {0.8, 0.9, 0.2, 0.77, 0.6};
  const std::vector<double> ts = {0.75, 0.80};
  const auto rows = threshold_sweep(p, y, ts);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LE(*rows[1].recall, *rows[0].recall);
  EXPECT_EQ(rows[1].label_threshold, 0.75);

  const auto single = threshold_sweep(p, y, std::vector<double>{0.75});
  ASSERT_EQ(single.size(), 1u);
  const auto direct = classification_metrics(p, y, 0.75);
  EXPECT_EQ(single[0].confusion, direct.confusion);
  EXPECT_EQ(single[0].precision, direct.precision);
  EXPECT_EQ(single[0].f1, direct.f1);

  EXPECT_TRUE(threshold_sweep(p, y, std::vector<double>{}).empty());
}

TEST(Sweep, RecallNonIncreasing) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = 2 + rng.below(40);
    V p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform();
      y[i] = rng.uniform();
    }
    std::vector<double> ts = {0.5, 0.6, 0.7, 0.75, 0.8, 0.9};
    const auto rows = threshold_sweep(p, y, ts);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].recall && rows[i - 1].recall) {
        EXPECT_LE(*rows[i].recall, *rows[i - 1].recall);
      }
    }
  }
}

TEST(Report, ListsEveryThreshold) {
  const auto r = evaluate(V{0.9, 0.1, 0.8}, V{0.85, 0.2, 0.4}, std::vector<double>{0.75, 0.80});
  const auto text = format_report(r);
  EXPECT_NE(text.find("Pearson Correlation"), std::string::npos);
  EXPECT_NE(text.find("0.75"), std::string::npos);
  EXPECT_NE(text.find("0.80"), std::string::npos);
}
