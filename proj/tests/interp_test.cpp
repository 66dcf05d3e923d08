#include "pepcmp/interp.hpp"

#include <random>

#include <Eigen/Dense>
#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "interp_oracles.hpp"

namespace pepcmp {
namespace {

using namespace testing_oracles;

constexpr int kTrials = 200;

TEST(ClassConstraintsTest, QuadraticsInClassSatisfyAll) {
  EXPECT_THAT(class_soundness_failures(11, kTrials), ::testing::IsEmpty());
}


TEST(ClassConstraintsTest, QuadraticsOutsideClassAreDetected) {
  EXPECT_THAT(class_detection_failures(12, kTrials), ::testing::IsEmpty());
}


TEST(ClassConstraintsTest, EmitsOneInequalityPerOrderedPair) {
  std::mt19937 rng(13);
  for (int n = 0; n <= 6; ++n) {
    const Sampled s = sample_quadratic(Eigen::MatrixXd::Identity(2, 2), rng, n);
    EXPECT_EQ(class_constraints(s.records, FunctionClass(0.1, 2.0)).size(), size_t(n * (n > 0 ? n - 1 : 0)));
  }
}

TEST(ClassConstraintsTest, RejectsMixedFunctions) {
  std::vector<EvalRecord> recs{{LinearExpr::atom(0), LinearExpr::atom(1), 0, 0},
                               {LinearExpr::atom(2), LinearExpr::atom(3), 1, 1}};
  EXPECT_THROW(class_constraints(recs, FunctionClass(0.0, 1.0)), InvalidArgument);
}

TEST(ClassConstraintsTest, NonsmoothClassDropsGradientTerm) {
  std::vector<EvalRecord> recs{{LinearExpr::atom(0), LinearExpr::atom(1), 0, 0},
                               {LinearExpr::atom(2), LinearExpr::atom(3), 1, 0}};
  for (const auto& c : class_constraints(recs, FunctionClass(0.0, kInf))) {
    for (const auto& [key, coeff] : c.form.gram_terms()) {
      // only <g_j, x_i - x_j>: never a product of two gradient atoms
      EXPECT_FALSE(key.first % 2 == 1 && key.second % 2 == 1) << coeff;
    }
  }
}

TEST(ConjugateClassTest, Examples) {
  EXPECT_EQ(conjugate_class(FunctionClass(0.1, 0.2)), FunctionClass(5.0, 10.0));
  EXPECT_EQ(conjugate_class(FunctionClass(0.0, 0.2)), FunctionClass(5.0, kInf));
}

TEST(ConjugateClassTest, Involution) {
  std::mt19937 rng(14);
  for (int t = 0; t < kTrials; ++t) {
    const FunctionClass c = random_class(rng);
    const FunctionClass cc = conjugate_class(conjugate_class(c));
    EXPECT_NEAR(cc.mu(), c.mu(), 1e-12 * (1.0 + c.mu()));
    if (c.smooth()) {
      EXPECT_NEAR(cc.L(), c.L(), 1e-12 * c.L());
    } else {
      EXPECT_TRUE(std::isinf(cc.L()));
    }
  }
}

TEST(OperatorConstraintsTest, BoundedOperatorsPass) {
  EXPECT_THAT(operator_soundness_failures(15, kTrials), ::testing::IsEmpty());
}


TEST(OperatorConstraintsTest, OversizedOperatorsFail) {
  EXPECT_THAT(operator_detection_failures(16, kTrials), ::testing::IsEmpty());
}


TEST(OperatorConstraintsTest, InconsistentAdjointFails) {
  std::mt19937 rng(17);
  for (int t = 0; t < kTrials; ++t) {
    const Eigen::MatrixXd M = random_operator(2, 2, 0.5, rng);
    const Eigen::MatrixXd W = random_operator(2, 2, 0.5, rng);
    const OperatorSample s = sample_operator(M, rng, 2, 2, &W);
    const auto oc = operator_constraints(s.records, OperatorBound(1.0));
    EXPECT_EQ(oc.equalities.size(), 4u);
    EXPECT_EQ(oc.blocks.size(), 2u);
    EXPECT_LT(operator_slack(oc, s), -1e-9) << "trial " << t;
  }
}

TEST(OperatorConstraintsTest, SplitOverloadChecksSides) {
  std::vector<OperatorRecord> fwd{{LinearExpr::atom(0), LinearExpr::atom(1), OperatorSide::Adjoint}};
  EXPECT_THROW(operator_constraints(fwd, {}, OperatorBound(1.0)), InvalidArgument);
}

}  // namespace
}  // namespace pepcmp
