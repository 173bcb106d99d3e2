#include <gtest/gtest.h>

#include "dnamix/network.hpp"

using namespace dnamix;

TEST(DiscreteNetwork, RejectsUnknownParents) {
  DiscreteNetwork net;
  EXPECT_THROW(net.add_node("a", 2, {3}, {0.5, 0.5}), ValidationError);
}

TEST(DiscreteNetwork, RejectsBadRows) {
  DiscreteNetwork net;
  EXPECT_THROW(net.add_node("a", 2, {}, {0.5, 0.6}), ValidationError);
  EXPECT_THROW(net.add_node("a", 2, {}, {1.5, -0.5}), ValidationError);
  EXPECT_THROW(net.add_node("a", 2, {}, {1.0}), ValidationError);
  EXPECT_EQ(net.size(), 0u);
  net.add_node("a", 2, {}, {0.5, 0.5 + 5e-13});
  EXPECT_EQ(net.size(), 1u);
}

TEST(DiscreteNetwork, CptLayoutIsLastParentFastest) {
  DiscreteNetwork net;
  const auto a = net.add_node("a", 2, {}, {0.5, 0.5});
  const auto b = net.add_node("b", 3, {}, {0.2, 0.3, 0.5});
  const auto c = net.add_node("c", 2, {a, b}, {1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1});
  EXPECT_EQ(net.parent_configurations(c), 6u);
  EXPECT_EQ(net.family(c), (std::vector<NodeId>{a, b, c}));
}

TEST(DiscreteNetwork, AuxiliaryNodesAreBinaryLeaves) {
  DiscreteNetwork net;
  const auto a = net.add_node("a", 2, {}, {0.5, 0.5});
  EXPECT_THROW(net.add_node("y", 3, {a}, {1, 0, 0, 1, 0, 0}, NodeKind::auxiliary), ValidationError);
  const auto y = net.add_node("y", 2, {a}, {1, 0, 0, 1}, NodeKind::auxiliary);
  EXPECT_TRUE(net.is_auxiliary(y));
  EXPECT_THROW(net.add_node("z", 2, {y}, {1, 0, 0, 1}), ValidationError);
}

TEST(AttachAuxVariable, IdentityFactor) {
  DiscreteNetwork net;
  const auto x = net.add_node("x", 2, {}, {0.5, 0.5});
  const auto y = attach_aux_variable(net, {{x}, {0.0, 1.0}, 1.0, "y"});
  // rows (P(Y=0|x), P(Y=1|x)); the P(Y=1|.) column is (0, 1)
  EXPECT_EQ(net.cpt(y), (std::vector<double>{1.0, 0.0, 0.0, 1.0}));
}

TEST(AttachAuxVariable, DefaultScaleIsMaximum) {
  DiscreteNetwork net;
  const auto x = net.add_node("x", 3, {}, {0.2, 0.3, 0.5});
  const AuxVariableSpec spec{{x}, {2.0, 8.0, 4.0}, std::nullopt, ""};
  EXPECT_DOUBLE_EQ(aux_scale(spec), 8.0);
  const auto y = attach_aux_variable(net, spec);
  double mx = 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    const double p = net.cpt(y)[2 * r + 1];
    EXPECT_LE(p, 1.0);
    mx = std::max(mx, p);
  }
  EXPECT_DOUBLE_EQ(mx, 1.0);
}

TEST(AttachAuxVariable, RejectsInvalidFactors) {
  DiscreteNetwork net;
  const auto x = net.add_node("x", 2, {}, {0.5, 0.5});
  EXPECT_THROW(attach_aux_variable(net, {{x}, {-1.0, 1.0}, std::nullopt, ""}), ValidationError);
  EXPECT_THROW(attach_aux_variable(net, {{x}, {1.0, 3.0}, 2.0, ""}), ValidationError);
  EXPECT_THROW(attach_aux_variable(net, {{x}, {1.0}, std::nullopt, ""}), ValidationError);
  EXPECT_THROW(attach_aux_variable(net, {{x}, {1.0, 1.0}, 0.0, ""}), ValidationError);
  EXPECT_THROW(attach_aux_variable(net, {{7}, {1.0, 1.0}, std::nullopt, ""}), ValidationError);
}
