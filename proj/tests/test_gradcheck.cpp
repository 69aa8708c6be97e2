// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "gradcheck.hpp"

using namespace cdn;

TEST_CASE("generator term gradients, network fusion") {
  for (LossTerm t : {LossTerm::Gan, LossTerm::Cyc, LossTerm::Identity, LossTerm::Sup}) {
    test::GradCheckSetup s = test::gradcheck_setup(FuseMode::Network, 2, 8, 21);
    const test::GradCheckStats st = test::check_generator_term(s, t, 1e-3, 1e-4);
    CAPTURE(st.name);
    CAPTURE(st.max_rel);
    CHECK(st.failures == 0);
    CHECK(st.checked > 100);
  }
}

TEST_CASE("discriminator gradients") {
  test::GradCheckSetup s = test::gradcheck_setup(FuseMode::ElementwiseAdd, 2, 8, 22);
  for (bool low : {true, false}) {
    const test::GradCheckStats st = test::check_discriminator(s, low, 1e-3, 1e-4);
    CAPTURE(st.name);
    CHECK(st.failures == 0);
    CHECK(st.checked > 50);
  }
}
