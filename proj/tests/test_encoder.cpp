// Copyright 2026 The snas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <string>

#include "snas/encoder.hpp"
#include "test_util.hpp"

namespace snas {
namespace {

using namespace snas::testing;

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

TEST(EncodePlain, Identity) { EXPECT_EQ(encode_plain(default_grammar(), im("identity")).text, "identity"); }

TEST(EncodePlain, ConvBlock) {
  EXPECT_EQ(encode_plain(default_grammar(), conv(3, 2, 1, linear(128))).text,
            "routing[im2col(3,2,1), computation<linear(128)>, col2im]");
}

TEST(EncodePlain, BranchingOfTwoRelus) {
  EXPECT_EQ(encode_plain(default_grammar(), branch2(im("relu"), im("relu"))).text,
            "branching(2)[clone(2), computation<relu>, computation<relu>, add]");
}

TEST(EncodePlain, Sequential) {
  EXPECT_EQ(encode_plain(default_grammar(), seq(im("norm"), im("identity"))).text,
            "sequential[computation<norm>, identity]");
}

TEST(EncodeWithShapes, Identity) {
  EXPECT_EQ(encode_with_shapes(default_grammar(), im("identity"), kCifar).text,
            "identity {'out_feature_shape': [3, 32, 32]}");
}

TEST(EncodeWithShapes, ConvBlock) {
  EXPECT_EQ(encode_with_shapes(default_grammar(), conv(3, 2, 1, linear(128)), kCifar).text,
            "routing[im2col(3,2,1) {'out_feature_shape': [256, 27]}, "
            "computation<linear(128)> {'out_feature_shape': [256, 128]}, "
            "col2im {'out_feature_shape': [128, 16, 16]}]");
}

TEST(EncodeWithShapes, RejectsUncompilable) {
  EXPECT_THROW(encode_with_shapes(default_grammar(), branch2(conv(1, 2, 0, linear(16)), im("relu")), kCifar),
               ShapeError);
}

TEST(Parse, Identity) { EXPECT_EQ(parse(default_grammar(), "identity"), im("identity")); }

TEST(Parse, ToleratesWhitespaceAndAnnotations) {
  const auto t = conv(3, 2, 1, linear(128));
  EXPECT_EQ(parse(default_grammar(), "  routing[ im2col(3, 2, 1) {'out_feature_shape': [256, 27]} ,"
                                     "computation< linear(128) >,col2im ]  "),
            t);
}

TEST(Parse, NonIntegerArgument) {
  const Grammar& g = default_grammar();
  EXPECT_THROW(parse(g, "computation<linear(abc)>"), ParseError);
  // Not an unknown operation: the name is fine, the argument is not.
  try {
    parse(g, "routing[im2col(3,2,1), computation<linear(abc)>, col2im]");
    FAIL();
  } catch (const UnknownOpError&) {
    FAIL() << "wrong error type";
  } catch (const ParseError& e) {
    EXPECT_GT(e.column(), 1u);
  }
}

TEST(Parse, UnknownOp) {
  EXPECT_THROW(parse(default_grammar(), "sequential[computation<gelu>, identity]"), UnknownOpError);
}

TEST(Parse, OutOfDomainValue) {
  EXPECT_THROW(parse(default_grammar(), "routing[im2col(7,2,1), identity, col2im]"), ParseError);
  EXPECT_THROW(parse(default_grammar(), "routing[im2col(3,2,1), computation<linear(100)>, col2im]"), ParseError);
}

TEST(Parse, InconsistentBinding) {
  EXPECT_THROW(parse(default_grammar(), "branching(3)[clone(2), identity, identity, add]"), ParseError);
}

TEST(Parse, TrailingGarbage) {
  EXPECT_THROW(parse(default_grammar(), "identity identity"), ParseError);
  EXPECT_THROW(parse(default_grammar(), "sequential[identity, identity"), ParseError);
  EXPECT_THROW(parse(default_grammar(), ""), ParseError);
}

TEST(Parse, WrongArity) {
  EXPECT_THROW(parse(default_grammar(), "sequential[identity]"), ParseError);
  EXPECT_THROW(parse(default_grammar(), "sequential[identity, identity, identity]"), ParseError);
}

TEST(Parse, ColOnlyOpAtImLevel) {
  // linear is only derivable under NET_COL.
  EXPECT_THROW(parse(default_grammar(), "computation<linear(16)>"), ParseError);
}

TEST(RoundTrip, PlainAndWithShapes) {
  const Grammar& g = default_grammar();
  Rng rng(2024);
  int with_shapes = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = sample_tree(g, kDefaultMaxDepth, rng);
    const auto plain = encode_plain(g, t).text;
    ASSERT_EQ(parse(g, plain), t) << plain;
    try {
      const auto shaped = encode_with_shapes(g, t, kCifar).text;
      ++with_shapes;
      EXPECT_EQ(strip_annotations(shaped), plain);
      EXPECT_EQ(parse(g, shaped), t);
      EXPECT_EQ(count_of(shaped, "out_feature_shape"), compile(g, t, kCifar).op_count());
    } catch (const ShapeError&) {
    }
  }
  EXPECT_GT(with_shapes, 500);
}

TEST(StripAnnotations, Basic) {
  EXPECT_EQ(strip_annotations("a {'x': [1]}, b {'y': {'z': 2}}"), "a, b");
  EXPECT_EQ(strip_annotations("identity"), "identity");
}

}  // namespace
}  // namespace snas
