#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "grove/data.h"
#include "grove/error.h"
#include "grove/io.h"
#include "support.h"

using namespace grove;
using testing::HasSubstr;

namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Dataset, IrisHasFourFeaturesThreeClasses) {
  const auto iris = testing_support::load_iris();
  EXPECT_EQ(iris.num_features(), 4u);
  EXPECT_EQ(iris.num_samples(), 150u);
  EXPECT_EQ(iris.classification().classes, (std::vector<std::string>{"setosa", "versicolor", "virginica"}));
  EXPECT_EQ(iris.feature_names(),
            (std::vector<std::string>{"Sepal.Length", "Sepal.Width", "Petal.Length", "Petal.Width"}));
}

TEST(Dataset, MinimalRegressionInput) {
  const Dataset data({FeatureColumn("x", std::vector<double>{1, 2, 3})}, RegressionResponse{{1, 2, 3}});
  EXPECT_EQ(data.num_samples(), 3u);
  EXPECT_EQ(data.response_kind(), ResponseKind::Regression);
}

TEST(Dataset, SingleClassResponseRejected) {
  std::vector<NamedColumn> columns{{"x", std::vector<double>{1, 2, 3}},
                                   {"y", std::vector<std::string>{"a", "a", "a"}}};
  EXPECT_THROW(build_dataset(columns, ResponseSpec{ResponseKind::Classification, "y", ""}), DataError);
}

TEST(Dataset, LengthMismatchRejected) {
  EXPECT_THROW(Dataset({FeatureColumn("x", std::vector<double>{1, 2})}, RegressionResponse{{1, 2, 3}}), DataError);
}

TEST(Dataset, DuplicateFeatureNamesRejected) {
  EXPECT_THROW(Dataset({FeatureColumn("x", std::vector<double>{1, 2}), FeatureColumn("x", std::vector<double>{3, 4})},
                       RegressionResponse{{1, 2}}),
               DataError);
}

TEST(Dataset, SurvivalWithoutEventsRejected) {
  EXPECT_THROW(Dataset({FeatureColumn("x", std::vector<double>{1, 2})}, SurvivalResponse{{1, 2}, {0, 0}}), DataError);
}

TEST(Dataset, NumericClassLabelsSortedAsText) {
  std::vector<NamedColumn> columns{{"x", std::vector<double>{1, 2, 3, 4}}, {"y", std::vector<double>{1, 0, 1, 0}}};
  const auto data = build_dataset(columns, ResponseSpec{ResponseKind::Classification, "y", ""});
  EXPECT_EQ(data.classification().classes, (std::vector<std::string>{"0", "1"}));
  EXPECT_EQ(data.classification().labels, (std::vector<std::uint32_t>{1, 0, 1, 0}));
}

TEST(Dataset, NonNumericFeatureRejected) {
  std::vector<NamedColumn> columns{{"x", std::vector<std::string>{"a", "b"}}, {"y", std::vector<double>{1, 0}}};
  EXPECT_THAT(error_of([&] { build_dataset(columns, ResponseSpec{ResponseKind::Regression, "y", ""}); }),
              HasSubstr("'x' is not numeric"));
}

TEST(Dataset, UnknownResponseColumn) {
  std::vector<NamedColumn> columns{{"x", std::vector<double>{1, 2}}};
  EXPECT_THAT(error_of([&] { build_dataset(columns, ResponseSpec{ResponseKind::Regression, "y", ""}); }),
              HasSubstr("unknown response column 'y'"));
}

TEST(Dataset, SurvivalStatusMustBeBinary) {
  std::vector<NamedColumn> columns{{"x", std::vector<double>{1, 2}},
                                   {"time", std::vector<double>{1, 2}},
                                   {"status", std::vector<double>{1, 2}}};
  EXPECT_THROW(build_dataset(columns, ResponseSpec{ResponseKind::Survival, "time", "status"}), DataError);
}

TEST(Dataset, PredictionOnlyDataHasNoResponse) {
  std::vector<NamedColumn> columns{{"x", std::vector<double>{1, 2}}};
  const auto data = build_dataset(columns, ResponseSpec{});
  EXPECT_EQ(data.response_kind(), ResponseKind::None);
  EXPECT_EQ(data.num_samples(), 2u);
}

TEST(PackedGenotypes, RoundTrip) {
  const std::vector<double> values{0, 1, 2, 2, 0};
  const auto packed = PackedGenotypes::pack(values);
  EXPECT_EQ(packed.decode(), values);
  EXPECT_EQ(packed.size(), 5u);
}

TEST(PackedGenotypes, ThousandZerosTake250Bytes) {
  const auto packed = PackedGenotypes::pack(std::vector<double>(1000, 0.0));
  EXPECT_EQ(packed.payload_bytes(), 250u);
}

TEST(PackedGenotypes, InvalidValueReportsIndex) {
  try {
    PackedGenotypes::pack(std::vector<double>{0, 1, 3});
    FAIL() << "expected GenotypeError";
  } catch (const GenotypeError& e) {
    EXPECT_EQ(e.index(), 2u);
  }
  EXPECT_THROW(PackedGenotypes::pack(std::vector<double>{0.5}), GenotypeError);
}

TEST(PackedGenotypes, DatasetPackingKeepsValues) {
  const Dataset dense({FeatureColumn("g", std::vector<double>{0, 2, 1, 1}), FeatureColumn("c", std::vector<double>{0.5, 3, 1, 2})},
                      RegressionResponse{{1, 2, 3, 4}});
  const auto packed = dense.with_packed_genotypes();
  EXPECT_TRUE(packed.feature(0).is_packed());
  EXPECT_FALSE(packed.feature(1).is_packed());
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(packed.value(i, 0), dense.value(i, 0));
    EXPECT_EQ(packed.value(i, 1), dense.value(i, 1));
  }
  EXPECT_LT(packed.memory_bytes(), dense.memory_bytes());
}

TEST(SortedPermutation, HandSort) {
  EXPECT_EQ(sorted_permutation(std::vector<double>{3.0, 1.0, 2.0}), (std::vector<std::uint32_t>{1, 2, 0}));
}

TEST(SortedPermutation, SortedInputIsIdentity) {
  EXPECT_EQ(sorted_permutation(std::vector<double>{-1, 0, 0.5, 7}), (std::vector<std::uint32_t>{0, 1, 2, 3}));
}

TEST(SortedPermutation, TiesKeepRowOrder) {
  EXPECT_EQ(sorted_permutation(std::vector<double>{1, 1, 0}), (std::vector<std::uint32_t>{2, 0, 1}));
}

TEST(SortedIndexCache, BuiltOnDemand) {
  Dataset data({FeatureColumn("x", std::vector<double>{5, 4, 6})}, RegressionResponse{{1, 2, 3}});
  EXPECT_FALSE(data.has_sorted_index(0));
  EXPECT_TRUE(data.sorted_index(0).empty());
  data.build_sorted_index(0);
  ASSERT_TRUE(data.has_sorted_index(0));
  EXPECT_EQ(std::vector<std::uint32_t>(data.sorted_index(0).begin(), data.sorted_index(0).end()),
            (std::vector<std::uint32_t>{1, 0, 2}));
}

TEST(ParseDataset, IrisFile) {
  const auto columns = parse_dataset_file(testing_support::iris_path());
  ASSERT_EQ(columns.size(), 5u);
  for (const auto& c : columns) EXPECT_EQ(c.size(), 150u);
  EXPECT_TRUE(std::holds_alternative<std::vector<std::string>>(columns[4].values));
}

TEST(ParseDataset, WhitespaceDelimited) {
  const auto columns = parse_dataset("a b  y\n1 2 3\n4\t5 6\n");
  ASSERT_EQ(columns.size(), 3u);
  EXPECT_EQ(std::get<std::vector<double>>(columns[1].values), (std::vector<double>{2, 5}));
}

TEST(ParseDataset, HeaderOnly) {
  EXPECT_THAT(error_of([] { parse_dataset("a,b,c\n"); }), HasSubstr("no data rows"));
}

TEST(ParseDataset, EmptyFile) { EXPECT_THROW(parse_dataset(""), DataError); }

TEST(ParseDataset, RaggedRowNamesLine) {
  EXPECT_THAT(error_of([] { parse_dataset("a,b,c,d\n1,2,3,4\n1,2,3\n"); }), HasSubstr("line 3"));
}

TEST(ParseDataset, MixedColumnIsText) {
  const auto columns = parse_dataset("x,y\n1,a\n2,3\n");
  EXPECT_TRUE(std::holds_alternative<std::vector<double>>(columns[0].values));
  EXPECT_TRUE(std::holds_alternative<std::vector<std::string>>(columns[1].values));
}
