#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace sida;
using sida::testing::random_matrix;

namespace {

MultiViewDataset two_view(unsigned long long seed, Index n = 12)
{
    std::mt19937_64 rng(seed);
    MultiViewDataset ds;
    ds.views = {random_matrix(n, 4, rng, 3.0), random_matrix(n, 3, rng, 0.2)};
    ds.roles = {ViewRole::penalized, ViewRole::penalized};
    ds.labels = sida::testing::block_labels(3, n / 3);
    return ds;
}

} // namespace

TEST(Standardize, CentersAndScalesWithSampleSd)
{
    const MultiViewDataset s = standardize(two_view(1));
    for (const Matrix& x : s.views) {
        EXPECT_LT(x.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
        for (Index j = 0; j < x.cols(); ++j) EXPECT_NEAR(x.col(j).squaredNorm() / (x.rows() - 1), 1.0, 1e-12);
    }
    EXPECT_TRUE(s.standardized);
    ASSERT_EQ(s.stats.size(), 2u);
}

TEST(Standardize, SecondPassIsIdentity)
{
    const MultiViewDataset once = standardize(two_view(2));
    MultiViewDataset again = once;
    again.standardized = false;
    again = standardize(again);
    for (std::size_t d = 0; d < once.views.size(); ++d)
        EXPECT_LT((once.views[d] - again.views[d]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, ConstantColumnIsCenteredAndFlagged)
{
    MultiViewDataset ds = two_view(3);
    ds.views[0].col(2).setConstant(7.5);
    std::vector<std::string> seen;
    set_warning_sink([&](const std::string& m) { seen.push_back(m); });
    const MultiViewDataset s = standardize(ds);
    set_warning_sink([](const std::string& m) { std::cerr << "warning: " << m << '\n'; });
    EXPECT_EQ(s.stats[0].sd(2), 0.0);
    EXPECT_TRUE(s.views[0].col(2).isZero(0.0));
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_NE(seen[0].find("constant"), std::string::npos);
}

TEST(Standardize, HeldOutDataUsesTrainingStatistics)
{
    const MultiViewDataset train = standardize(two_view(4));
    MultiViewDataset test = two_view(5);
    const MultiViewDataset t = standardize_like(test, train.stats);
    const Matrix expected = (test.views[1].rowwise() - train.stats[1].mean.transpose()).array().rowwise() /
                            train.stats[1].sd.transpose().array();
    EXPECT_LT((t.views[1] - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Standardize, ColumnMismatchIsRejected)
{
    const MultiViewDataset train = standardize(two_view(6));
    MultiViewDataset test = two_view(7);
    test.views[0] = test.views[0].leftCols(3);
    EXPECT_THROW(standardize_like(test, train.stats), Error);
}

TEST(Dataset, ValidateCatchesBrokenInvariants)
{
    MultiViewDataset ds = two_view(8);
    EXPECT_NO_THROW(ds.validate());

    MultiViewDataset rows = ds;
    rows.views[1] = rows.views[1].topRows(5);
    EXPECT_THROW(rows.validate(), Error);

    MultiViewDataset gap = ds;
    for (int& y : gap.labels)
        if (y == 2) y = 3;
    EXPECT_THROW(gap.validate(), Error);

    MultiViewDataset cov = ds;
    cov.roles = {ViewRole::covariate, ViewRole::penalized};
    EXPECT_THROW(cov.validate(), Error);

    MultiViewDataset nan = ds;
    nan.views[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(nan.validate(), Error);
}

TEST(Dataset, SubsetKeepsRowsAndLabels)
{
    const MultiViewDataset ds = two_view(9);
    const MultiViewDataset s = ds.subset({0, 5, 11});
    EXPECT_EQ(s.num_samples(), 3);
    EXPECT_EQ(s.labels, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(s.views[1].row(1), ds.views[1].row(5));
    EXPECT_FALSE(s.standardized);
}

TEST(EncodeCategorical, BinaryBecomesOneIndicator)
{
    const Matrix m = encode_categorical({"A", "B", "A"}, {"A", "B"});
    ASSERT_EQ(m.cols(), 1);
    EXPECT_EQ(m.col(0), (Vector(3) << 0, 1, 0).finished());
}

TEST(EncodeCategorical, ReferenceCoding)
{
    const Matrix m = encode_categorical({"B"}, {"A", "B", "C"});
    ASSERT_EQ(m.cols(), 2);
    EXPECT_EQ(m(0, 0), 1.0);
    EXPECT_EQ(m(0, 1), 0.0);
}

TEST(EncodeCategorical, UnseenLevelNamesTheLevel)
{
    try {
        encode_categorical({"D"}, {"A", "B", "C"});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::validation);
        EXPECT_NE(std::string(e.what()).find("'D'"), std::string::npos);
    }
}

TEST(CsvIo, ViewRoundTripIsExact)
{
    std::mt19937_64 rng(10);
    const Matrix x = random_matrix(7, 5, rng, 1e3);
    const auto dir = sida::testing::temp_dir("csv_roundtrip");
    const std::string path = (dir / "x.csv").string();
    save_view_csv(path, x, {"a", "b", "c", "d", "e"});
    const LabeledMatrix back = load_view_csv(path);
    EXPECT_EQ(back.names, (std::vector<std::string>{"a", "b", "c", "d", "e"}));
    ASSERT_EQ(back.values.rows(), 7);
    EXPECT_TRUE((back.values.array() == x.array()).all());
}

TEST(CsvIo, MalformedRowsReportLineNumbers)
{
    const auto dir = sida::testing::temp_dir("csv_bad");
    const std::string path = (dir / "bad.csv").string();
    std::ofstream(path) << "a,b\n1,2\n3,oops\n";
    try {
        load_view_csv(path);
        FAIL() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::parse);
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
    }
    std::ofstream(path) << "a,b\n1,2\n3\n";
    EXPECT_THROW(load_view_csv(path), Error);
}

TEST(CsvIo, MissingFileIsIoError)
{
    try {
        load_view_csv("/nonexistent/dir/x.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io);
    }
}

TEST(CsvIo, LabelsAndIndices)
{
    const auto dir = sida::testing::temp_dir("labels");
    const std::string labels = (dir / "y.csv").string();
    save_labels_csv(labels, {1, 2, 2, 3});
    EXPECT_EQ(load_labels_csv(labels), (std::vector<int>{1, 2, 2, 3}));
    std::ofstream(labels) << "label\n1\n0\n";
    EXPECT_THROW(load_labels_csv(labels), Error);

    const std::string idx = (dir / "i.csv").string();
    save_index_csv(idx, {3, 1, 20});
    EXPECT_EQ(load_index_csv(idx), (std::vector<Index>{3, 1, 20}));
}

TEST(FormatDouble, RoundTripsSeventeenDigits)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) / (i + 1);
        double back = 0.0;
        ASSERT_TRUE(detail::parse_double(format_double(v), back));
        EXPECT_EQ(back, v);
    }
}
