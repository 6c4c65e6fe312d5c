#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rollover/market_data.hpp"

using namespace rollover;

namespace {

const std::string data_dir = ROLLOVER_DATA_DIR;

QuoteSet parse(const std::string& text) {
    std::istringstream in(text);
    return parse_quotes_csv(in);
}

std::uint64_t fnv1a(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool flagged(const QuoteSet& qs, QuoteKind kind, double maturity) {
    for (const auto& a : qs.anomalies)
        if (a.kind == kind && std::abs(a.maturity - maturity) < 1e-12) return true;
    return false;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("rollover_md_" + name);
}

}  // namespace

TEST(QuoteParsing, PercentRowNormalizes) {
    const auto qs = parse("maturity,bid,ask,kind,unit,entity\n0.5, 0.50825, 0.50825, IRS, %\n");
    ASSERT_EQ(qs.quotes.size(), 1u);
    const auto& q = qs.quotes[0];
    EXPECT_EQ(q.kind, QuoteKind::irs);
    EXPECT_EQ(q.maturity, 0.5);
    EXPECT_EQ(q.bid, 0.50825 / 100.0);
    EXPECT_EQ(q.ask, q.bid);
    EXPECT_LE(std::abs(q.bid - 0.0050825), std::nextafter(0.0050825, 1.0) - 0.0050825);
}

TEST(QuoteParsing, BasisPointRowNormalizes) {
    const auto qs = parse("maturity,bid,ask,kind,unit\n0.5, 9.6, 9.6, BASIS_1m3m, bp\n");
    ASSERT_EQ(qs.quotes.size(), 1u);
    EXPECT_EQ(qs.quotes[0].kind, QuoteKind::basis_1m3m);
    EXPECT_LE(std::abs(qs.quotes[0].bid - 0.00096), std::nextafter(0.00096, 1.0) - 0.00096);
}

TEST(QuoteParsing, EmptyInputGivesEmptySet) {
    EXPECT_TRUE(parse("").empty());
    const auto path = temp_file("empty.csv");
    std::ofstream(path).close();
    EXPECT_TRUE(load_quotes(path.string()).empty());
    std::filesystem::remove(path);
}

TEST(QuoteParsing, MissingUnitsRaiseUnitError) {
    EXPECT_THROW(parse("maturity,bid,ask,kind\n1,0.1,0.2,OIS\n"), UnitError);
    EXPECT_THROW(parse("maturity,bid,ask,kind,unit\n1,0.1,0.2,OIS,\n"), UnitError);
}

TEST(QuoteParsing, BadCellReportsRowAndColumn) {
    try {
        parse("maturity,bid,ask,kind,unit\n1,0.1,0.2,OIS,%\n2,abc,0.2,OIS,%\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row, 3u);
        EXPECT_EQ(e.column, 2u);
    }
    EXPECT_THROW(parse("maturity,bid,ask,kind,unit\n1,0.1,0.2,SWAPTION,%\n"), ParseError);
    EXPECT_THROW(parse("maturity,bid,ask,kind,unit\n1,0.1,0.2,OIS,%\n1,0.1,0.2,OIS,%\n"), ParseError);
    EXPECT_THROW(parse("maturity,bid,ask,kind,unit\n1,0.1,0.2,CDS,%\n"), ParseError);
}

TEST(QuoteParsing, CrossedQuoteIsSwappedAndFlagged) {
    const auto qs = parse("maturity,bid,ask,kind,unit\n1,0.2,0.1,OIS,%\n");
    EXPECT_LT(qs.quotes[0].bid, qs.quotes[0].ask);
    EXPECT_TRUE(flagged(qs, QuoteKind::ois, 1.0));
}

TEST(QuoteFixtures, ChecksumsArePinned) {
    const std::pair<const char*, std::uint64_t> pins[] = {
        {"cds_coefficients.json", 0x471af63d44ac5cd7ULL}, {"model_parameters.json", 0x4e39698df6540639ULL},
        {"quotes_2013-01-01.csv", 0x744aaea2abfb44f3ULL}, {"quotes_2014-09-08.csv", 0xaf4373395c3c23bfULL},
        {"quotes_2015-06-18.csv", 0x945c47e3046c5da1ULL}, {"quotes_2016-04-20.csv", 0xefe8e445d1425e32ULL},
        {"quotes_2017-03-22.csv", 0x3958f5a187207d09ULL}, {"quotes_2017-10-31.csv", 0xe46f0690401c935dULL},
    };
    for (const auto& [name, hash] : pins) EXPECT_EQ(fnv1a(data_dir + "/" + name), hash) << name;
}

TEST(QuoteFixtures, FirstDateContents) {
    const auto qs = load_quotes(data_dir + "/quotes_2013-01-01.csv");
    EXPECT_EQ(qs.valuation_date, "2013-01-01");
    EXPECT_EQ(qs.conventions.float_tenor, 0.25);
    EXPECT_EQ(qs.conventions.fixed_tenor, 0.5);
    EXPECT_EQ(qs.of(QuoteKind::ois).size(), 10u);
    EXPECT_EQ(qs.banks().size(), 14u);
    const auto ois = qs.find(QuoteKind::ois, 0.5);
    ASSERT_TRUE(ois);
    EXPECT_NEAR(ois->mid(), 0.0015, 1e-16);
    for (const auto& q : qs.quotes) EXPECT_LE(q.bid, q.ask);
    for (const auto kind : {QuoteKind::ois, QuoteKind::irs}) EXPECT_FALSE(flagged(qs, kind, 9.0));
}

TEST(QuoteFixtures, NineYearOisAnomalyIsFlaggedNotCorrected) {
    const auto qs = load_quotes(data_dir + "/quotes_2017-10-31.csv");
    EXPECT_TRUE(flagged(qs, QuoteKind::ois, 9.0));
    const auto q = qs.find(QuoteKind::ois, 9.0);
    ASSERT_TRUE(q);
    EXPECT_EQ(q->bid, 1.3455 / 100.0);
}

TEST(QuoteFixtures, RoundTripThroughCsvAndJson) {
    for (const char* date : {"2013-01-01", "2016-04-20", "2017-10-31"}) {
        const auto qs = load_quotes(data_dir + "/quotes_" + std::string(date) + ".csv");
        for (const char* ext : {".csv", ".json"}) {
            const auto path = temp_file(std::string(date) + ext);
            save_quotes(path.string(), qs);
            const auto back = load_quotes(path.string());
            EXPECT_EQ(back, qs) << date << ext;
            std::filesystem::remove(path);
        }
    }
}

TEST(Instruments, FullFirstDateSet) {
    const auto ins = build_instruments(load_quotes(data_dir + "/quotes_2013-01-01.csv"));
    EXPECT_EQ(ins.swaps.size(), 30u);
    EXPECT_EQ(ins.cds.size(), 112u);
    EXPECT_EQ(ins.ois.size(), 10u);
    EXPECT_TRUE(ins.warnings.empty());
    int count[3] = {0, 0, 0};
    for (const auto& c : ins.swaps) ++count[static_cast<int>(c.kind)];
    EXPECT_EQ(count[0], 10);
    EXPECT_EQ(count[1], 10);
    EXPECT_EQ(count[2], 10);
}

TEST(Instruments, SixMonthOneMonthGrid) {
    const auto qs = parse(
        "maturity,bid,ask,kind,unit\n0.5,0.5,0.52,IRS,%\n0.5,9.6,9.6,BASIS_1m3m,bp\n0.5,19.32,21.32,BASIS_3m6m,bp\n");
    const auto ins = build_instruments(qs);
    ASSERT_EQ(ins.swaps.size(), 3u);
    const auto& one = ins.swaps[1];
    ASSERT_EQ(one.kind, SwapConditionKind::basis_1m);
    ASSERT_EQ(one.target.dates.size(), 6u);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(one.target.dates[k], static_cast<double>(k + 1) / 12.0, 1e-15);
    EXPECT_EQ(ins.swaps[0].reference.reference_float.dates.size(), 2u);
    EXPECT_EQ(ins.swaps[2].target.dates.size(), 1u);
    EXPECT_EQ(ins.swaps[2].side, SpreadSide::longer);
}

TEST(Instruments, MarketSideBands) {
    SwapCondition c;
    c.rate_bid = 0.01;
    c.rate_ask = 0.012;
    c.spread_bid = 0.001;
    c.spread_ask = 0.0012;
    c.kind = SwapConditionKind::irs_3m;
    EXPECT_EQ(c.band(2.0, 3.0), std::make_pair(0.02, 0.024));
    c.kind = SwapConditionKind::basis_1m;
    const auto one = c.band(2.0, 3.0);
    EXPECT_DOUBLE_EQ(one.first, 0.02 - 0.0036);
    EXPECT_DOUBLE_EQ(one.second, 0.024 - 0.003);
    c.kind = SwapConditionKind::basis_6m;
    const auto six = c.band(2.0, 3.0);
    EXPECT_DOUBLE_EQ(six.first, 0.02 + 0.003);
    EXPECT_DOUBLE_EQ(six.second, 0.024 + 0.0036);
}

TEST(Instruments, MissingLegQuoteSkipsWithWarning) {
    const auto qs = parse("maturity,bid,ask,kind,unit\n1,0.5,0.52,IRS,%\n2,9.6,9.6,BASIS_1m3m,bp\n");
    const auto ins = build_instruments(qs);
    EXPECT_EQ(ins.swaps.size(), 1u);
    EXPECT_EQ(ins.warnings.size(), 3u);
    EXPECT_THROW(require_quotes(QuoteSet{}, QuoteKind::ois), MissingQuote);
    EXPECT_NO_THROW(require_quotes(qs, QuoteKind::irs));
}

TEST(Instruments, RaggedCdsGridKeptAsQuoted) {
    const auto qs = load_quotes(data_dir + "/quotes_2013-01-01.csv");
    const auto ins = build_instruments(qs);
    std::vector<double> mats;
    for (const auto& c : ins.cds)
        if (c.entity == ins.cds.front().entity) mats.push_back(c.maturity);
    EXPECT_EQ(mats, (std::vector<double>{0.5, 1, 2, 3, 4, 5, 7, 10}));
    EXPECT_FALSE(qs.find(QuoteKind::irs, 7.0));
}
