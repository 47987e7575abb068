#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "simstudy/error.hpp"
#include "simstudy/executor.hpp"
#include "simstudy/results.hpp"
#include "support.hpp"

using namespace simstudy;
using namespace simstudy::testing;

namespace {

VarList two_by_three()
{
    VarList vl;
    vl.add(n_var(3));
    vl.add(grid_var("g", {"p", "q"}));
    vl.add(inner_var("k", {0.5, 1}));
    return vl;
}

// Value encodes (row, rep) so placement can be checked.
std::vector<SubJobRecord> tagged_records(const VarList& vl, bool rep_first)
{
    const std::size_t n_grid = mk_grid(vl).rows();
    const std::size_t n_sim = vl.n_sim();
    std::vector<SubJobRecord> out(n_grid * n_sim);
    for (std::size_t lin = 0; lin < out.size(); ++lin) {
        const auto v = decode_virtual(lin, n_grid, n_sim, rep_first);
        out[lin].value = Value(inner_dims(vl), std::vector<double>{double(v.row), double(v.rep)});
        out[lin].time_ms = double(lin);
    }
    return out;
}

}  // namespace

TEST(Fnv, ReferenceVectors)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Fingerprint, ChangesWithEverySetupInput)
{
    const auto vl = two_by_three();
    const auto base = fingerprint(vl, true, SeedSpec::seq(), "s");
    EXPECT_EQ(base.size(), 16u);
    EXPECT_EQ(base, fingerprint(vl, true, SeedSpec::seq(), "s"));
    EXPECT_NE(base, fingerprint(vl, false, SeedSpec::seq(), "s"));
    EXPECT_NE(base, fingerprint(vl, true, SeedSpec::none_reseed(), "s"));
    EXPECT_NE(base, fingerprint(vl, true, SeedSpec::seq(), "t"));
    EXPECT_NE(base, fingerprint(vl.with_n_sim(4), true, SeedSpec::seq(), "s"));
}

TEST(Assemble, PlacesRecordsByGridRowThenReplication)
{
    const auto vl = two_by_three();
    for (bool rf : {true, false}) {
        StoreMeta meta;
        meta.rep_first = rf;
        const auto s = store_or_throw(assemble(tagged_records(vl, rf), vl, meta));
        ASSERT_EQ(s.records.size(), 6u);
        EXPECT_EQ(s.value_dims, inner_dims(vl));
        for (std::size_t row = 0; row < 2; ++row)
            for (std::size_t rep = 1; rep <= 3; ++rep) {
                const std::size_t idx[] = {row, rep - 1};
                const auto& r = s.at(idx);
                EXPECT_EQ(r.value->data(), (std::vector<double>{double(row), double(rep)}));
            }
        const auto back = flatten(s);
        const auto orig = tagged_records(vl, rf);
        for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].value, orig[i].value);
    }
}

TEST(Assemble, ShapeMismatchFallsBackToRawRecords)
{
    const auto vl = two_by_three();
    auto recs = tagged_records(vl, true);
    recs[4].value = scalar_value(1);
    const auto r = assemble(recs, vl, StoreMeta{});
    ASSERT_TRUE(std::holds_alternative<RawFallback>(r));
    const auto& raw = std::get<RawFallback>(r);
    EXPECT_NE(raw.diagnostic.find("g=q"), std::string::npos) << raw.diagnostic;
    EXPECT_EQ(raw.records.size(), 6u);
    recs.pop_back();
    EXPECT_THROW(assemble(recs, vl, StoreMeta{}), Error);
}

TEST(Persistence, RoundTripKeepsEverything)
{
    const auto vl = two_by_three();
    auto recs = tagged_records(vl, true);
    recs[0].value->data()[0] = std::nan("");
    recs[1].value->data()[1] = -INFINITY;
    recs[2].value.reset();
    recs[2].error = ErrorInfo{"line1\nline2 \"quoted\" é", "study"};
    recs[3].warnings = {"w", "x,y"};
    recs[4].seed = derive_from_integer(9).to_hex();
    recs[5].value->data()[0] = 0.1 + 0.2;
    StoreMeta meta;
    meta.created = "2024-01-01T00:00:00Z";
    meta.seed = SeedSpec::per_rep_integer({4, 5, 6});
    meta.study = "custom";
    const auto s = store_or_throw(assemble(recs, vl, meta));

    const auto text = serialize(s);
    const auto back = store_or_throw(deserialize(text));
    EXPECT_EQ(back.varlist, s.varlist);
    EXPECT_EQ(back.dims, s.dims);
    EXPECT_EQ(back.fingerprint, s.fingerprint);
    EXPECT_EQ(back.meta.created, meta.created);
    EXPECT_EQ(back.meta.seed, meta.seed);
    EXPECT_TRUE(do_res_equal(s, back).equal) << do_res_equal(s, back).difference;
    for (std::size_t i = 0; i < s.records.size(); ++i) EXPECT_EQ(back.records[i].time_ms, s.records[i].time_ms);
    EXPECT_EQ(serialize(back), text);
}

TEST(Persistence, StrippedTimesGiveIdenticalBytes)
{
    const auto vl = two_by_three();
    StoreMeta m1, m2;
    m1.created = "a";
    m2.created = "b";
    auto r1 = tagged_records(vl, true);
    auto r2 = tagged_records(vl, true);
    r2[3].time_ms = 999;
    SaveOptions o;
    o.include_times = false;
    EXPECT_EQ(serialize(assemble(r1, vl, m1), o), serialize(assemble(r2, vl, m2), o));
}

TEST(Persistence, RawFallbackRoundTrip)
{
    const auto vl = two_by_three();
    auto recs = tagged_records(vl, true);
    recs[1].value = scalar_value(2);
    const auto r = assemble(recs, vl, StoreMeta{});
    const auto back = deserialize(serialize(r));
    ASSERT_TRUE(std::holds_alternative<RawFallback>(back));
    EXPECT_EQ(std::get<RawFallback>(back).diagnostic, std::get<RawFallback>(r).diagnostic);
    EXPECT_EQ(std::get<RawFallback>(back).records[1].value, recs[1].value);
}

TEST(Persistence, FileErrors)
{
    TempDir dir;
    EXPECT_FALSE(maybe_read(dir / "missing.json", "0"));
    {
        std::ofstream f(dir / "junk.json");
        f << "{ not json";
    }
    try {
        load(dir / "junk.json");
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("junk.json"), std::string::npos);
    }
    {
        std::ofstream f(dir / "other.json");
        f << R"({"format":"something-else","version":1})";
    }
    EXPECT_THROW(load(dir / "other.json"), FormatError);

    const auto vl = two_by_three();
    const auto s = assemble(tagged_records(vl, true), vl, StoreMeta{});
    save(s, dir / "ok.json");
    EXPECT_TRUE(maybe_read(dir / "ok.json", store_or_throw(s).fingerprint));
    EXPECT_THROW(maybe_read(dir / "ok.json", "ffffffffffffffff"), CacheInvalidError);
}

TEST(Equality, ReportsFirstDifferenceAndIgnoresTime)
{
    const auto vl = two_by_three();
    const auto a = store_or_throw(assemble(tagged_records(vl, true), vl, StoreMeta{}));
    auto b = a;
    for (auto& r : b.records) r.time_ms += 1;
    EXPECT_TRUE(do_res_equal(a, b).equal);

    b.records[3].value->data()[1] += 1;
    const auto rep = do_res_equal(a, b);
    EXPECT_FALSE(rep.equal);
    EXPECT_NE(rep.difference.find("g=q, n.sim=2"), std::string::npos) << rep.difference;
    EXPECT_GT(rep.mean_relative_difference, 0);

    auto c = a;
    c.records[0].warnings = {"new"};
    EXPECT_FALSE(do_res_equal(a, c).equal);
    auto d = a;
    d.records[0].seed = "x";
    EXPECT_FALSE(do_res_equal(a, d).equal);
}

TEST(Equality, NaNEqualsNaN)
{
    const auto vl = two_by_three();
    auto recs = tagged_records(vl, true);
    recs[0].value->data()[0] = std::nan("");
    const auto a = store_or_throw(assemble(recs, vl, StoreMeta{}));
    EXPECT_TRUE(do_res_equal(a, a).equal);
}
