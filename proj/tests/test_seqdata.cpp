#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ppflow/seqdata.hpp"
#include "ppflow/nn.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

using namespace ppflow;

namespace {

Dataset toy_dataset(int n_seqs, int len, std::uint64_t seed, DatasetMode mode = DatasetMode::Positive) {
    Dataset ds;
    ds.mode = mode;
    for (int i = 0; i < n_seqs; ++i) {
        Rng rng = make_stream(seed, std::uint64_t(i));
        InterArrivalSequence s;
        s.id = "t-" + std::to_string(i);
        std::exponential_distribution<double> d(1.0);
        for (int k = 0; k < len; ++k) s.taus.push_back(d(rng) + 1e-6);
        ds.sequences.push_back(std::move(s));
    }
    return ds;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("to_inter_arrivals uses the virtual origin") {
    EventSequence seq{"a", {1.0, 3.0, 3.5}, {}};
    const auto ias = to_inter_arrivals(seq);
    REQUIRE(ias.taus.size() == 3);
    CHECK(ias.taus[0] == doctest::Approx(1.0));
    CHECK(ias.taus[1] == doctest::Approx(2.0));
    CHECK(ias.taus[2] == doctest::Approx(0.5));

    EventSequence single{"b", {5.0}, {}};
    CHECK(to_inter_arrivals(single).taus == std::vector<double>{5.0});

    EventSequence bad{"c", {2.0, 2.0}, {}};
    CHECK_THROWS_AS(to_inter_arrivals(bad), ValidationError);
}

TEST_CASE("from_inter_arrivals accumulates and validates") {
    InterArrivalSequence ias{"a", {1.0, 2.0, 0.5}, {}};
    const auto seq = from_inter_arrivals(ias);
    CHECK(seq.times == std::vector<double>{1.0, 3.0, 3.5});

    CHECK(from_inter_arrivals(InterArrivalSequence{"e", {}, {}}).times.empty());
    CHECK_THROWS_AS(from_inter_arrivals(InterArrivalSequence{"n", {-1.0}, {}}), ValidationError);
}

TEST_CASE("inter-arrival round trip is tight") {
    Rng rng(7);
    std::exponential_distribution<double> d(2.0);
    for (int rep = 0; rep < 50; ++rep) {
        InterArrivalSequence ias;
        ias.id = "r";
        for (int k = 0; k < 40; ++k) ias.taus.push_back(d(rng) + 1e-9);
        const auto back = to_inter_arrivals(from_inter_arrivals(ias));
        for (std::size_t k = 0; k < ias.taus.size(); ++k) {
            CHECK(std::abs(back.taus[k] - ias.taus[k]) < 1e-12);
        }
    }
}

TEST_CASE("split sizes follow floor arithmetic") {
    {
        Dataset ds = toy_dataset(20000, 1, 3);
        auto [train, val, test] = split_dataset(ds, 0.7, 0.1, 0.2, 42);
        CHECK(train.sequences.size() == 14000);
        CHECK(val.sequences.size() == 2000);
        CHECK(test.sequences.size() == 4000);
    }
    {
        Dataset ds = toy_dataset(10, 1, 3);
        auto [train, val, test] = split_dataset(ds, 0.7, 0.1, 0.2, 42);
        CHECK(train.sequences.size() == 7);
        CHECK(val.sequences.size() == 1);
        CHECK(test.sequences.size() == 2);
    }
}

TEST_CASE("split is a reproducible partition") {
    Dataset ds = toy_dataset(101, 2, 5);
    auto [a1, b1, c1] = split_dataset(ds, 0.7, 0.1, 0.2, 9);
    auto [a2, b2, c2] = split_dataset(ds, 0.7, 0.1, 0.2, 9);
    std::set<std::string> seen;
    for (const auto* part : {&a1, &b1, &c1}) {
        for (const auto& s : part->sequences) seen.insert(s.id);
    }
    CHECK(seen.size() == ds.sequences.size());
    for (std::size_t i = 0; i < a1.sequences.size(); ++i) {
        CHECK(a1.sequences[i].id == a2.sequences[i].id);
    }
    CHECK(b1.sequences.size() == b2.sequences.size());
    CHECK(c1.sequences.size() == c2.sequences.size());

    CHECK_THROWS_AS(split_dataset(ds, 0.5, 0.1, 0.2, 1), ValidationError);
}

TEST_CASE("jsonl round trip and errors") {
    const std::string path = "test_seqdata_tmp.jsonl";
    Dataset ds = toy_dataset(3, 4, 11);
    ds.num_categories = 2;
    for (auto& s : ds.sequences) s.marks = {0, 1, 0, 1};
    ds.metadata_json = "{\"note\":\"toy\"}";
    save_jsonl(ds, path);
    const Dataset back = load_jsonl(path);
    REQUIRE(back.sequences.size() == ds.sequences.size());
    CHECK(back.mode == ds.mode);
    CHECK(back.num_categories == ds.num_categories);
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        CHECK(back.sequences[i].id == ds.sequences[i].id);
        CHECK(back.sequences[i].taus == ds.sequences[i].taus);
        CHECK(back.sequences[i].marks == ds.sequences[i].marks);
    }

    // Byte equivalence after canonical serialization.
    const std::string first = slurp(path);
    save_jsonl(back, path);
    CHECK(slurp(path) == first);

    {
        std::ofstream f(path);
        f << "{\"id\":\"a\",\"taus\":[1.0]}\n";
    }
    const Dataset one = load_jsonl(path);
    REQUIRE(one.sequences.size() == 1);
    CHECK(one.sequences[0].taus == std::vector<double>{1.0});

    {
        std::ofstream f(path);
        f << "{\"taus\":\"x\"}\n";
    }
    try {
        load_jsonl(path);
        FAIL("expected a parse error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("standardize examples") {
    Dataset flat = toy_dataset(1, 3, 2);
    flat.sequences[0].taus = {2.0, 2.0, 2.0};
    CHECK_THROWS_AS(standardize(flat), ValidationError);

    Dataset two = toy_dataset(1, 2, 2);
    two.sequences[0].taus = {1.0, 3.0};
    auto [std_ds, rec] = standardize(two);
    CHECK(rec.mean == doctest::Approx(2.0));
    CHECK(rec.std == doctest::Approx(1.0));
    CHECK(std_ds.sequences[0].taus[0] == doctest::Approx(-1.0));
    CHECK(std_ds.sequences[0].taus[1] == doctest::Approx(1.0));
    CHECK(std_ds.mode == DatasetMode::Unconstrained);
}

TEST_CASE("standardized log-likelihood corrects back to raw units") {
    // Model with matching density: N(m, v) over raw values equals N(0, 1) over
    // standardized values once the correction is applied.
    Dataset ds = toy_dataset(5, 20, 13, DatasetMode::Unconstrained);
    auto [std_ds, rec] = standardize(ds);
    double ll_raw = 0.0, ll_std = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        for (std::size_t k = 0; k < ds.sequences[i].taus.size(); ++k) {
            ll_raw += gaussian_logpdf(ds.sequences[i].taus[k], rec.mean, rec.std);
            ll_std += gaussian_logpdf(std_ds.sequences[i].taus[k], 0.0, 1.0);
            ++n;
        }
    }
    ll_raw /= double(n);
    ll_std /= double(n);
    CHECK(std::abs(ll_raw - (ll_std + rec.loglik_correction())) < 1e-9);
}
