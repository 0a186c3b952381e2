#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ppflow/simulate.hpp"
#include "support/oracles.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

using namespace ppflow;

TEST_CASE("bump intensity matches the closed formula") {
    PoissonBumpIntensity p;  // defaults
    // Independent evaluation of the sum, written out by hand.
    double expected = 0.0;
    for (std::size_t i = 0; i < p.alphas.size(); ++i) {
        const double d = 3.0 - p.centers[i];
        expected += p.alphas[i] / std::sqrt(2.0 * M_PI * p.sigmas[i] * p.sigmas[i]) *
                    std::exp(-d * d / (p.sigmas[i] * p.sigmas[i]));
    }
    CHECK(ip_intensity(3.0, p) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ip_intensity(3.0, p) == doctest::Approx(2.4206).epsilon(2e-4));

    PoissonBumpIntensity unit{{1.0}, {0.0}, {1.0}, 0.0};
    CHECK(ip_intensity(0.0, unit) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
    double prev = ip_intensity(0.0, unit);
    for (double t = 0.5; t < 10.0; t += 0.5) {
        const double cur = ip_intensity(t, unit);
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK(ip_intensity(40.0, unit) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hawkes intensity formula and validation") {
    HawkesParams p{1.0, 0.8, 1.0};
    CHECK(hawkes_intensity(7.3, {}, p) == doctest::Approx(1.0));
    CHECK(hawkes_intensity(1.0, {0.0}, p) ==
          doctest::Approx(1.0 + 0.8 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(hawkes_intensity(1.0, {0.0, 0.5}, p) ==
          doctest::Approx(1.0 + 0.8 * (std::exp(-1.0) + std::exp(-0.5))).epsilon(1e-12));
    CHECK(hawkes_intensity(1.0, {0.0, 0.5}, p) == doctest::Approx(1.779528).epsilon(1e-6));
    CHECK_THROWS_AS(hawkes_intensity(1.0, {2.0}, p), ValidationError);
}

TEST_CASE("homogeneous poisson gaps have the right mean and law") {
    SimConfig cfg;
    cfg.n_seqs = 10000;
    cfg.target_len = 10;
    cfg.seed = 51;
    const auto seqs = simulate_thinning(ConstantIntensity{1.0}, cfg);
    REQUIRE(seqs.size() == 10000);
    std::vector<double> gaps;
    for (const auto& s : seqs) {
        REQUIRE(s.times.size() == 10);
        double prev = 0.0;
        for (double t : s.times) {
            gaps.push_back(t - prev);
            prev = t;
        }
    }
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= double(gaps.size());
    CHECK(std::abs(mean - 1.0) < 0.02);

    const double d = oracles::ks_statistic(gaps, oracles::exp1_cdf);
    CHECK(oracles::ks_pvalue(d, gaps.size()) > 0.01);
}

TEST_CASE("thinned IP sequences pass time rescaling") {
    PoissonBumpIntensity p;
    p.period = 24.0;
    SimConfig cfg;
    cfg.n_seqs = 300;
    cfg.target_len = 60;
    cfg.seed = 4242;
    const auto seqs = simulate_thinning(ProcessSpec{p}, cfg);
    std::vector<double> gaps;
    for (const auto& s : seqs) {
        for (double u : rescaled_gaps(s, TruthSpec{p})) gaps.push_back(u);
    }
    const double d = oracles::ks_statistic(gaps, oracles::exp1_cdf);
    CHECK(oracles::ks_pvalue(d, gaps.size()) > 0.01);
}

TEST_CASE("hawkes simulation: stationary rate and rescaling") {
    HawkesParams p{1.0, 0.8, 1.0};
    SimConfig cfg;
    cfg.n_seqs = 500;
    cfg.horizon = 100.0;
    cfg.seed = 7;
    cfg.workers = 2;
    const auto seqs = simulate_thinning(ProcessSpec{p}, cfg);
    double mean_count = 0.0;
    for (const auto& s : seqs) mean_count += double(s.times.size());
    mean_count /= double(seqs.size());
    CHECK(std::abs(mean_count - 500.0) / 500.0 < 0.05);

    std::vector<double> gaps;
    for (const auto& s : seqs) {
        for (double u : rescaled_gaps(s, TruthSpec{p})) gaps.push_back(u);
    }
    const double d = oracles::ks_statistic(gaps, oracles::exp1_cdf);
    CHECK(oracles::ks_pvalue(d, gaps.size()) > 0.01);

    HawkesParams unstable{1.0, 1.2, 1.0};
    CHECK_THROWS_AS(simulate_thinning(ProcessSpec{unstable}, cfg), ValidationError);
}

TEST_CASE("fixed seed reproduces simulations exactly regardless of workers") {
    SimConfig cfg;
    cfg.n_seqs = 50;
    cfg.target_len = 20;
    cfg.seed = 99;
    const auto a = simulate_thinning(HawkesParams{1.0, 0.8, 1.0}, cfg);
    cfg.workers = 2;
    const auto b = simulate_thinning(HawkesParams{1.0, 0.8, 1.0}, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].times == b[i].times);
    }
}

TEST_CASE("ground-truth log-likelihood closed forms") {
    {
        EventSequence seq{"poisson", {1.0, 2.0, 3.0}, {}};
        CHECK(ground_truth_loglik(seq, ConstantIntensity{1.0}) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    {
        // Events at 1 and 2 under Hawkes(1, 0.8, 1): the second event reproduces
        // the compensator arithmetic of a unit gap after a single event.
        EventSequence seq{"hawkes", {1.0, 2.0}, {}};
        const double ll1 = std::log(1.0) - 1.0;
        const double lam2 = 1.0 + 0.8 * std::exp(-1.0);
        const double comp2 = 1.0 + 0.8 * (1.0 - std::exp(-1.0));
        CHECK(lam2 == doctest::Approx(1.294304).epsilon(1e-6));
        CHECK(comp2 == doctest::Approx(1.505696).epsilon(1e-6));
        const double expected = 0.5 * (ll1 + std::log(lam2) - comp2);
        CHECK(std::log(lam2) - comp2 == doctest::Approx(-1.247739).epsilon(1e-4));
        CHECK(ground_truth_loglik(seq, HawkesParams{1.0, 0.8, 1.0}) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("IP compensator matches adaptive quadrature") {
    Rng rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        PoissonBumpIntensity p;
        const int k = 1 + int(u(rng) * 4);
        p.alphas.assign(std::size_t(k), 0.0);
        p.centers.assign(std::size_t(k), 0.0);
        p.sigmas.assign(std::size_t(k), 0.0);
        for (int i = 0; i < k; ++i) {
            p.alphas[std::size_t(i)] = 0.5 + 3.0 * u(rng);
            p.centers[std::size_t(i)] = 20.0 * u(rng);
            p.sigmas[std::size_t(i)] = 0.5 + 4.0 * u(rng);
        }
        p.period = rep % 3 == 0 ? 24.0 : 0.0;
        const double a = 25.0 * u(rng);
        const double b = a + 10.0 * u(rng);
        const double closed = ip_compensator(a, b, p);
        const double quad =
            oracles::integrate([&](double t) { return ip_intensity(t, p); }, a, b, 1e-12);
        CHECK(std::abs(closed - quad) < 1e-8);
    }
}

TEST_CASE("truth maximizes expected log-likelihood on a parameter grid") {
    HawkesParams truth{1.0, 0.8, 1.0};
    SimConfig cfg;
    cfg.n_seqs = 400;
    cfg.target_len = 40;
    cfg.seed = 31;
    const auto seqs = simulate_thinning(ProcessSpec{truth}, cfg);
    auto avg_ll = [&](const HawkesParams& p) {
        double acc = 0.0;
        for (const auto& s : seqs) acc += ground_truth_loglik(s, TruthSpec{p});
        return acc / double(seqs.size());
    };
    const double at_truth = avg_ll(truth);
    for (double dmu : {-0.2, 0.2}) {
        for (double dbeta : {-0.15, 0.15}) {
            HawkesParams p{1.0 + dmu, 0.8 + dbeta, 1.0};
            CHECK(avg_ll(p) < at_truth);
        }
    }
}

TEST_CASE("switching simulation matches its law") {
    SwitchingSpec spec;  // defaults: 1000 x 15
    const Dataset ds = simulate_switching(spec, 17);
    REQUIRE(ds.sequences.size() == 1000);
    for (const auto& s : ds.sequences) REQUIRE(s.taus.size() == 15);
    CHECK(ds.mode == DatasetMode::Unconstrained);

    double even_sum = 0.0, odd_sum = 0.0;
    std::size_t even_n = 0, odd_n = 0;
    for (const auto& s : ds.sequences) {
        for (std::size_t i = 0; i < s.taus.size(); ++i) {
            if ((i + 1) % 2 == 0) {
                even_sum += s.taus[i];
                ++even_n;
            } else {
                odd_sum += s.taus[i];
                ++odd_n;
            }
        }
    }
    // Standard errors: even steps std 1; odd steps mixture std sqrt(10).
    const double even_se = 1.0 / std::sqrt(double(even_n));
    const double odd_se = std::sqrt(10.0) / std::sqrt(double(odd_n));
    CHECK(std::abs(even_sum / double(even_n) - 4.0) < 3.0 * even_se);
    CHECK(std::abs(odd_sum / double(odd_n) - 7.0) < 3.0 * odd_se);
}

TEST_CASE("switching log densities") {
    SwitchingSpec spec;
    CHECK(switching_log_density(4.0, 2, spec) == doctest::Approx(-0.918939).epsilon(1e-6));
    CHECK(switching_log_density(4.0, 1, spec) == doctest::Approx(-1.612085).epsilon(1e-6));
    CHECK(switching_log_density(7.0, 3, spec) == doctest::Approx(-5.418939).epsilon(1e-6));

    // Dataset-level score equals an independently written loop.
    const Dataset ds = simulate_switching(SwitchingSpec{4, 1, {4, 10}, {1, 1}, {0.5, 0.5}, 5, 20}, 3);
    double manual = 0.0;
    std::size_t n = 0;
    for (const auto& s : ds.sequences) {
        for (std::size_t i = 0; i < s.taus.size(); ++i) {
            const double x = s.taus[i];
            if ((i + 1) % 2 == 0) {
                manual += std::log(1.0 / std::sqrt(2.0 * M_PI)) - 0.5 * (x - 4.0) * (x - 4.0);
            } else {
                const double c1 = std::exp(-0.5 * (x - 4.0) * (x - 4.0));
                const double c2 = std::exp(-0.5 * (x - 10.0) * (x - 10.0));
                manual += std::log(0.5 / std::sqrt(2.0 * M_PI) * (c1 + c2));
            }
            ++n;
        }
    }
    manual /= double(n);
    CHECK(switching_ground_truth_loglik(ds, SwitchingSpec{4, 1, {4, 10}, {1, 1}, {0.5, 0.5}, 5, 20}) ==
          doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("marked simulation produces learnable bucket structure") {
    SimConfig cfg;
    cfg.n_seqs = 200;
    cfg.target_len = 30;
    cfg.seed = 3;
    CHECK_THROWS_AS(simulate_marked(HawkesParams{}, 1, MarkRule{0.0}, cfg), ValidationError);

    const Dataset clean = simulate_marked(HawkesParams{1.0, 0.8, 1.0}, 2, MarkRule{0.0}, cfg);
    REQUIRE(clean.num_categories == 2);
    const auto info = nlohmann::json::parse(clean.metadata_json);
    const auto edges = info.at("mark_rule").at("edges").get<std::vector<double>>();
    REQUIRE(edges.size() == 1);
    // With zero noise the mark is exactly the bucket of its tau.
    for (const auto& s : clean.sequences) {
        for (std::size_t i = 0; i < s.taus.size(); ++i) {
            CHECK(s.marks[i] == (s.taus[i] > edges[0] ? 1 : 0));
        }
    }

    const Dataset noisy = simulate_marked(HawkesParams{1.0, 0.8, 1.0}, 2, MarkRule{0.1}, cfg);
    std::size_t flips = 0, total = 0;
    const auto edges2 = nlohmann::json::parse(noisy.metadata_json)
                            .at("mark_rule")
                            .at("edges")
                            .get<std::vector<double>>();
    for (const auto& s : noisy.sequences) {
        for (std::size_t i = 0; i < s.taus.size(); ++i) {
            const int bucket = s.taus[i] > edges2[0] ? 1 : 0;
            flips += (s.marks[i] != bucket);
            ++total;
        }
    }
    const double rate = double(flips) / double(total);
    const double se = std::sqrt(0.1 * 0.9 / double(total));
    CHECK(std::abs(rate - 0.1) < 4.0 * se);
}

TEST_CASE("process specs round trip through json and metadata") {
    PoissonBumpIntensity p;
    p.period = 24.0;
    SimConfig cfg;
    cfg.n_seqs = 3;
    cfg.target_len = 5;
    cfg.seed = 1;
    const auto seqs = simulate_thinning(ProcessSpec{p}, cfg);
    const Dataset ds = sequences_to_dataset(seqs, ProcessSpec{p}, cfg);
    const auto truth = truth_from_metadata(ds);
    REQUIRE(truth.has_value());
    const auto* back = std::get_if<PoissonBumpIntensity>(&*truth);
    REQUIRE(back != nullptr);
    CHECK(back->period == 24.0);
    CHECK(back->alphas == p.alphas);
}
