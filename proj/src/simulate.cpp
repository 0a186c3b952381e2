#include "ppflow/simulate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <thread>

namespace ppflow {

using nlohmann::json;

namespace {

constexpr double kTailSigmas = 12.0;  // bump replicas beyond this are ~1e-63

struct BumpInstance {
    double alpha;
    double center;
    double sigma;
};

double bump_value(const BumpInstance& b, double t) {
    const double d = (t - b.center) / b.sigma;
    return b.alpha / std::sqrt(2.0 * M_PI * b.sigma * b.sigma) * std::exp(-d * d);
}

// All bump instances (including periodic replicas) that can influence [a, b].
std::vector<BumpInstance> bump_instances(const PoissonBumpIntensity& p, double a, double b) {
    std::vector<BumpInstance> out;
    for (std::size_t i = 0; i < p.alphas.size(); ++i) {
        const double w = kTailSigmas * p.sigmas[i];
        if (p.period <= 0.0) {
            if (p.centers[i] >= a - w && p.centers[i] <= b + w) {
                out.push_back({p.alphas[i], p.centers[i], p.sigmas[i]});
            }
            continue;
        }
        const long m_lo = static_cast<long>(std::floor((a - w - p.centers[i]) / p.period));
        const long m_hi = static_cast<long>(std::ceil((b + w - p.centers[i]) / p.period));
        for (long m = m_lo; m <= m_hi; ++m) {
            out.push_back({p.alphas[i], p.centers[i] + double(m) * p.period, p.sigmas[i]});
        }
    }
    return out;
}

double exp_draw(Rng& rng, double rate) {
    std::exponential_distribution<double> d(rate);
    return d(rng);
}

// Generic fixed-window thinning for intensities that do not react to events.
// `bound` must dominate `eval` on the given window.
template <typename Eval, typename Bound>
std::vector<double> thin_poisson_like(Eval eval,
                                      Bound bound,
                                      double window,
                                      int target_len,
                                      double horizon,
                                      double give_up_rate,
                                      Rng& rng) {
    std::vector<double> times;
    double cur = 0.0;
    const bool horizon_mode = horizon > 0.0;
    while (horizon_mode ? true : static_cast<int>(times.size()) < target_len) {
        double w_end = cur + window;
        if (horizon_mode) w_end = std::min(w_end, horizon);
        const double lam_bar = bound(cur, w_end);
        if (lam_bar <= give_up_rate) {
            if (horizon_mode) {
                if (w_end >= horizon) break;
                cur = w_end;
                continue;
            }
            throw NumericalError(
                "intensity vanished before reaching the target length; "
                "use a periodic intensity or horizon mode");
        }
        const double delta = exp_draw(rng, lam_bar);
        if (cur + delta > w_end) {
            if (horizon_mode && w_end >= horizon) break;
            cur = w_end;
            continue;
        }
        cur += delta;
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        if (u01(rng) * lam_bar <= eval(cur)) {
            times.push_back(cur);
        }
    }
    return times;
}

std::vector<double> simulate_one_const(const ConstantIntensity& p,
                                       const SimConfig& cfg,
                                       Rng& rng) {
    return thin_poisson_like([&](double) { return p.rate; },
                             [&](double, double) { return p.rate; },
                             /*window=*/8.0 / p.rate, cfg.target_len, cfg.horizon,
                             /*give_up_rate=*/0.0, rng);
}

std::vector<double> simulate_one_ip(const PoissonBumpIntensity& p,
                                    const SimConfig& cfg,
                                    Rng& rng) {
    double sig_min = p.sigmas[0];
    for (double s : p.sigmas) sig_min = std::min(sig_min, s);
    const double window = 0.5 * sig_min;
    auto eval = [&](double t) { return ip_intensity(t, p); };
    auto bound = [&](double a, double b) {
        double m = 0.0;
        for (const auto& inst : bump_instances(p, a, b)) {
            m += bump_value(inst, std::clamp(inst.center, a, b));
        }
        return m;
    };
    return thin_poisson_like(eval, bound, window, cfg.target_len, cfg.horizon,
                             /*give_up_rate=*/1e-14, rng);
}

std::vector<double> simulate_one_hawkes(const HawkesParams& p, const SimConfig& cfg, Rng& rng) {
    std::vector<double> times;
    double cur = 0.0;
    double exc = 0.0;  // sum of exp(-decay (cur - t_i)) over events t_i <= cur
    const bool horizon_mode = cfg.horizon > 0.0;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    while (horizon_mode ? true : static_cast<int>(times.size()) < cfg.target_len) {
        const double lam_bar = p.mu + p.beta * exc;
        const double delta = exp_draw(rng, lam_bar);
        const double cand = cur + delta;
        if (horizon_mode && cand > cfg.horizon) break;
        const double exc_cand = exc * std::exp(-p.decay * delta);
        const double lam_cand = p.mu + p.beta * exc_cand;
        cur = cand;
        exc = exc_cand;
        if (u01(rng) * lam_bar <= lam_cand) {
            times.push_back(cur);
            exc += 1.0;
        }
    }
    return times;
}

std::vector<double> simulate_one(const ProcessSpec& spec, const SimConfig& cfg, Rng& rng) {
    if (const auto* c = std::get_if<ConstantIntensity>(&spec)) return simulate_one_const(*c, cfg, rng);
    if (const auto* p = std::get_if<PoissonBumpIntensity>(&spec)) return simulate_one_ip(*p, cfg, rng);
    if (const auto* h = std::get_if<HawkesParams>(&spec)) return simulate_one_hawkes(*h, cfg, rng);
    throw ValidationError("combined IP+SE specs are simulated per half");
}

std::string spec_prefix(const ProcessSpec& spec) {
    if (std::holds_alternative<ConstantIntensity>(spec)) return "poisson";
    if (std::holds_alternative<PoissonBumpIntensity>(spec)) return "ip";
    if (std::holds_alternative<HawkesParams>(spec)) return "se";
    return "ipse";
}

void validate_for_simulation(const ProcessSpec& spec) {
    if (const auto* c = std::get_if<ConstantIntensity>(&spec)) {
        if (c->rate <= 0.0) throw ValidationError("constant intensity must be > 0");
    } else if (const auto* p = std::get_if<PoissonBumpIntensity>(&spec)) {
        p->validate();
    } else if (const auto* h = std::get_if<HawkesParams>(&spec)) {
        h->validate();
        if (h->branching_ratio() >= 1.0) {
            throw ValidationError("non-stationary Hawkes process: beta/decay must be < 1");
        }
    } else if (const auto* combo = std::get_if<IpSeCombo>(&spec)) {
        combo->ip.validate();
        combo->se.validate();
        if (combo->se.branching_ratio() >= 1.0) {
            throw ValidationError("non-stationary Hawkes process: beta/decay must be < 1");
        }
    }
}

std::vector<EventSequence> simulate_many(const ProcessSpec& spec,
                                         const SimConfig& cfg,
                                         const std::string& prefix,
                                         int n_seqs,
                                         std::uint64_t index_offset) {
    std::vector<EventSequence> out(static_cast<std::size_t>(n_seqs));
    const int workers = std::max(1, cfg.workers);
    auto run = [&](int w) {
        for (int i = w; i < n_seqs; i += workers) {
            Rng rng = make_stream(cfg.seed, index_offset + std::uint64_t(i));
            EventSequence seq;
            seq.id = prefix + "-" + std::to_string(i);
            seq.times = simulate_one(spec, cfg, rng);
            out[static_cast<std::size_t>(i)] = std::move(seq);
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) threads.emplace_back(run, w);
        for (auto& t : threads) t.join();
    }
    return out;
}

double gaussian_logpdf(double x, double mean, double std) {
    const double z = (x - mean) / std;
    return -0.5 * std::log(2.0 * M_PI) - std::log(std) - 0.5 * z * z;
}

}  // namespace

void PoissonBumpIntensity::validate() const {
    const std::size_t k = alphas.size();
    if (k == 0 || centers.size() != k || sigmas.size() != k) {
        throw ValidationError("bump intensity needs matching non-empty alphas/centers/sigmas");
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (alphas[i] <= 0.0) throw ValidationError("bump alphas must be > 0");
        if (sigmas[i] <= 0.0) throw ValidationError("bump sigmas must be > 0");
    }
    if (period < 0.0) throw ValidationError("period must be >= 0");
}

void HawkesParams::validate() const {
    if (mu <= 0.0) throw ValidationError("hawkes mu must be > 0");
    if (beta < 0.0) throw ValidationError("hawkes beta must be >= 0");
    if (decay <= 0.0) throw ValidationError("hawkes decay must be > 0");
}

void SwitchingSpec::validate() const {
    if (mix_means.size() != mix_stds.size() || mix_means.size() != mix_weights.size() ||
        mix_means.empty()) {
        throw ValidationError("switching mixture components must align and be non-empty");
    }
    double wsum = 0.0;
    for (double w : mix_weights) {
        if (w <= 0.0) throw ValidationError("mixture weights must be > 0");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw ValidationError("mixture weights must sum to 1");
    if (even_std <= 0.0) throw ValidationError("even_std must be > 0");
    for (double s : mix_stds) {
        if (s <= 0.0) throw ValidationError("mixture stds must be > 0");
    }
    if (seq_len < 1 || n_seqs < 1) throw ValidationError("seq_len and n_seqs must be >= 1");
}

double ip_intensity(double t, const PoissonBumpIntensity& p) {
    double lam = 0.0;
    for (const auto& inst : bump_instances(p, t, t)) lam += bump_value(inst, t);
    return lam;
}

double ip_compensator(double a, double b, const PoissonBumpIntensity& p) {
    double total = 0.0;
    const double inv_2sqrt2 = 1.0 / (2.0 * std::sqrt(2.0));
    for (const auto& inst : bump_instances(p, a, b)) {
        total += inst.alpha * inv_2sqrt2 *
                 (std::erf((b - inst.center) / inst.sigma) - std::erf((a - inst.center) / inst.sigma));
    }
    return total;
}

double hawkes_intensity(double t, const std::vector<double>& history, const HawkesParams& p) {
    double exc = 0.0;
    double prev = -std::numeric_limits<double>::infinity();
    for (double ti : history) {
        if (ti >= t) throw ValidationError("hawkes history entries must precede t");
        if (ti <= prev) throw ValidationError("hawkes history must be strictly increasing");
        prev = ti;
        exc += std::exp(-p.decay * (t - ti));
    }
    return p.mu + p.beta * exc;
}

std::vector<EventSequence> simulate_thinning(const ProcessSpec& spec, const SimConfig& cfg) {
    validate_for_simulation(spec);
    if (cfg.target_len < 1 && cfg.horizon <= 0.0) {
        throw ValidationError("target_len must be >= 1 (or use horizon mode)");
    }
    if (const auto* combo = std::get_if<IpSeCombo>(&spec)) {
        const int n_ip = cfg.n_seqs / 2;
        const int n_se = cfg.n_seqs - n_ip;
        auto seqs = simulate_many(ProcessSpec{combo->ip}, cfg, "ip", n_ip, 0);
        auto se = simulate_many(ProcessSpec{combo->se}, cfg, "se", n_se, std::uint64_t(n_ip));
        seqs.insert(seqs.end(), std::make_move_iterator(se.begin()),
                    std::make_move_iterator(se.end()));
        Rng rng = make_stream(cfg.seed, 0xC0B);
        for (std::size_t i = seqs.size(); i > 1; --i) {
            std::swap(seqs[i - 1], seqs[rng() % i]);
        }
        return seqs;
    }
    return simulate_many(spec, cfg, spec_prefix(spec), cfg.n_seqs, 0);
}

double ground_truth_loglik(const EventSequence& seq, const TruthSpec& spec) {
    const std::size_t n = seq.times.size();
    if (n == 0) throw ValidationError("cannot score an empty sequence");
    double total = 0.0;
    if (const auto* c = std::get_if<ConstantIntensity>(&spec)) {
        double prev = 0.0;
        for (double t : seq.times) {
            total += std::log(c->rate) - c->rate * (t - prev);
            prev = t;
        }
    } else if (const auto* p = std::get_if<PoissonBumpIntensity>(&spec)) {
        double prev = 0.0;
        for (double t : seq.times) {
            total += std::log(ip_intensity(t, *p)) - ip_compensator(prev, t, *p);
            prev = t;
        }
    } else if (const auto* h = std::get_if<HawkesParams>(&spec)) {
        double prev = 0.0;
        double exc = 0.0;  // excitation at prev, inclusive of the event at prev
        for (double t : seq.times) {
            const double dt = t - prev;
            const double decayed = exc * std::exp(-h->decay * dt);
            total += std::log(h->mu + h->beta * decayed);
            total -= h->mu * dt + h->beta / h->decay * exc * (1.0 - std::exp(-h->decay * dt));
            exc = decayed + 1.0;
            prev = t;
        }
    } else if (const auto* combo = std::get_if<IpSeCombo>(&spec)) {
        if (seq.id.rfind("ip-", 0) == 0) return ground_truth_loglik(seq, TruthSpec{combo->ip});
        if (seq.id.rfind("se-", 0) == 0) return ground_truth_loglik(seq, TruthSpec{combo->se});
        throw ValidationError("sequence '" + seq.id + "' carries no ip-/se- source prefix");
    } else {
        throw ValidationError("the switching law scores datasets, not event sequences");
    }
    return total / double(n);
}

double dataset_ground_truth_loglik(const Dataset& ds, const TruthSpec& spec) {
    if (const auto* sw = std::get_if<SwitchingSpec>(&spec)) {
        return switching_ground_truth_loglik(ds, *sw);
    }
    double total = 0.0;
    std::size_t events = 0;
    for (const auto& s : ds.sequences) {
        if (s.taus.empty()) continue;
        const EventSequence seq = from_inter_arrivals(s);
        total += ground_truth_loglik(seq, spec) * double(seq.times.size());
        events += seq.times.size();
    }
    if (events == 0) throw ValidationError("cannot score an empty dataset");
    return total / double(events);
}

std::vector<double> rescaled_gaps(const EventSequence& seq, const TruthSpec& spec) {
    std::vector<double> gaps;
    gaps.reserve(seq.times.size());
    if (const auto* c = std::get_if<ConstantIntensity>(&spec)) {
        double prev = 0.0;
        for (double t : seq.times) {
            gaps.push_back(c->rate * (t - prev));
            prev = t;
        }
    } else if (const auto* p = std::get_if<PoissonBumpIntensity>(&spec)) {
        double prev = 0.0;
        for (double t : seq.times) {
            gaps.push_back(ip_compensator(prev, t, *p));
            prev = t;
        }
    } else if (const auto* h = std::get_if<HawkesParams>(&spec)) {
        double prev = 0.0;
        double exc = 0.0;
        for (double t : seq.times) {
            const double dt = t - prev;
            gaps.push_back(h->mu * dt + h->beta / h->decay * exc * (1.0 - std::exp(-h->decay * dt)));
            exc = exc * std::exp(-h->decay * dt) + 1.0;
            prev = t;
        }
    } else {
        throw ValidationError("time rescaling requires a single point-process law");
    }
    return gaps;
}

Dataset simulate_switching(const SwitchingSpec& spec, std::uint64_t seed) {
    spec.validate();
    Dataset ds;
    ds.mode = DatasetMode::Unconstrained;
    ds.sequences.resize(static_cast<std::size_t>(spec.n_seqs));
    std::discrete_distribution<int> comp(spec.mix_weights.begin(), spec.mix_weights.end());
    for (int i = 0; i < spec.n_seqs; ++i) {
        Rng rng = make_stream(seed, std::uint64_t(i));
        auto& s = ds.sequences[static_cast<std::size_t>(i)];
        s.id = "sw-" + std::to_string(i);
        s.taus.reserve(static_cast<std::size_t>(spec.seq_len));
        auto comp_draw = comp;  // fresh distribution state per sequence
        for (int n = 1; n <= spec.seq_len; ++n) {
            double v;
            if (n % 2 == 1) {
                const int k = comp_draw(rng);
                std::normal_distribution<double> d(spec.mix_means[std::size_t(k)],
                                                   spec.mix_stds[std::size_t(k)]);
                v = d(rng);
            } else {
                std::normal_distribution<double> d(spec.even_mean, spec.even_std);
                v = d(rng);
            }
            s.taus.push_back(v);
        }
    }
    json info;
    info["process"] = truth_spec_to_json(TruthSpec{spec});
    info["seed"] = seed;
    ds.metadata_json = info.dump();
    return ds;
}

double switching_log_density(double value, int step_index_1based, const SwitchingSpec& spec) {
    if (step_index_1based % 2 == 0) {
        return gaussian_logpdf(value, spec.even_mean, spec.even_std);
    }
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(spec.mix_means.size());
    for (std::size_t k = 0; k < spec.mix_means.size(); ++k) {
        terms[k] = std::log(spec.mix_weights[k]) +
                   gaussian_logpdf(value, spec.mix_means[k], spec.mix_stds[k]);
        best = std::max(best, terms[k]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
}

double switching_ground_truth_loglik(const Dataset& ds, const SwitchingSpec& spec) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& s : ds.sequences) {
        for (std::size_t n = 0; n < s.taus.size(); ++n) {
            total += switching_log_density(s.taus[n], static_cast<int>(n) + 1, spec);
            ++count;
        }
    }
    if (count == 0) throw ValidationError("cannot score an empty dataset");
    return total / double(count);
}

Dataset sequences_to_dataset(const std::vector<EventSequence>& seqs,
                             const ProcessSpec& spec,
                             const SimConfig& cfg) {
    Dataset ds;
    ds.mode = DatasetMode::Positive;
    ds.sequences.reserve(seqs.size());
    for (const auto& s : seqs) ds.sequences.push_back(to_inter_arrivals(s));
    json info;
    info["process"] = process_spec_to_json(spec);
    info["seed"] = cfg.seed;
    info["length_mode"] = cfg.horizon > 0.0 ? "horizon" : "fixed_count";
    if (cfg.horizon > 0.0) info["horizon"] = cfg.horizon;
    ds.metadata_json = info.dump();
    return ds;
}

Dataset simulate_marked(const ProcessSpec& base,
                        int num_categories,
                        const MarkRule& rule,
                        const SimConfig& cfg) {
    if (num_categories < 2) throw ValidationError("marked simulation needs >= 2 categories");
    if (rule.noise < 0.0 || rule.noise >= 1.0) throw ValidationError("mark noise must be in [0,1)");
    auto seqs = simulate_thinning(base, cfg);
    Dataset ds = sequences_to_dataset(seqs, base, cfg);
    ds.num_categories = num_categories;

    std::vector<double> pooled;
    pooled.reserve(ds.total_events());
    for (const auto& s : ds.sequences) pooled.insert(pooled.end(), s.taus.begin(), s.taus.end());
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> edges;
    for (int k = 1; k < num_categories; ++k) {
        const std::size_t idx = static_cast<std::size_t>(
            std::floor(double(k) / double(num_categories) * double(pooled.size() - 1)));
        edges.push_back(pooled[idx]);
    }

    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        Rng rng = make_stream(cfg.seed ^ 0x6d61726bULL, std::uint64_t(i));
        auto& s = ds.sequences[i];
        s.marks.reserve(s.taus.size());
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (double tau : s.taus) {
            int m = 0;
            for (double e : edges) {
                if (tau > e) ++m;
            }
            if (rule.noise > 0.0 && u01(rng) < rule.noise) {
                std::uniform_int_distribution<int> other(0, num_categories - 2);
                int alt = other(rng);
                m = alt >= m ? alt + 1 : alt;
            }
            s.marks.push_back(m);
        }
    }

    json info = json::parse(ds.metadata_json);
    info["mark_rule"] = {{"kind", "quantile_bucket"}, {"noise", rule.noise}, {"edges", edges}};
    ds.metadata_json = info.dump();
    return ds;
}

json process_spec_to_json(const ProcessSpec& spec) {
    json j;
    if (const auto* c = std::get_if<ConstantIntensity>(&spec)) {
        j["kind"] = "poisson";
        j["rate"] = c->rate;
    } else if (const auto* p = std::get_if<PoissonBumpIntensity>(&spec)) {
        j["kind"] = "ip";
        j["alphas"] = p->alphas;
        j["centers"] = p->centers;
        j["sigmas"] = p->sigmas;
        j["period"] = p->period;
    } else if (const auto* h = std::get_if<HawkesParams>(&spec)) {
        j["kind"] = "se";
        j["mu"] = h->mu;
        j["beta"] = h->beta;
        j["decay"] = h->decay;
    } else if (const auto* combo = std::get_if<IpSeCombo>(&spec)) {
        j["kind"] = "ipse";
        j["ip"] = process_spec_to_json(ProcessSpec{combo->ip});
        j["se"] = process_spec_to_json(ProcessSpec{combo->se});
    }
    return j;
}

ProcessSpec process_spec_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "poisson") {
        ConstantIntensity c;
        c.rate = j.value("rate", 1.0);
        return c;
    }
    if (kind == "ip") {
        PoissonBumpIntensity p;
        if (j.contains("alphas")) p.alphas = j.at("alphas").get<std::vector<double>>();
        if (j.contains("centers")) p.centers = j.at("centers").get<std::vector<double>>();
        if (j.contains("sigmas")) p.sigmas = j.at("sigmas").get<std::vector<double>>();
        p.period = j.value("period", 0.0);
        p.validate();
        return p;
    }
    if (kind == "se") {
        HawkesParams h;
        h.mu = j.value("mu", 1.0);
        h.beta = j.value("beta", 0.8);
        h.decay = j.value("decay", 1.0);
        h.validate();
        return h;
    }
    if (kind == "ipse") {
        IpSeCombo combo;
        combo.ip = std::get<PoissonBumpIntensity>(process_spec_from_json(j.at("ip")));
        combo.se = std::get<HawkesParams>(process_spec_from_json(j.at("se")));
        return combo;
    }
    throw DataError("unknown process kind '" + kind + "'");
}

json truth_spec_to_json(const TruthSpec& spec) {
    if (const auto* sw = std::get_if<SwitchingSpec>(&spec)) {
        json j;
        j["kind"] = "switching";
        j["even_mean"] = sw->even_mean;
        j["even_std"] = sw->even_std;
        j["mix_means"] = sw->mix_means;
        j["mix_stds"] = sw->mix_stds;
        j["mix_weights"] = sw->mix_weights;
        j["seq_len"] = sw->seq_len;
        j["n_seqs"] = sw->n_seqs;
        return j;
    }
    if (const auto* c = std::get_if<ConstantIntensity>(&spec)) {
        return process_spec_to_json(ProcessSpec{*c});
    }
    if (const auto* p = std::get_if<PoissonBumpIntensity>(&spec)) {
        return process_spec_to_json(ProcessSpec{*p});
    }
    if (const auto* h = std::get_if<HawkesParams>(&spec)) {
        return process_spec_to_json(ProcessSpec{*h});
    }
    return process_spec_to_json(ProcessSpec{std::get<IpSeCombo>(spec)});
}

TruthSpec truth_spec_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "switching") {
        SwitchingSpec sw;
        sw.even_mean = j.value("even_mean", 4.0);
        sw.even_std = j.value("even_std", 1.0);
        if (j.contains("mix_means")) sw.mix_means = j.at("mix_means").get<std::vector<double>>();
        if (j.contains("mix_stds")) sw.mix_stds = j.at("mix_stds").get<std::vector<double>>();
        if (j.contains("mix_weights"))
            sw.mix_weights = j.at("mix_weights").get<std::vector<double>>();
        sw.seq_len = j.value("seq_len", 15);
        sw.n_seqs = j.value("n_seqs", 1000);
        sw.validate();
        return sw;
    }
    return std::visit([](const auto& s) -> TruthSpec { return s; }, process_spec_from_json(j));
}

std::optional<TruthSpec> truth_from_metadata(const Dataset& ds) {
    if (ds.metadata_json.empty()) return std::nullopt;
    json info = json::parse(ds.metadata_json, nullptr, /*allow_exceptions=*/false);
    if (info.is_discarded() || !info.contains("process")) return std::nullopt;
    return truth_spec_from_json(info.at("process"));
}

}  // namespace ppflow
