#include "ppflow/seqdata.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ppflow {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_double_array(const std::vector<double>& vs) {
    std::string out = "[";
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ",";
        out += fmt_double(vs[i]);
    }
    out += "]";
    return out;
}

}  // namespace

void EventSequence::validate(int num_categories) const {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0) {
            throw ValidationError("sequence '" + id + "': event times must be finite and >= 0");
        }
        // t_0 = 0 is the virtual origin, so strictness applies from there.
        const double prev = i == 0 ? 0.0 : times[i - 1];
        if (times[i] <= prev) {
            throw ValidationError("sequence '" + id + "': event times must be strictly increasing");
        }
    }
    if (!marks.empty()) {
        if (marks.size() != times.size()) {
            throw ValidationError("sequence '" + id + "': marks length must match times length");
        }
        for (int m : marks) {
            if (m < 0 || (num_categories >= 0 && m >= num_categories)) {
                throw ValidationError("sequence '" + id + "': mark out of range");
            }
        }
    }
}

std::string to_string(DatasetMode mode) {
    return mode == DatasetMode::Positive ? "positive" : "unconstrained";
}

DatasetMode dataset_mode_from_string(const std::string& s) {
    if (s == "positive") return DatasetMode::Positive;
    if (s == "unconstrained") return DatasetMode::Unconstrained;
    throw DataError("unknown dataset mode '" + s + "'");
}

std::size_t Dataset::total_events() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
}

void Dataset::validate() const {
    for (const auto& s : sequences) {
        for (double tau : s.taus) {
            if (!std::isfinite(tau)) {
                throw ValidationError("sequence '" + s.id + "': non-finite inter-arrival");
            }
            if (mode == DatasetMode::Positive && tau <= 0.0) {
                throw ValidationError("sequence '" + s.id +
                                      "': non-positive inter-arrival in positive mode");
            }
        }
        if (!s.marks.empty()) {
            if (s.marks.size() != s.taus.size()) {
                throw ValidationError("sequence '" + s.id + "': marks length mismatch");
            }
            for (int m : s.marks) {
                if (m < 0 || (num_categories && m >= *num_categories)) {
                    throw ValidationError("sequence '" + s.id + "': mark out of range");
                }
            }
        }
    }
    if (stats && stats->std <= 0.0) {
        throw ValidationError("dataset stats.std must be > 0");
    }
}

InterArrivalSequence to_inter_arrivals(const EventSequence& seq) {
    seq.validate();
    InterArrivalSequence out;
    out.id = seq.id;
    out.marks = seq.marks;
    out.taus.reserve(seq.times.size());
    double prev = 0.0;
    for (double t : seq.times) {
        out.taus.push_back(t - prev);
        prev = t;
    }
    return out;
}

EventSequence from_inter_arrivals(const InterArrivalSequence& ias) {
    EventSequence out;
    out.id = ias.id;
    out.marks = ias.marks;
    out.times.reserve(ias.taus.size());
    double t = 0.0;
    for (double tau : ias.taus) {
        if (!std::isfinite(tau) || tau <= 0.0) {
            throw ValidationError("sequence '" + ias.id +
                                  "': inter-arrivals must be positive to form event times");
        }
        t += tau;
        out.times.push_back(t);
    }
    return out;
}

std::tuple<Dataset, Dataset, Dataset> split_dataset(const Dataset& ds,
                                                    double r_train,
                                                    double r_val,
                                                    double r_test,
                                                    std::uint64_t seed) {
    if (r_train <= 0.0 || r_val <= 0.0 || r_test <= 0.0 ||
        std::abs(r_train + r_val + r_test - 1.0) > 1e-9) {
        throw ValidationError("split ratios must be positive and sum to 1");
    }
    const std::size_t n = ds.sequences.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with an explicit stream so the partition is reproducible.
    Rng rng = make_stream(seed, /*stream=*/0x5917);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = rng() % i;
        std::swap(order[i - 1], order[j]);
    }
    const std::size_t n_train = static_cast<std::size_t>(std::floor(r_train * double(n)));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(r_val * double(n)));

    auto take = [&](std::size_t begin, std::size_t end) {
        Dataset out;
        out.mode = ds.mode;
        out.num_categories = ds.num_categories;
        out.stats = ds.stats;
        out.metadata_json = ds.metadata_json;
        out.sequences.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) out.sequences.push_back(ds.sequences[order[k]]);
        return out;
    };
    return {take(0, n_train), take(n_train, n_train + n_val), take(n_train + n_val, n)};
}

TauStats compute_stats(const Dataset& ds) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : ds.sequences) {
        for (double tau : s.taus) {
            sum += tau;
            sq += tau * tau;
            ++n;
        }
    }
    if (n == 0) throw ValidationError("cannot compute stats of an empty dataset");
    TauStats st;
    st.mean = sum / double(n);
    st.std = std::sqrt(std::max(0.0, sq / double(n) - st.mean * st.mean));
    return st;
}

double Standardization::loglik_correction() const { return -std::log(std); }

std::pair<Dataset, Standardization> standardize(const Dataset& ds) {
    if (ds.sequences.empty()) throw ValidationError("cannot standardize an empty dataset");
    const TauStats st = compute_stats(ds);
    if (st.std <= 0.0) throw ValidationError("cannot standardize: zero variance");
    Standardization rec{st.mean, st.std};
    Dataset out = ds;
    out.mode = DatasetMode::Unconstrained;
    out.stats = st;
    for (auto& s : out.sequences) {
        for (double& tau : s.taus) tau = rec.to_standardized(tau);
    }
    return {std::move(out), rec};
}

void save_jsonl(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    std::string meta = "{\"_meta\":{\"mode\":\"" + to_string(ds.mode) + "\"";
    if (ds.num_categories) meta += ",\"num_categories\":" + std::to_string(*ds.num_categories);
    if (ds.stats) {
        meta += ",\"stats\":{\"mean\":" + fmt_double(ds.stats->mean) +
                ",\"std\":" + fmt_double(ds.stats->std) + "}";
    }
    if (!ds.metadata_json.empty()) meta += ",\"info\":" + ds.metadata_json;
    meta += "}}";
    f << meta << "\n";
    for (const auto& s : ds.sequences) {
        std::string line = "{\"id\":" + json(s.id).dump() + ",\"taus\":" + fmt_double_array(s.taus);
        if (!s.marks.empty()) {
            line += ",\"marks\":[";
            for (std::size_t i = 0; i < s.marks.size(); ++i) {
                if (i) line += ",";
                line += std::to_string(s.marks[i]);
            }
            line += "]";
        }
        line += "}";
        f << line << "\n";
    }
    if (!f) throw DataError("write failed for '" + path + "'");
}

Dataset load_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open '" + path + "'");
    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool meta_allowed = true;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object()) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected a JSON object");
        }
        if (j.contains("_meta")) {
            if (!meta_allowed) {
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": _meta only allowed on line 1");
            }
            const json& m = j.at("_meta");
            if (m.contains("mode")) ds.mode = dataset_mode_from_string(m.at("mode").get<std::string>());
            if (m.contains("num_categories") && !m.at("num_categories").is_null()) {
                ds.num_categories = m.at("num_categories").get<int>();
            }
            if (m.contains("stats") && !m.at("stats").is_null()) {
                ds.stats = TauStats{m.at("stats").at("mean").get<double>(),
                                    m.at("stats").at("std").get<double>()};
            }
            if (m.contains("info")) ds.metadata_json = m.at("info").dump();
            meta_allowed = false;
            continue;
        }
        meta_allowed = false;
        InterArrivalSequence s;
        try {
            if (!j.contains("taus") || !j.at("taus").is_array()) {
                throw DataError("missing or non-array 'taus'");
            }
            s.id = j.value("id", "seq" + std::to_string(lineno));
            for (const auto& v : j.at("taus")) {
                if (!v.is_number()) throw DataError("'taus' entries must be numbers");
                s.taus.push_back(v.get<double>());
            }
            if (j.contains("marks")) {
                for (const auto& v : j.at("marks")) s.marks.push_back(v.get<int>());
            }
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        ds.sequences.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

}  // namespace ppflow
