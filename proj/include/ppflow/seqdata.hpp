#pragma once

#include "ppflow/common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace ppflow {

// Absolute event timestamps, strictly increasing, all >= 0.
struct EventSequence {
    std::string id;
    std::vector<double> times;
    std::vector<int> marks;  // empty when unmarked

    void validate(int num_categories = -1) const;
};

// Gaps between consecutive events; marks carried through from the source
// sequence when present.
struct InterArrivalSequence {
    std::string id;
    std::vector<double> taus;
    std::vector<int> marks;

    std::size_t size() const { return taus.size(); }
    bool marked() const { return !marks.empty(); }
};

enum class DatasetMode { Positive, Unconstrained };

std::string to_string(DatasetMode mode);
DatasetMode dataset_mode_from_string(const std::string& s);

struct TauStats {
    double mean = 0.0;
    double std = 0.0;  // population convention
};

struct Dataset {
    std::vector<InterArrivalSequence> sequences;
    DatasetMode mode = DatasetMode::Positive;
    std::optional<int> num_categories;
    std::optional<TauStats> stats;
    // Free-form provenance (process spec, seed, mark rule); persisted in the
    // JSONL meta line and used to recover ground-truth likelihoods.
    std::string metadata_json;

    std::size_t total_events() const;
    void validate() const;
};

InterArrivalSequence to_inter_arrivals(const EventSequence& seq);
EventSequence from_inter_arrivals(const InterArrivalSequence& ias);

// Deterministic shuffled split; train/val take floor(r*N), test the rest.
std::tuple<Dataset, Dataset, Dataset> split_dataset(const Dataset& ds,
                                                    double r_train,
                                                    double r_val,
                                                    double r_test,
                                                    std::uint64_t seed);

Dataset load_jsonl(const std::string& path);
void save_jsonl(const Dataset& ds, const std::string& path);

TauStats compute_stats(const Dataset& ds);

// Affine record mapping standardized values back to raw units.
struct Standardization {
    double mean = 0.0;
    double std = 1.0;

    double to_raw(double standardized) const { return mean + std * standardized; }
    double to_standardized(double raw) const { return (raw - mean) / std; }
    // Per-event correction: LL in raw units = LL in standardized units
    // - log(std). Identity-checked against a matching closed-form density.
    double loglik_correction() const;
};

std::pair<Dataset, Standardization> standardize(const Dataset& ds);

}  // namespace ppflow
