#pragma once

#include <string>
#include <vector>

#include "reviewkit/schema.hpp"

namespace reviewkit {

// Dataset statistics over a record list. The headline mean rating averages
// per-paper means of human review ratings; the per-review variant (pooling
// every review equally) is surfaced alongside it.
struct StatsTable {
    long count = 0;
    double mean_tokens = 0.0;
    double mean_rating_per_paper = 0.0;
    double mean_rating_per_review = 0.0;
    double accept_rate = 0.0;  // fraction in [0,1]
};

// Loads newline-delimited JSON records (UTF-8, one record per line).
// Invalid records abort the load with the offending line number.
std::vector<DatasetRecord> load_dataset(const std::string& path);

void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records);

StatsTable dataset_stats(const std::vector<DatasetRecord>& records);

} // namespace reviewkit
