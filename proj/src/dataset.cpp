#include "reviewkit/dataset.hpp"

#include <fstream>
#include <set>

#include "reviewkit/json_io.hpp"
#include "reviewkit/text.hpp"

namespace reviewkit {

std::vector<DatasetRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);

    std::vector<DatasetRecord> records;
    std::set<std::string> seen_ids;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        try {
            Json j = Json::parse(line);
            DatasetRecord record = record_from_json(j);
            if (!seen_ids.insert(record.paper.id).second) {
                throw Error(ErrorCode::FormatError, "duplicate id " + record.paper.id);
            }
            records.push_back(std::move(record));
        } catch (const Error& e) {
            throw Error(ErrorCode::FormatError,
                        path + ":" + std::to_string(line_number) + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::FormatError,
                        path + ":" + std::to_string(line_number) + ": " + e.what());
        }
    }
    if (records.empty()) throw Error(ErrorCode::EmptyDataset, path);
    return records;
}

void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    for (const auto& record : records) {
        out << record_to_json(record).dump() << '\n';
    }
    if (!out.good()) throw Error(ErrorCode::IoError, "write failed: " + path);
}

StatsTable dataset_stats(const std::vector<DatasetRecord>& records) {
    if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no records");

    StatsTable stats;
    stats.count = static_cast<long>(records.size());
    double token_sum = 0.0;
    double paper_mean_sum = 0.0;
    double review_rating_sum = 0.0;
    long review_count = 0;
    long accepted = 0;
    for (const auto& record : records) {
        token_sum += static_cast<double>(record.paper.token_estimate);
        double rating_sum = 0.0;
        for (const auto& review : record.human_reviews.reviews) {
            rating_sum += review.scores.rating;
            review_rating_sum += review.scores.rating;
        }
        review_count += static_cast<long>(record.human_reviews.reviews.size());
        paper_mean_sum += rating_sum / static_cast<double>(record.human_reviews.reviews.size());
        if (record.decision == Decision::Accept) ++accepted;
    }
    stats.mean_tokens = token_sum / static_cast<double>(stats.count);
    stats.mean_rating_per_paper = paper_mean_sum / static_cast<double>(stats.count);
    stats.mean_rating_per_review = review_rating_sum / static_cast<double>(review_count);
    stats.accept_rate = static_cast<double>(accepted) / static_cast<double>(stats.count);
    return stats;
}

} // namespace reviewkit
