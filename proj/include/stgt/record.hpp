#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace stgt {

inline constexpr int kUnlabeled = -1;

/// One raw transaction row. Relation entity values are opaque strings;
/// an empty string means "no entity" and never produces edges.
struct TransactionRecord {
    std::string txn_id;
    int64_t timestamp = 0; // epoch seconds
    std::map<std::string, double> continuous;
    std::map<std::string, std::string> categorical;
    std::map<std::string, std::string> relations;
    int label = kUnlabeled; // 0 legitimate, 1 fraudulent, -1 unlabeled

    bool operator==(const TransactionRecord&) const = default;
};

} // namespace stgt
