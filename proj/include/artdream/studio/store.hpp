#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <set>
#include <string>
#include <tuple>

#include "artdream/psychstats/stats.hpp"

namespace artdream::studio {

// Append-only ratings CSV in the psychstats format. Each accepted row is
// written and fsync'ed before append() returns.
class RatingStore {
public:
    // Creates the file with its header when missing. A final line without a
    // newline (torn write) is moved to `<path>.quarantine` and cut off.
    explicit RatingStore(std::filesystem::path path);
    ~RatingStore();
    RatingStore(const RatingStore&) = delete;
    RatingStore& operator=(const RatingStore&) = delete;

    enum class Outcome { appended, duplicate };
    Outcome append(const psychstats::RatingRecord& record);

    [[nodiscard]] bool contains(const std::string& participant, psychstats::Pair pair, psychstats::Speed speed) const;
    [[nodiscard]] std::string snapshot() const;  // whole file
    [[nodiscard]] std::size_t rows() const;
    [[nodiscard]] std::size_t quarantined_bytes() const noexcept { return quarantined_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    // JSON lines next to the CSV, for free-form client metadata.
    void append_display(const std::string& json_line);

private:
    using Key = std::tuple<std::string, psychstats::Pair, psychstats::Speed>;

    std::filesystem::path path_;
    int fd_ = -1;
    mutable std::mutex mu_;
    std::set<Key> taken_;
    std::size_t rows_ = 0;
    std::size_t quarantined_ = 0;
};

}  // namespace artdream::studio
