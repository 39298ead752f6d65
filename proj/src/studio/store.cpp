#include "artdream/studio/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "artdream/error.hpp"

namespace artdream::studio {

namespace {

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_all(int fd, std::string_view bytes, const std::filesystem::path& p) {
    while (!bytes.empty()) {
        const ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError("write to " + p.string() + " failed: " + std::strerror(errno));
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    if (::fsync(fd) != 0) throw IoError("fsync of " + p.string() + " failed: " + std::strerror(errno));
}

void append_file(const std::filesystem::path& p, std::string_view bytes) {
    const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot open " + p.string() + ": " + std::strerror(errno));
    try {
        write_all(fd, bytes, p);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
}

}  // namespace

RatingStore::RatingStore(std::filesystem::path path) : path_(std::move(path)) {
    const std::string header = std::string(psychstats::kRatingsHeader) + "\n";
    std::string content;
    std::error_code ec;
    if (std::filesystem::exists(path_, ec)) content = read_all(path_);

    if (!content.empty() && content.back() != '\n') {
        const auto last = content.rfind('\n');
        const std::size_t keep = last == std::string::npos ? 0 : last + 1;
        append_file(path_.string() + ".quarantine", content.substr(keep) + "\n");
        quarantined_ = content.size() - keep;
        std::filesystem::resize_file(path_, keep, ec);
        if (ec) throw IoError("cannot truncate " + path_.string() + ": " + ec.message());
        content.resize(keep);
    }

    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open ratings file " + path_.string() + ": " + std::strerror(errno));

    if (content.empty()) {
        write_all(fd_, header, path_);
        return;
    }
    const auto res = psychstats::ingest_ratings(content);  // FormatError on a foreign header
    for (const auto* set : {&res.records, &res.excluded_records}) {
        for (const auto& r : *set) taken_.emplace(r.participant_id, r.pair, r.speed);
    }
    rows_ = res.records.size() + res.excluded_records.size() + res.rejected.size();
}

RatingStore::~RatingStore() {
    if (fd_ >= 0) ::close(fd_);
}

RatingStore::Outcome RatingStore::append(const psychstats::RatingRecord& record) {
    record.validate();
    const std::string line = psychstats::to_csv_row(record) + "\n";
    std::lock_guard lock(mu_);
    Key key{record.participant_id, record.pair, record.speed};
    if (taken_.contains(key)) return Outcome::duplicate;
    write_all(fd_, line, path_);
    taken_.insert(std::move(key));
    ++rows_;
    return Outcome::appended;
}

bool RatingStore::contains(const std::string& participant, psychstats::Pair pair, psychstats::Speed speed) const {
    std::lock_guard lock(mu_);
    return taken_.contains(Key{participant, pair, speed});
}

std::string RatingStore::snapshot() const {
    std::lock_guard lock(mu_);
    return read_all(path_);
}

std::size_t RatingStore::rows() const {
    std::lock_guard lock(mu_);
    return rows_;
}

void RatingStore::append_display(const std::string& json_line) {
    std::lock_guard lock(mu_);
    append_file(path_.string() + ".display.jsonl", json_line + "\n");
}

}  // namespace artdream::studio
