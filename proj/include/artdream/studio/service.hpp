#pragma once

#include <memory>
#include <string>

#include "artdream/studio/config.hpp"

namespace artdream::studio {

// HTTP study service.
//   GET  /api/plan?participant=ID
//   GET  /api/stimulus/{pair}/{speed}/manifest
//   GET  /api/stimulus/{pair}/{speed}/frames/{n}   (0-based, image/png)
//   POST /api/ratings                              201 / 400 / 409
//   GET  /api/export.csv
class StudyService {
public:
    explicit StudyService(StudyConfig config);  // validates and loads manifests
    ~StudyService();
    StudyService(const StudyService&) = delete;
    StudyService& operator=(const StudyService&) = delete;

    // Binds config.host / config.port and returns the bound port.
    int bind();
    void run();  // blocks until stop()
    void stop();

    [[nodiscard]] const StudyConfig& config() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace artdream::studio
