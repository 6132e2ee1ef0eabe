#pragma once

#include <algorithm>
#include <cstddef>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dialogic {

// Thread-safe collector for notable pipeline events (parse fallbacks,
// degraded labels, skipped testimonies). Serialized sorted, so the output
// does not depend on worker scheduling.
class RunLog {
 public:
  void record(std::string kind, nlohmann::json detail = nlohmann::json::object()) {
    detail["event"] = std::move(kind);
    std::lock_guard lock(mu_);
    events_.push_back(std::move(detail));
  }

  std::size_t count(std::string_view kind) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [&](const auto& e) {
          return e["event"].template get<std::string>() == kind;
        }));
  }

  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    {
      std::lock_guard lock(mu_);
      for (const auto& e : events_) out.push_back(e.dump());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& l : lines()) out += l + "\n";
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> events_;
};

}  // namespace dialogic
