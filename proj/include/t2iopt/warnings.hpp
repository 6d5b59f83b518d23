#pragma once

#include <string>
#include <vector>

#include <spdlog/spdlog.h>

namespace t2iopt {

/// Non-fatal diagnostics gathered by one task. Concurrent tasks each own a
/// list; the parent appends them in task-index order.
using Warnings = std::vector<std::string>;

inline void warn(Warnings& sink, std::string message) {
  spdlog::warn("{}", message);
  sink.push_back(std::move(message));
}

inline void append(Warnings& into, const Warnings& from) { into.insert(into.end(), from.begin(), from.end()); }

}  // namespace t2iopt
