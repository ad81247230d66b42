#pragma once

#include <functional>
#include <string>

namespace tpmr::log {

using Sink = std::function<void(const std::string&)>;

/// Installs a sink for warnings and returns the previous one. The default
/// sink writes "warning: <msg>" to stderr.
Sink set_warning_sink(Sink sink);

void warn(const std::string& message);

}  // namespace tpmr::log
