#pragma once

#include <string>

namespace mcduct {

enum class log_level { error = 0, info = 1, debug = 2 };

/// Global verbosity. Initialized from the SURROGATE_LOG environment variable
/// ("error" | "info" | "debug") on first use; defaults to info.
log_level current_log_level();
void set_log_level(log_level lv);
bool set_log_level(const std::string& name);  // returns false for unknown names

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace mcduct
