#include "mcduct/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace mcduct {

namespace {

std::atomic<int> g_level{-1};  // -1 = not yet initialized
std::mutex g_io_mutex;

int level_from_env() {
    const char* env = std::getenv("SURROGATE_LOG");
    if (env == nullptr) return static_cast<int>(log_level::info);
    std::string name(env);
    if (name == "error") return 0;
    if (name == "info") return 1;
    if (name == "debug") return 2;
    return static_cast<int>(log_level::info);
}

int effective_level() {
    int lv = g_level.load(std::memory_order_relaxed);
    if (lv < 0) {
        lv = level_from_env();
        g_level.store(lv, std::memory_order_relaxed);
    }
    return lv;
}

void emit(const char* tag, const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_io_mutex);
    std::fprintf(stderr, "%s %s\n", tag, msg.c_str());
}

}  // namespace

log_level current_log_level() { return static_cast<log_level>(effective_level()); }

void set_log_level(log_level lv) { g_level.store(static_cast<int>(lv)); }

bool set_log_level(const std::string& name) {
    if (name == "error") { set_log_level(log_level::error); return true; }
    if (name == "info") { set_log_level(log_level::info); return true; }
    if (name == "debug") { set_log_level(log_level::debug); return true; }
    return false;
}

void log_error(const std::string& msg) { emit("error:", msg); }

void log_info(const std::string& msg) {
    if (effective_level() >= 1) emit("info:", msg);
}

void log_debug(const std::string& msg) {
    if (effective_level() >= 2) emit("debug:", msg);
}

}  // namespace mcduct
