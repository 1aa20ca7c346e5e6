/**
 *  Copyright (c) 2026 by Contributors
 * @file log.cc
 */
#include "hfg/log.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>

namespace hfg::log {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("hfg");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] [%t] %v");
    const char* env = std::getenv("HFG_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return instance;
}

}  // namespace

void init_from_env() { logger(); }

void set_level(const std::string& level) {
  logger()->set_level(spdlog::level::from_str(level));
}

void debug(const std::string& msg) { logger()->debug(msg); }
void info(const std::string& msg) { logger()->info(msg); }
void warn(const std::string& msg) { logger()->warn(msg); }
void error(const std::string& msg) { logger()->error(msg); }

}  // namespace hfg::log
